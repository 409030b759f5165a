//! Shared helpers for the integration suites: a brute-force
//! greatest-fixed-point bisimilarity oracle, independent of the signature
//! refinement it validates.
//!
//! The oracle keeps a relation over all state pairs, starting from the full
//! relation and removing violating pairs round by round until stable.
//! Destination sets range over the classes of the current relation,
//! identified by their least member.

use markcalc::bisim::{OtVariant, Partition};
use markcalc::mlts::{Label, Mlts};
use markcalc::rate::Rate;
use markcalc::terms::ActionName;

use std::collections::BTreeMap;

type Relation = Vec<Vec<bool>>;

fn full_relation(n: usize) -> Relation {
    vec![vec![true; n]; n]
}

/// Least equivalent state under `rel`; well defined while `rel` is an
/// equivalence.
fn representative(rel: &Relation, s: usize) -> usize {
    (0..rel.len()).find(|&k| rel[s][k]).unwrap()
}

pub fn gfp_relation_it<S>(m: &Mlts<S>) -> Relation {
    let n = m.num_states();
    let adjacency = m.outgoing();
    let mut rel = full_relation(n);
    loop {
        let reps: Vec<usize> = (0..n).map(|s| representative(&rel, s)).collect();
        let sig = |s: usize| -> BTreeMap<(ActionName, usize), Rate> {
            let mut out = BTreeMap::new();
            for (label, dst, mult) in &adjacency[s] {
                if let Label::ItAct { name, rate } = label {
                    *out.entry((name.clone(), reps[*dst]))
                        .or_insert_with(Rate::zero) += &rate.scaled(*mult);
                }
            }
            out
        };
        let sigs: Vec<_> = (0..n).map(sig).collect();
        let mut changed = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if rel[i][j] && sigs[i] != sigs[j] {
                    rel[i][j] = false;
                    rel[j][i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}

pub fn gfp_relation_ot<S>(m: &Mlts<S>, variant: OtVariant) -> Relation {
    let n = m.num_states();
    let adjacency = m.outgoing();
    let mut has_action = vec![false; n];
    let mut has_tau = vec![false; n];
    for (s, out) in adjacency.iter().enumerate() {
        for (label, _, _) in out {
            if let Label::OtAct { name } = label {
                has_action[s] = true;
                if name.is_tau() {
                    has_tau[s] = true;
                }
            }
        }
    }
    let applies = |s: usize| match variant {
        OtVariant::Eager => !has_action[s],
        OtVariant::Lazy => true,
        OtVariant::MaxProgress => !has_tau[s],
    };
    let mut rel = full_relation(n);
    loop {
        let reps: Vec<usize> = (0..n).map(|s| representative(&rel, s)).collect();
        let action_moves = |s: usize| -> Vec<(ActionName, usize)> {
            adjacency[s]
                .iter()
                .filter_map(|(label, dst, _)| match label {
                    Label::OtAct { name } => Some((name.clone(), *dst)),
                    _ => None,
                })
                .collect()
        };
        let rates = |s: usize| -> BTreeMap<usize, Rate> {
            let mut out = BTreeMap::new();
            for (label, dst, mult) in &adjacency[s] {
                if let Label::OtTime { rate } = label {
                    *out.entry(reps[*dst]).or_insert_with(Rate::zero) += &rate.scaled(*mult);
                }
            }
            out
        };
        let mut changed = false;
        for i in 0..n {
            for j in (i + 1)..n {
                if !rel[i][j] {
                    continue;
                }
                // Classical action matching, both directions.
                let ok_actions = action_moves(i).iter().all(|(a, it)| {
                    action_moves(j)
                        .iter()
                        .any(|(b, jt)| a == b && rel[*it][*jt])
                }) && action_moves(j).iter().all(|(a, jt)| {
                    action_moves(i)
                        .iter()
                        .any(|(b, it)| a == b && rel[*jt][*it])
                });
                // Exit-rate comparison whenever the variant's condition
                // holds of both states.
                let ok_rates = if applies(i) && applies(j) {
                    rates(i) == rates(j)
                } else {
                    true
                };
                if !(ok_actions && ok_rates) {
                    rel[i][j] = false;
                    rel[j][i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return rel;
        }
    }
}

/// The refinement checker's partition agrees with an oracle relation when
/// same-block and related coincide on every pair.
pub fn partition_matches(p: &Partition, rel: &Relation) -> bool {
    let n = rel.len();
    (0..n).all(|i| (0..n).all(|j| p.same_block(i, j) == rel[i][j]))
}
