//! Markovian bisimilarity via signature refinement.
//!
//! All four checkers iterate the same scheme: start from the one-block
//! partition and split blocks by a per-state signature computed against the
//! current partition, until nothing splits. Signatures use exact rational
//! rate sums, so block membership is decided by equality, never tolerance.
//!
//! Integrated time: the signature of a state maps `(action name, block)` to
//! the summed exit rate. Orthogonal time: the signature pairs the set of
//! `(action name, block)` moves (classical strong bisimulation on the
//! action relation) with a delay-rate vector toward blocks, included only
//! when the variant's urgency condition applies to the state — for states
//! with no action at all under eagerness, always under laziness, and for
//! states with no τ move under maximal progress.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::mlts::{build_pair, BuildError, Label, Mlts};
use crate::rate::Rate;
use crate::semantics::{it_stepper, ot_stepper, RateComposer, SemanticsError};
use crate::terms::{ActionName, Calculus, ItTerm, OtTerm};

/// A partition of the state set, canonically numbered: block ids appear in
/// increasing order of their least state index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    block_of: Vec<usize>,
    num_blocks: usize,
}

impl Partition {
    fn uniform(n: usize) -> Partition {
        Partition {
            block_of: vec![0; n],
            num_blocks: if n == 0 { 0 } else { 1 },
        }
    }

    fn from_assignment(raw: Vec<usize>) -> Partition {
        let mut renumber: BTreeMap<usize, usize> = BTreeMap::new();
        let mut block_of = Vec::with_capacity(raw.len());
        for id in raw {
            let next = renumber.len();
            block_of.push(*renumber.entry(id).or_insert(next));
        }
        Partition {
            num_blocks: renumber.len(),
            block_of,
        }
    }

    pub fn num_states(&self) -> usize {
        self.block_of.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    pub fn block_of(&self, state: usize) -> usize {
        self.block_of[state]
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.block_of[a] == self.block_of[b]
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks];
        for (state, &b) in self.block_of.iter().enumerate() {
            out[b].push(state);
        }
        out
    }

    /// True when every block of `self` is contained in a block of
    /// `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        assert_eq!(self.num_states(), coarser.num_states());
        let mut image: BTreeMap<usize, usize> = BTreeMap::new();
        for state in 0..self.num_states() {
            let target = coarser.block_of(state);
            match image.get(&self.block_of(state)) {
                Some(&t) if t != target => return false,
                Some(_) => {}
                None => {
                    image.insert(self.block_of(state), target);
                }
            }
        }
        true
    }
}

#[derive(Serialize)]
struct PartitionJson<'a> {
    blocks: Vec<Vec<usize>>,
    variant: &'a str,
    stable: bool,
}

/// The stable partition in interchange form:
/// `{"blocks": [[..]], "variant": .., "stable": true}`.
pub fn partition_json(p: &Partition, variant: &str) -> String {
    serde_json::to_string_pretty(&PartitionJson {
        blocks: p.blocks(),
        variant,
        stable: true,
    })
    .expect("serializable")
}

/// Urgency reading encoded by an orthogonal-time checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OtVariant {
    Eager,
    Lazy,
    MaxProgress,
}

impl OtVariant {
    pub const ALL: [OtVariant; 3] = [OtVariant::Eager, OtVariant::Lazy, OtVariant::MaxProgress];

    pub fn name(self) -> &'static str {
        match self {
            OtVariant::Eager => "eager",
            OtVariant::Lazy => "lazy",
            OtVariant::MaxProgress => "mp",
        }
    }
}

impl fmt::Display for OtVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OtVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eager" => Ok(OtVariant::Eager),
            "lazy" => Ok(OtVariant::Lazy),
            "mp" => Ok(OtVariant::MaxProgress),
            other => Err(format!(
                "unknown variant `{other}` (use eager, lazy or mp)"
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BisimError {
    #[error("the system is truncated; no equivalence judgment can be made")]
    TruncatedInput,
    #[error("expected a {expected} system, got {got}")]
    WrongCalculus { expected: Calculus, got: Calculus },
}

fn refine<Sig, F>(n: usize, signature: F, roots: Option<(usize, usize)>) -> RefineOutcome<Sig>
where
    Sig: Ord + Clone,
    F: Fn(usize, &Partition) -> Sig,
{
    let mut part = Partition::uniform(n);
    let mut separation = None;
    let mut round = 0;
    loop {
        round += 1;
        let sigs: Vec<Sig> = (0..n).map(|s| signature(s, &part)).collect();
        let mut ids: BTreeMap<(usize, &Sig), usize> = BTreeMap::new();
        let mut raw = Vec::with_capacity(n);
        for s in 0..n {
            let key = (part.block_of(s), &sigs[s]);
            let next = ids.len();
            raw.push(*ids.entry(key).or_insert(next));
        }
        let next_part = Partition::from_assignment(raw);
        if let Some((r1, r2)) = roots {
            if separation.is_none()
                && part.same_block(r1, r2)
                && !next_part.same_block(r1, r2)
            {
                separation = Some(Separation {
                    round,
                    left: sigs[r1].clone(),
                    right: sigs[r2].clone(),
                });
            }
        }
        let stable = next_part.num_blocks() == part.num_blocks();
        part = next_part;
        if stable {
            return RefineOutcome { part, separation };
        }
    }
}

struct RefineOutcome<Sig> {
    part: Partition,
    separation: Option<Separation<Sig>>,
}

struct Separation<Sig> {
    round: usize,
    left: Sig,
    right: Sig,
}

type ItSig = BTreeMap<(ActionName, usize), Rate>;

fn it_outcome<S>(m: &Mlts<S>, roots: Option<(usize, usize)>) -> RefineOutcome<ItSig> {
    let adjacency = m.outgoing();
    refine(
        m.num_states(),
        |state, part| {
            let mut sig = ItSig::new();
            for (label, dst, mult) in &adjacency[state] {
                let Label::ItAct { name, rate } = label else {
                    continue;
                };
                *sig.entry((name.clone(), part.block_of(*dst)))
                    .or_insert_with(Rate::zero) += &rate.scaled(*mult);
            }
            sig
        },
        roots,
    )
}

/// Coarsest integrated-time Markovian bisimulation on a completed system:
/// states are identified exactly when, for every action name and every
/// block of the result, their exit rates agree.
pub fn bisim_it<S>(m: &Mlts<S>) -> Result<Partition, BisimError> {
    if m.calculus != Calculus::It {
        return Err(BisimError::WrongCalculus {
            expected: Calculus::It,
            got: m.calculus,
        });
    }
    if m.truncated {
        return Err(BisimError::TruncatedInput);
    }
    Ok(it_outcome(m, None).part)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct OtSig {
    actions: BTreeSet<(ActionName, usize)>,
    rates: Option<BTreeMap<usize, Rate>>,
}

fn ot_outcome<S>(
    m: &Mlts<S>,
    variant: OtVariant,
    roots: Option<(usize, usize)>,
) -> RefineOutcome<OtSig> {
    let adjacency = m.outgoing();
    let n = m.num_states();
    let mut has_action = vec![false; n];
    let mut has_tau = vec![false; n];
    for (state, out) in adjacency.iter().enumerate() {
        for (label, _, _) in out {
            if let Label::OtAct { name } = label {
                has_action[state] = true;
                if name.is_tau() {
                    has_tau[state] = true;
                }
            }
        }
    }
    let applies = |state: usize| match variant {
        OtVariant::Eager => !has_action[state],
        OtVariant::Lazy => true,
        OtVariant::MaxProgress => !has_tau[state],
    };
    refine(
        n,
        |state, part| {
            let mut actions = BTreeSet::new();
            let mut rates: BTreeMap<usize, Rate> = BTreeMap::new();
            for (label, dst, mult) in &adjacency[state] {
                match label {
                    Label::OtAct { name } => {
                        actions.insert((name.clone(), part.block_of(*dst)));
                    }
                    Label::OtTime { rate } => {
                        *rates
                            .entry(part.block_of(*dst))
                            .or_insert_with(Rate::zero) += &rate.scaled(*mult);
                    }
                    Label::ItAct { .. } => {}
                }
            }
            OtSig {
                actions,
                rates: applies(state).then_some(rates),
            }
        },
        roots,
    )
}

/// Coarsest orthogonal-time Markovian bisimulation for the chosen variant.
pub fn bisim_ot<S>(m: &Mlts<S>, variant: OtVariant) -> Result<Partition, BisimError> {
    if m.calculus != Calculus::Ot {
        return Err(BisimError::WrongCalculus {
            expected: Calculus::Ot,
            got: m.calculus,
        });
    }
    if m.truncated {
        return Err(BisimError::TruncatedInput);
    }
    Ok(ot_outcome(m, variant, None).part)
}

/// Why two root states landed in different blocks: the refinement round and
/// the first signature component telling them apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Distinguishing {
    pub round: usize,
    pub detail: String,
}

impl fmt::Display for Distinguishing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "separated in round {}: {}", self.round, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    Inequivalent(Distinguishing),
    /// Exploration hit the state bound before closing either term.
    Inconclusive,
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent)
    }
}

fn describe_it_separation(sep: &Separation<ItSig>) -> Distinguishing {
    let keys: BTreeSet<&(ActionName, usize)> = sep.left.keys().chain(sep.right.keys()).collect();
    for key in keys {
        let l = sep.left.get(key).cloned().unwrap_or_else(Rate::zero);
        let r = sep.right.get(key).cloned().unwrap_or_else(Rate::zero);
        if l != r {
            return Distinguishing {
                round: sep.round,
                detail: format!(
                    "exit rate via `{}` toward block {} is {l} on the left, {r} on the right",
                    key.0, key.1
                ),
            };
        }
    }
    Distinguishing {
        round: sep.round,
        detail: "signatures differ".to_string(),
    }
}

fn describe_ot_separation(sep: &Separation<OtSig>, variant: OtVariant) -> Distinguishing {
    for (name, block) in sep.left.actions.symmetric_difference(&sep.right.actions) {
        let side = if sep.left.actions.contains(&(name.clone(), *block)) {
            "left"
        } else {
            "right"
        };
        return Distinguishing {
            round: sep.round,
            detail: format!(
                "action `{name}` toward block {block} is offered by the {side} side only"
            ),
        };
    }
    match (&sep.left.rates, &sep.right.rates) {
        (Some(l), Some(r)) => {
            let keys: BTreeSet<&usize> = l.keys().chain(r.keys()).collect();
            for block in keys {
                let lv = l.get(block).cloned().unwrap_or_else(Rate::zero);
                let rv = r.get(block).cloned().unwrap_or_else(Rate::zero);
                if lv != rv {
                    return Distinguishing {
                        round: sep.round,
                        detail: format!(
                            "delay rate toward block {block} is {lv} on the left, {rv} on the right ({variant} rate condition)"
                        ),
                    };
                }
            }
        }
        (Some(_), None) | (None, Some(_)) => {
            return Distinguishing {
                round: sep.round,
                detail: format!(
                    "the {variant} rate condition applies to only one of the two states"
                ),
            };
        }
        (None, None) => {}
    }
    Distinguishing {
        round: sep.round,
        detail: "signatures differ".to_string(),
    }
}

/// Joint check of two integrated-time terms: builds one system over the
/// union of both state spaces and compares the blocks of the two roots.
pub fn equivalent_it(
    left: &ItTerm,
    right: &ItTerm,
    composer: RateComposer,
    max_states: usize,
) -> Result<Verdict, SemanticsError> {
    let built = build_pair(
        left.clone(),
        right.clone(),
        Calculus::It,
        it_stepper(composer),
        max_states,
    );
    match built {
        Ok((m, r1, r2)) => {
            let outcome = it_outcome(&m, Some((r1, r2)));
            Ok(match outcome.separation {
                None => Verdict::Equivalent,
                Some(sep) => Verdict::Inequivalent(describe_it_separation(&sep)),
            })
        }
        Err(BuildError::Truncated(_)) => Ok(Verdict::Inconclusive),
        Err(BuildError::Semantics(e)) => Err(e),
    }
}

/// Joint check of two orthogonal-time terms under the chosen variant.
pub fn equivalent_ot(
    left: &OtTerm,
    right: &OtTerm,
    variant: OtVariant,
    max_states: usize,
) -> Result<Verdict, SemanticsError> {
    let built = build_pair(
        left.clone(),
        right.clone(),
        Calculus::Ot,
        ot_stepper(),
        max_states,
    );
    match built {
        Ok((m, r1, r2)) => {
            let outcome = ot_outcome(&m, variant, Some((r1, r2)));
            Ok(match outcome.separation {
                None => Verdict::Equivalent,
                Some(sep) => Verdict::Inequivalent(describe_ot_separation(&sep, variant)),
            })
        }
        Err(BuildError::Truncated(_)) => Ok(Verdict::Inconclusive),
        Err(BuildError::Semantics(e)) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlts::{build, DEFAULT_MAX_STATES};
    use crate::parser::{parse_it, parse_ot};

    fn check_it(a: &str, b: &str) -> Verdict {
        equivalent_it(
            &parse_it(a).unwrap(),
            &parse_it(b).unwrap(),
            RateComposer::Product,
            DEFAULT_MAX_STATES,
        )
        .unwrap()
    }

    fn check_ot(a: &str, b: &str, variant: OtVariant) -> Verdict {
        equivalent_ot(
            &parse_ot(a).unwrap(),
            &parse_ot(b).unwrap(),
            variant,
            DEFAULT_MAX_STATES,
        )
        .unwrap()
    }

    #[test]
    fn race_law_identifies_split_rates() {
        // <a,l1>.P + <a,l2>.P is bisimilar to <a,l1+l2>.P.
        let v = check_it("<a,1>.nil + <a,2>.nil", "<a,3>.nil");
        assert!(v.is_equivalent(), "{v:?}");
    }

    #[test]
    fn interleaving_equals_expansion_in_integrated_time() {
        let v = check_it(
            "<a,1>.nil ||{} <b,2>.nil",
            "<a,1>.<b,2>.nil + <b,2>.<a,1>.nil",
        );
        assert!(v.is_equivalent(), "{v:?}");
    }

    #[test]
    fn different_rates_are_distinguished() {
        let v = check_it("<a,1>.nil", "<a,2>.nil");
        let Verdict::Inequivalent(d) = v else {
            panic!("expected inequivalent, got {v:?}");
        };
        assert_eq!(d.round, 1);
        assert!(d.detail.contains("exit rate"), "{}", d.detail);
    }

    #[test]
    fn reflexivity() {
        let v = check_it("rec X.<a,1>.X", "rec X.<a,1>.X");
        assert!(v.is_equivalent());
        for variant in OtVariant::ALL {
            let v = check_ot("rec X.(1).a.X", "rec X.(1).a.X", variant);
            assert!(v.is_equivalent());
        }
    }

    #[test]
    fn interleaving_counterexample_under_ot_variants() {
        // Q1 interleaves delays and actions; Q2 sequentializes them. Lazy
        // observation tells them apart, eager does not, and maximal
        // progress agrees with eager exactly when the actions are internal.
        let q1 = "(1).a.nil ||{} (2).b.nil";
        let q2 = "(1).a.(2).b.nil + (2).b.(1).a.nil";
        assert!(matches!(
            check_ot(q1, q2, OtVariant::Lazy),
            Verdict::Inequivalent(_)
        ));
        assert!(check_ot(q1, q2, OtVariant::Eager).is_equivalent());
        assert!(matches!(
            check_ot(q1, q2, OtVariant::MaxProgress),
            Verdict::Inequivalent(_)
        ));

        let q1_tau = "(1).tau.nil ||{} (2).tau.nil";
        let q2_tau = "(1).tau.(2).tau.nil + (2).tau.(1).tau.nil";
        assert!(check_ot(q1_tau, q2_tau, OtVariant::MaxProgress).is_equivalent());
        assert!(check_ot(q1_tau, q2_tau, OtVariant::Eager).is_equivalent());
    }

    #[test]
    fn spurious_deadlock_counterexample() {
        // P3 and P4 are integrated-time bisimilar, but their orthogonal-time
        // translations differ under eagerness and maximal progress because
        // of the deadlocked delay target.
        let p3 = "<a,1>.nil";
        let p4 = "(<a,1>.nil + <b,2>.nil) ||{b} nil";
        assert!(check_it(p3, p4).is_equivalent());

        let q3 = "(1).a.nil";
        let q4 = "((1).a.nil + (2).b.nil) ||{b} nil";
        assert!(matches!(
            check_ot(q3, q4, OtVariant::Eager),
            Verdict::Inequivalent(_)
        ));
        assert!(matches!(
            check_ot(q3, q4, OtVariant::MaxProgress),
            Verdict::Inequivalent(_)
        ));
    }

    #[test]
    fn mp_characterizing_laws() {
        assert!(check_ot("a.nil + a.nil", "a.nil", OtVariant::MaxProgress).is_equivalent());
        assert!(check_ot("(1).nil + (2).nil", "(3).nil", OtVariant::MaxProgress).is_equivalent());
        // τ wins over time under maximal progress.
        assert!(check_ot(
            "tau.a.nil + (5).b.nil",
            "tau.a.nil",
            OtVariant::MaxProgress
        )
        .is_equivalent());
    }

    #[test]
    fn truncation_gives_inconclusive() {
        let t1 = parse_it("rec X.<a,1>.(X ||{} X)").unwrap();
        let t2 = parse_it("nil").unwrap();
        let v = equivalent_it(&t1, &t2, RateComposer::Product, 8).unwrap();
        assert_eq!(v, Verdict::Inconclusive);
    }

    #[test]
    fn truncated_systems_are_rejected_by_checkers() {
        let t = parse_it("rec X.<a,1>.(X ||{} X)").unwrap();
        let partial = build(t, Calculus::It, it_stepper(RateComposer::Product), 8)
            .unwrap_err()
            .into_partial()
            .unwrap();
        assert_eq!(bisim_it(&partial), Err(BisimError::TruncatedInput));
    }

    #[test]
    fn partition_json_shape() {
        let m = build(
            parse_it("<a,1>.nil + <a,1>.nil").unwrap(),
            Calculus::It,
            it_stepper(RateComposer::Product),
            DEFAULT_MAX_STATES,
        )
        .unwrap();
        let p = bisim_it(&m).unwrap();
        let json = partition_json(&p, "it");
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["stable"], serde_json::Value::Bool(true));
        assert_eq!(v["variant"], "it");
        assert_eq!(v["blocks"].as_array().unwrap().len(), p.num_blocks());
    }

    #[test]
    fn refinement_relation_between_partitions() {
        let fine = Partition::from_assignment(vec![0, 1, 2, 1]);
        let coarse = Partition::from_assignment(vec![0, 1, 0, 1]);
        assert!(fine.refines(&coarse));
        assert!(!coarse.refines(&fine));
        assert!(fine.refines(&fine));
    }
}
