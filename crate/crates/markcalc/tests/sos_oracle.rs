//! Transition multiplicities against an independent proof enumerator.
//!
//! The oracle builds explicit derivation trees, one per proof, with no
//! merging along the way; the multiplicity of a transition is then the
//! plain count of proof trees deriving it. The production stepper merges
//! counts as it goes, so agreement here pins the bookkeeping. Terms of
//! height up to three over a two-name, two-rate alphabet are checked
//! exhaustively (the height-four closure of that alphabet is in the tens
//! of millions, so beyond three a seeded random sample of deeper, richer
//! terms stands in).

use std::collections::{BTreeMap, BTreeSet};

use markcalc::corpus::{GenConfig, TermGen};
use markcalc::parser::{parse_it, parse_ot};
use markcalc::rate::Rate;
use markcalc::semantics::{step_it, step_ot_actions, step_ot_time, RateComposer};
use markcalc::terms::{
    check_well_formed_it, check_well_formed_ot, unfold_it, unfold_ot, ActionName, ItTerm, OtTerm,
    Relabeling, VisName,
};

/// A derivation tree for one integrated-time transition.
#[derive(Debug, Clone, PartialEq, Eq)]
enum ItProof {
    Pre,
    Alt1(Box<ItProof>),
    Alt2(Box<ItProof>),
    Par1(Box<ItProof>),
    Par2(Box<ItProof>),
    Syn(Box<ItProof>, Box<ItProof>),
    Hid(Box<ItProof>),
    Rel(Box<ItProof>),
    Rec(Box<ItProof>),
}

fn it_proofs(
    t: &ItTerm,
    composer: RateComposer,
) -> Vec<(ActionName, Rate, ItTerm, ItProof)> {
    match t {
        ItTerm::Nil | ItTerm::Var(_) => Vec::new(),
        ItTerm::Prefix(a, rate, p) => {
            vec![(a.clone(), rate.clone(), (**p).clone(), ItProof::Pre)]
        }
        ItTerm::Choice(l, r) => {
            let mut out: Vec<_> = it_proofs(l, composer)
                .into_iter()
                .map(|(a, rate, target, proof)| (a, rate, target, ItProof::Alt1(Box::new(proof))))
                .collect();
            out.extend(it_proofs(r, composer).into_iter().map(
                |(a, rate, target, proof)| (a, rate, target, ItProof::Alt2(Box::new(proof))),
            ));
            out
        }
        ItTerm::Par(l, r, sync) => {
            let ls = it_proofs(l, composer);
            let rs = it_proofs(r, composer);
            let in_sync = |a: &ActionName| a.as_visible().is_some_and(|v| sync.contains(v));
            let mut out = Vec::new();
            for (a, rate, target, proof) in &ls {
                if !in_sync(a) {
                    out.push((
                        a.clone(),
                        rate.clone(),
                        ItTerm::par((*target).clone(), (**r).clone(), sync.clone()),
                        ItProof::Par1(Box::new(proof.clone())),
                    ));
                }
            }
            for (a, rate, target, proof) in &rs {
                if !in_sync(a) {
                    out.push((
                        a.clone(),
                        rate.clone(),
                        ItTerm::par((**l).clone(), (*target).clone(), sync.clone()),
                        ItProof::Par2(Box::new(proof.clone())),
                    ));
                }
            }
            for (la, lrate, ltarget, lproof) in &ls {
                if !in_sync(la) {
                    continue;
                }
                for (ra, rrate, rtarget, rproof) in &rs {
                    if ra == la {
                        out.push((
                            la.clone(),
                            composer.compose(lrate, rrate),
                            ItTerm::par((*ltarget).clone(), (*rtarget).clone(), sync.clone()),
                            ItProof::Syn(Box::new(lproof.clone()), Box::new(rproof.clone())),
                        ));
                    }
                }
            }
            out
        }
        ItTerm::Hide(p, hidden) => it_proofs(p, composer)
            .into_iter()
            .map(|(a, rate, target, proof)| {
                let name = match a.as_visible() {
                    Some(v) if hidden.contains(v) => ActionName::Tau,
                    _ => a,
                };
                (
                    name,
                    rate,
                    ItTerm::hide(target, hidden.clone()),
                    ItProof::Hid(Box::new(proof)),
                )
            })
            .collect(),
        ItTerm::Relab(p, phi) => it_proofs(p, composer)
            .into_iter()
            .map(|(a, rate, target, proof)| {
                (
                    phi.apply(&a),
                    rate,
                    ItTerm::relab(target, phi.clone()),
                    ItProof::Rel(Box::new(proof)),
                )
            })
            .collect(),
        ItTerm::Rec(x, body) => it_proofs(&unfold_it(x, body, t), composer)
            .into_iter()
            .map(|(a, rate, target, proof)| (a, rate, target, ItProof::Rec(Box::new(proof))))
            .collect(),
    }
}

/// A derivation tree for one orthogonal-time transition.
#[derive(Debug, Clone, PartialEq, Eq)]
enum OtProof {
    Pre,
    Alt1(Box<OtProof>),
    Alt2(Box<OtProof>),
    Par1(Box<OtProof>),
    Par2(Box<OtProof>),
    Syn(Box<OtProof>, Box<OtProof>),
    Hid(Box<OtProof>),
    Rel(Box<OtProof>),
    Rec(Box<OtProof>),
}

fn ot_action_proofs(q: &OtTerm) -> Vec<(ActionName, OtTerm, OtProof)> {
    match q {
        OtTerm::Nil | OtTerm::Var(_) | OtTerm::TimePrefix(..) => Vec::new(),
        OtTerm::ActPrefix(a, p) => vec![(a.clone(), (**p).clone(), OtProof::Pre)],
        OtTerm::Choice(l, r) => {
            let mut out: Vec<_> = ot_action_proofs(l)
                .into_iter()
                .map(|(a, t, p)| (a, t, OtProof::Alt1(Box::new(p))))
                .collect();
            out.extend(
                ot_action_proofs(r)
                    .into_iter()
                    .map(|(a, t, p)| (a, t, OtProof::Alt2(Box::new(p)))),
            );
            out
        }
        OtTerm::Par(l, r, sync) => {
            let ls = ot_action_proofs(l);
            let rs = ot_action_proofs(r);
            let in_sync = |a: &ActionName| a.as_visible().is_some_and(|v| sync.contains(v));
            let mut out = Vec::new();
            for (a, t, p) in &ls {
                if !in_sync(a) {
                    out.push((
                        a.clone(),
                        OtTerm::par((*t).clone(), (**r).clone(), sync.clone()),
                        OtProof::Par1(Box::new(p.clone())),
                    ));
                }
            }
            for (a, t, p) in &rs {
                if !in_sync(a) {
                    out.push((
                        a.clone(),
                        OtTerm::par((**l).clone(), (*t).clone(), sync.clone()),
                        OtProof::Par2(Box::new(p.clone())),
                    ));
                }
            }
            for (la, lt, lp) in &ls {
                if !in_sync(la) {
                    continue;
                }
                for (ra, rt, rp) in &rs {
                    if ra == la {
                        out.push((
                            la.clone(),
                            OtTerm::par((*lt).clone(), (*rt).clone(), sync.clone()),
                            OtProof::Syn(Box::new(lp.clone()), Box::new(rp.clone())),
                        ));
                    }
                }
            }
            out
        }
        OtTerm::Hide(p, hidden) => ot_action_proofs(p)
            .into_iter()
            .map(|(a, t, pr)| {
                let name = match a.as_visible() {
                    Some(v) if hidden.contains(v) => ActionName::Tau,
                    _ => a,
                };
                (
                    name,
                    OtTerm::hide(t, hidden.clone()),
                    OtProof::Hid(Box::new(pr)),
                )
            })
            .collect(),
        OtTerm::Relab(p, phi) => ot_action_proofs(p)
            .into_iter()
            .map(|(a, t, pr)| {
                (
                    phi.apply(&a),
                    OtTerm::relab(t, phi.clone()),
                    OtProof::Rel(Box::new(pr)),
                )
            })
            .collect(),
        OtTerm::Rec(x, body) => ot_action_proofs(&unfold_ot(x, body, q))
            .into_iter()
            .map(|(a, t, p)| (a, t, OtProof::Rec(Box::new(p))))
            .collect(),
    }
}

fn ot_time_proofs(q: &OtTerm) -> Vec<(Rate, OtTerm, OtProof)> {
    match q {
        OtTerm::Nil | OtTerm::Var(_) | OtTerm::ActPrefix(..) => Vec::new(),
        OtTerm::TimePrefix(rate, p) => vec![(rate.clone(), (**p).clone(), OtProof::Pre)],
        OtTerm::Choice(l, r) => {
            let mut out: Vec<_> = ot_time_proofs(l)
                .into_iter()
                .map(|(rate, t, p)| (rate, t, OtProof::Alt1(Box::new(p))))
                .collect();
            out.extend(
                ot_time_proofs(r)
                    .into_iter()
                    .map(|(rate, t, p)| (rate, t, OtProof::Alt2(Box::new(p)))),
            );
            out
        }
        // No synchronization and no side condition: both sides always
        // interleave their delays.
        OtTerm::Par(l, r, sync) => {
            let mut out = Vec::new();
            for (rate, t, p) in ot_time_proofs(l) {
                out.push((
                    rate,
                    OtTerm::par(t, (**r).clone(), sync.clone()),
                    OtProof::Par1(Box::new(p)),
                ));
            }
            for (rate, t, p) in ot_time_proofs(r) {
                out.push((
                    rate,
                    OtTerm::par((**l).clone(), t, sync.clone()),
                    OtProof::Par2(Box::new(p)),
                ));
            }
            out
        }
        OtTerm::Hide(p, hidden) => ot_time_proofs(p)
            .into_iter()
            .map(|(rate, t, pr)| {
                (
                    rate,
                    OtTerm::hide(t, hidden.clone()),
                    OtProof::Hid(Box::new(pr)),
                )
            })
            .collect(),
        OtTerm::Relab(p, phi) => ot_time_proofs(p)
            .into_iter()
            .map(|(rate, t, pr)| {
                (
                    rate,
                    OtTerm::relab(t, phi.clone()),
                    OtProof::Rel(Box::new(pr)),
                )
            })
            .collect(),
        OtTerm::Rec(x, body) => ot_time_proofs(&unfold_ot(x, body, q))
            .into_iter()
            .map(|(rate, t, p)| (rate, t, OtProof::Rec(Box::new(p))))
            .collect(),
    }
}

fn assert_it_agreement(t: &ItTerm, composer: RateComposer) {
    let proofs = it_proofs(t, composer);
    let mut expected: BTreeMap<(ActionName, Rate, ItTerm), u64> = BTreeMap::new();
    for (a, rate, target, _proof) in proofs {
        *expected.entry((a, rate, target)).or_insert(0) += 1;
    }
    let actual: BTreeMap<(ActionName, Rate, ItTerm), u64> = step_it(t, composer)
        .unwrap()
        .into_iter()
        .map(|s| ((s.name, s.rate, s.target), s.mult))
        .collect();
    assert_eq!(expected, actual, "multiplicity disagreement on `{t}`");
}

fn assert_ot_agreement(q: &OtTerm) {
    let mut expected_time: BTreeMap<(Rate, OtTerm), u64> = BTreeMap::new();
    for (rate, target, _proof) in ot_time_proofs(q) {
        *expected_time.entry((rate, target)).or_insert(0) += 1;
    }
    let actual_time: BTreeMap<(Rate, OtTerm), u64> = step_ot_time(q)
        .unwrap()
        .into_iter()
        .map(|s| ((s.rate, s.target), s.mult))
        .collect();
    assert_eq!(expected_time, actual_time, "time multiplicities on `{q}`");

    // The action relation is a set: distinct proofs of one transition
    // collapse.
    let expected_actions: BTreeSet<(ActionName, OtTerm)> = ot_action_proofs(q)
        .into_iter()
        .map(|(a, t, _)| (a, t))
        .collect();
    assert_eq!(
        expected_actions,
        step_ot_actions(q).unwrap(),
        "action set on `{q}`"
    );
}

fn all_it_terms(depth: usize, with_rec: bool) -> Vec<ItTerm> {
    let a = || ActionName::visible("a").unwrap();
    let b = || ActionName::visible("b").unwrap();
    let one = || Rate::from_integer(1);
    let two = || Rate::from_integer(2);
    let leaves = || {
        let mut v = vec![ItTerm::Nil];
        if with_rec {
            v.push(ItTerm::Var("X".into()));
        }
        v
    };
    if depth == 1 {
        return leaves();
    }
    let smaller = all_it_terms(depth - 1, with_rec);
    let mut out = leaves();
    let sync_a: BTreeSet<VisName> = [VisName::new("a").unwrap()].into_iter().collect();
    let phi = Relabeling::from_pairs([(VisName::new("a").unwrap(), VisName::new("b").unwrap())]);
    for t in &smaller {
        for name in [a(), b()] {
            for rate in [one(), two()] {
                out.push(ItTerm::prefix(name.clone(), rate, t.clone()));
            }
        }
        out.push(ItTerm::hide(t.clone(), sync_a.clone()));
        out.push(ItTerm::relab(t.clone(), phi.clone()));
        if with_rec {
            out.push(ItTerm::rec("X", t.clone()));
        }
    }
    for l in &smaller {
        for r in &smaller {
            out.push(ItTerm::choice(l.clone(), r.clone()));
            out.push(ItTerm::par(l.clone(), r.clone(), BTreeSet::new()));
            out.push(ItTerm::par(l.clone(), r.clone(), sync_a.clone()));
        }
    }
    out
}

fn all_ot_terms(depth: usize, with_rec: bool) -> Vec<OtTerm> {
    let a = || ActionName::visible("a").unwrap();
    let b = || ActionName::visible("b").unwrap();
    let leaves = || {
        let mut v = vec![OtTerm::Nil];
        if with_rec {
            v.push(OtTerm::Var("X".into()));
        }
        v
    };
    if depth == 1 {
        return leaves();
    }
    let smaller = all_ot_terms(depth - 1, with_rec);
    let mut out = leaves();
    let sync_a: BTreeSet<VisName> = [VisName::new("a").unwrap()].into_iter().collect();
    let phi = Relabeling::from_pairs([(VisName::new("a").unwrap(), VisName::new("b").unwrap())]);
    for t in &smaller {
        for name in [a(), b()] {
            out.push(OtTerm::act(name, t.clone()));
        }
        for rate in [Rate::from_integer(1), Rate::from_integer(2)] {
            out.push(OtTerm::delay(rate, t.clone()));
        }
        out.push(OtTerm::hide(t.clone(), sync_a.clone()));
        out.push(OtTerm::relab(t.clone(), phi.clone()));
        if with_rec {
            out.push(OtTerm::rec("X", t.clone()));
        }
    }
    for l in &smaller {
        for r in &smaller {
            out.push(OtTerm::choice(l.clone(), r.clone()));
            out.push(OtTerm::par(l.clone(), r.clone(), BTreeSet::new()));
            out.push(OtTerm::par(l.clone(), r.clone(), sync_a.clone()));
        }
    }
    out
}

#[test]
fn it_multiplicities_match_proof_count_exhaustively() {
    // Recursion-free fragment: every term is closed, so height four stays
    // tractable.
    let mut checked = 0;
    for t in all_it_terms(4, false) {
        assert_it_agreement(&t, RateComposer::Product);
        checked += 1;
    }
    assert!(checked > 300_000, "only {checked} recursion-free terms");

    // With variables and recursion, restricted to closed guarded terms.
    let mut checked = 0;
    for t in all_it_terms(3, true) {
        if !check_well_formed_it(&t).is_ok() {
            continue;
        }
        assert_it_agreement(&t, RateComposer::Product);
        checked += 1;
    }
    assert!(checked > 400, "only {checked} closed guarded terms");
}

#[test]
fn ot_relations_match_proof_enumeration_exhaustively() {
    let mut checked = 0;
    for q in all_ot_terms(4, false) {
        assert_ot_agreement(&q);
        checked += 1;
    }
    assert!(checked > 300_000, "only {checked} recursion-free terms");

    let mut checked = 0;
    for q in all_ot_terms(3, true) {
        if !check_well_formed_ot(&q).is_ok() {
            continue;
        }
        assert_ot_agreement(&q);
        checked += 1;
    }
    assert!(checked > 400, "only {checked} closed guarded terms");
}

#[test]
fn it_multiplicities_match_on_random_deeper_terms() {
    let mut gen = TermGen::new(0x5eed_0001);
    let cfg = GenConfig::general(5);
    for _ in 0..3000 {
        let t = gen.it_term(&cfg);
        for composer in [RateComposer::Product, RateComposer::Min, RateComposer::Sum] {
            assert_it_agreement(&t, composer);
        }
    }
}

#[test]
fn ot_relations_match_on_random_deeper_terms() {
    let mut gen = TermGen::new(0x5eed_0002);
    let cfg = GenConfig::general(5);
    for _ in 0..3000 {
        assert_ot_agreement(&gen.ot_term(&cfg));
    }
}

#[test]
fn paper_multiplicity_examples() {
    // Two summands, one triple, multiplicity two.
    let t = parse_it("<a,1>.nil + <a,1>.nil").unwrap();
    let steps = step_it(&t, RateComposer::Product).unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].mult, 2);

    // The delay analogue.
    let q = parse_ot("(1).nil + (1).nil").unwrap();
    let steps = step_ot_time(&q).unwrap();
    assert_eq!(steps.len(), 1);
    assert_eq!(steps[0].mult, 2);

    // But the action analogue collapses: sets, not multisets.
    let q = parse_ot("a.nil + a.nil").unwrap();
    assert_eq!(step_ot_actions(&q).unwrap().len(), 1);
}
