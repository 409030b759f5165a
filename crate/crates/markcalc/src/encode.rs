//! Translations from the integrated-time calculus into the orthogonal-time
//! one, one per urgency reading.
//!
//! All three map a durational action to a delay followed by the
//! instantaneous action — the opposite order would turn probabilistic
//! choices into nondeterministic ones. They differ in their domains and in
//! the action clause:
//!
//! * lazy: defined for sequential terms only, plain `(rate).a.`;
//! * eager: also crosses parallel composition with an empty
//!   synchronization set, same action clause;
//! * maximal progress: as eager, but guards the action with a τ-loop,
//!   `(rate).rec Z.(tau.Z + a.Q)`, so that every action-enabled state keeps
//!   an internal move.
//!
//! The domain restrictions are enforced as hard errors: outside them the
//! translations demonstrably break the equivalence they are meant to
//! preserve.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::bisim::OtVariant;
use crate::rate::Rate;
use crate::semantics::{
    step_it, step_ot_actions, step_ot_time, total_rate_it, total_rate_ot, RateComposer,
    SemanticsError,
};
use crate::terms::{
    fresh_from, free_vars_it, free_vars_ot, path_string, subst_ot, unfold_it, ActionName, ItTerm,
    OtTerm, TermPath,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EncodeError {
    /// The lazy translation accepts no parallel composition at all.
    NotSequential { path: TermPath },
    /// The eager and maximal-progress translations accept parallel
    /// composition only with an empty synchronization set.
    NotSyncFree { path: TermPath },
}

impl fmt::Display for EncodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodeError::NotSequential { path } => write!(
                f,
                "translation is defined only for sequential terms; parallel composition at {}",
                path_string(path)
            ),
            EncodeError::NotSyncFree { path } => write!(
                f,
                "translation is defined only for synchronization-free terms; nonempty synchronization set at {}",
                path_string(path)
            ),
        }
    }
}

impl EncodeError {
    pub fn path(&self) -> &TermPath {
        match self {
            EncodeError::NotSequential { path } | EncodeError::NotSyncFree { path } => path,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ActionClause {
    Plain,
    TauLoop,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ParClause {
    Reject,
    EmptySyncOnly,
}

fn translate(
    p: &ItTerm,
    action: ActionClause,
    par: ParClause,
    path: &mut TermPath,
) -> Result<OtTerm, EncodeError> {
    Ok(match p {
        ItTerm::Nil => OtTerm::Nil,
        ItTerm::Prefix(a, rate, body) => {
            path.push(0);
            let cont = translate(body, action, par, path)?;
            path.pop();
            let guarded = match action {
                ActionClause::Plain => OtTerm::act(a.clone(), cont),
                ActionClause::TauLoop => {
                    // Z is the first scheme variable not free in the
                    // continuation; bound occurrences inside it are shadowed
                    // harmlessly, and reusing them keeps the translation
                    // stable under substitution of closed terms.
                    let z = fresh_from(&free_vars_ot(&cont));
                    OtTerm::rec(
                        &z,
                        OtTerm::choice(
                            OtTerm::act(ActionName::Tau, OtTerm::Var(z.clone())),
                            OtTerm::act(a.clone(), cont),
                        ),
                    )
                }
            };
            OtTerm::delay(rate.clone(), guarded)
        }
        ItTerm::Choice(l, r) => {
            path.push(0);
            let lt = translate(l, action, par, path)?;
            path.pop();
            path.push(1);
            let rt = translate(r, action, par, path)?;
            path.pop();
            OtTerm::choice(lt, rt)
        }
        ItTerm::Par(l, r, sync) => match par {
            ParClause::Reject => {
                return Err(EncodeError::NotSequential { path: path.clone() })
            }
            ParClause::EmptySyncOnly => {
                if !sync.is_empty() {
                    return Err(EncodeError::NotSyncFree { path: path.clone() });
                }
                path.push(0);
                let lt = translate(l, action, par, path)?;
                path.pop();
                path.push(1);
                let rt = translate(r, action, par, path)?;
                path.pop();
                OtTerm::par(lt, rt, BTreeSet::new())
            }
        },
        ItTerm::Hide(body, hidden) => {
            path.push(0);
            let bt = translate(body, action, par, path)?;
            path.pop();
            OtTerm::hide(bt, hidden.clone())
        }
        ItTerm::Relab(body, phi) => {
            path.push(0);
            let bt = translate(body, action, par, path)?;
            path.pop();
            OtTerm::relab(bt, phi.clone())
        }
        ItTerm::Var(x) => OtTerm::Var(x.clone()),
        ItTerm::Rec(x, body) => {
            path.push(0);
            let bt = translate(body, action, par, path)?;
            path.pop();
            OtTerm::rec(x, bt)
        }
    })
}

/// Lazy translation, defined for sequential terms.
pub fn gamma_lazy(p: &ItTerm) -> Result<OtTerm, EncodeError> {
    translate(p, ActionClause::Plain, ParClause::Reject, &mut Vec::new())
}

/// Eager translation, defined for synchronization-free terms.
pub fn gamma_eager(p: &ItTerm) -> Result<OtTerm, EncodeError> {
    translate(
        p,
        ActionClause::Plain,
        ParClause::EmptySyncOnly,
        &mut Vec::new(),
    )
}

/// Maximal-progress translation, defined for synchronization-free terms;
/// wraps every action in a τ-loop recursion over a fresh variable.
pub fn gamma_max_progress(p: &ItTerm) -> Result<OtTerm, EncodeError> {
    translate(
        p,
        ActionClause::TauLoop,
        ParClause::EmptySyncOnly,
        &mut Vec::new(),
    )
}

/// The translation matching a bisimilarity variant.
pub fn gamma(variant: OtVariant, p: &ItTerm) -> Result<OtTerm, EncodeError> {
    match variant {
        OtVariant::Lazy => gamma_lazy(p),
        OtVariant::Eager => gamma_eager(p),
        OtVariant::MaxProgress => gamma_max_progress(p),
    }
}

/// One failed lemma instance, with the witnessing state or transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LemmaFailure {
    /// The translation of a reachable source term can perform an action.
    TranslationActs { term: String, action: String },
    /// Total exit rates of a source term and its translation differ.
    TotalRateMismatch {
        term: String,
        it_rate: Rate,
        ot_rate: Rate,
    },
    /// A delay target of the translation does not have the action shape the
    /// variant demands.
    BadDelayTarget { state: String, detail: String },
    /// The transition multisets fail to correspond.
    TransitionMismatch {
        term: String,
        rate: Rate,
        action: String,
        source_mult: u64,
        translated_mult: u64,
    },
    /// Translating an unfolding differs from unfolding the translation.
    UnfoldingMismatch { term: String },
}

impl fmt::Display for LemmaFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LemmaFailure::TranslationActs { term, action } => write!(
                f,
                "translation of `{term}` can immediately perform `{action}`"
            ),
            LemmaFailure::TotalRateMismatch {
                term,
                it_rate,
                ot_rate,
            } => write!(
                f,
                "total exit rate of `{term}` is {it_rate} but its translation delays at {ot_rate}"
            ),
            LemmaFailure::BadDelayTarget { state, detail } => {
                write!(f, "delay target `{state}`: {detail}")
            }
            LemmaFailure::TransitionMismatch {
                term,
                rate,
                action,
                source_mult,
                translated_mult,
            } => write!(
                f,
                "`{term}`: move `{action}` at rate {rate} has multiplicity {source_mult} in the source but {translated_mult} in the translation"
            ),
            LemmaFailure::UnfoldingMismatch { term } => write!(
                f,
                "translating the unfolding of `{term}` differs from unfolding its translation"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LemmaReport {
    pub variant: OtVariant,
    pub failures: Vec<LemmaFailure>,
    /// Coupled (source, translation) pairs visited.
    pub checked_pairs: usize,
    /// Recursive subterms whose unfolding commutation was checked.
    pub checked_unfoldings: usize,
}

impl LemmaReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum LemmaCheckError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("more than {0} coupled pairs; term too large for the lemma check")]
    Exhausted(usize),
}

/// Extracts the continuation move of one delay target of a translation.
///
/// For lazy the target must have exactly one transition overall, the
/// action; for eager exactly one action transition; for maximal progress
/// exactly the τ selfloop plus the action.
fn continuation_move(
    q: &OtTerm,
    variant: OtVariant,
) -> Result<Result<(ActionName, OtTerm), String>, SemanticsError> {
    let actions = step_ot_actions(q)?;
    match variant {
        OtVariant::Lazy => {
            if !step_ot_time(q)?.is_empty() {
                return Ok(Err("a delay target of a lazy translation must not delay again before its action".into()));
            }
            if actions.len() != 1 {
                return Ok(Err(format!(
                    "expected exactly one action transition, found {}",
                    actions.len()
                )));
            }
            Ok(Ok(actions.into_iter().next().unwrap()))
        }
        OtVariant::Eager => {
            if actions.len() != 1 {
                return Ok(Err(format!(
                    "expected exactly one action transition, found {}",
                    actions.len()
                )));
            }
            Ok(Ok(actions.into_iter().next().unwrap()))
        }
        OtVariant::MaxProgress => {
            if actions.len() != 2 {
                return Ok(Err(format!(
                    "expected the τ selfloop plus one action, found {} transitions",
                    actions.len()
                )));
            }
            let mut selfloop = None;
            let mut forward = None;
            for (name, target) in actions {
                if name.is_tau() && target == *q {
                    selfloop = Some(());
                } else {
                    forward = Some((name, target));
                }
            }
            match (selfloop, forward) {
                (Some(()), Some(mv)) => Ok(Ok(mv)),
                _ => Ok(Err("missing τ selfloop back to the delay target".into())),
            }
        }
    }
}

/// Verifies the three lemma families underpinning the preservation
/// theorems, on `p` and everything reachable from it:
///
/// (a) every reachable source term and its translation have equal total
/// exit rates and the translation cannot act; (b) the source transition
/// multiset and the translation's delay multiset correspond one to one,
/// with the variant's action shape at each delay target; (c) for every
/// closed recursive subterm, translating its unfolding equals unfolding its
/// translation.
pub fn check_lemmas(
    p: &ItTerm,
    variant: OtVariant,
    max_pairs: usize,
) -> Result<LemmaReport, LemmaCheckError> {
    // The composer is irrelevant on the synchronization-free domain: the
    // synchronization rule can never fire.
    let composer = RateComposer::Product;
    let mut failures = Vec::new();

    let root = gamma(variant, p)?;
    let mut worklist = vec![(p.clone(), root)];
    let mut visited: HashSet<ItTerm> = HashSet::new();
    let mut checked_pairs = 0usize;

    while let Some((src, img)) = worklist.pop() {
        if !visited.insert(src.clone()) {
            continue;
        }
        checked_pairs += 1;
        if checked_pairs > max_pairs {
            return Err(LemmaCheckError::Exhausted(max_pairs));
        }

        // (a) the translation is silent and keeps the sojourn rate.
        if let Some((name, _)) = step_ot_actions(&img)?.into_iter().next() {
            failures.push(LemmaFailure::TranslationActs {
                term: src.to_string(),
                action: name.to_string(),
            });
        }
        let it_rate = total_rate_it(&src, composer)?;
        let ot_rate = total_rate_ot(&img)?;
        if it_rate != ot_rate {
            failures.push(LemmaFailure::TotalRateMismatch {
                term: src.to_string(),
                it_rate,
                ot_rate,
            });
        }

        // (b) transition correspondence, as multisets.
        let mut source_moves: BTreeMap<(Rate, ActionName, OtTerm), u64> = BTreeMap::new();
        let mut continuations: BTreeMap<(Rate, ActionName, OtTerm), ItTerm> = BTreeMap::new();
        for step in step_it(&src, composer)? {
            let img_target = gamma(variant, &step.target)?;
            let key = (step.rate, step.name, img_target);
            *source_moves.entry(key.clone()).or_insert(0) += step.mult;
            continuations.insert(key, step.target);
        }
        let mut image_moves: BTreeMap<(Rate, ActionName, OtTerm), u64> = BTreeMap::new();
        for delay in step_ot_time(&img)? {
            match continuation_move(&delay.target, variant)? {
                Err(detail) => failures.push(LemmaFailure::BadDelayTarget {
                    state: delay.target.to_string(),
                    detail,
                }),
                Ok((name, cont)) => {
                    *image_moves
                        .entry((delay.rate, name, cont))
                        .or_insert(0) += delay.mult;
                }
            }
        }
        let keys: BTreeSet<_> = source_moves.keys().chain(image_moves.keys()).collect();
        for key in keys {
            let s = source_moves.get(key).copied().unwrap_or(0);
            let i = image_moves.get(key).copied().unwrap_or(0);
            if s != i {
                failures.push(LemmaFailure::TransitionMismatch {
                    term: src.to_string(),
                    rate: key.0.clone(),
                    action: key.1.to_string(),
                    source_mult: s,
                    translated_mult: i,
                });
            }
        }
        for (key, target) in continuations {
            if image_moves.contains_key(&key) {
                worklist.push((target, key.2));
            }
        }
    }

    // (c) unfolding commutation for every closed recursive subterm. Skipped
    // for maximal progress when the subterm touches the fresh-variable
    // scheme: there the two sides may pick α-variant loop binders.
    let mut checked_unfoldings = 0usize;
    for sub in it_subterms(p) {
        let ItTerm::Rec(x, body) = sub else { continue };
        if !free_vars_it(sub).is_empty() {
            continue;
        }
        if variant == OtVariant::MaxProgress && touches_scheme(sub) {
            continue;
        }
        checked_unfoldings += 1;
        let lhs = gamma(variant, &unfold_it(x, body, sub))?;
        let body_img = gamma(variant, body)?;
        let whole_img = OtTerm::rec(x, body_img.clone());
        let rhs = subst_ot(&body_img, x, &whole_img);
        if lhs != rhs {
            failures.push(LemmaFailure::UnfoldingMismatch {
                term: sub.to_string(),
            });
        }
    }

    Ok(LemmaReport {
        variant,
        failures,
        checked_pairs,
        checked_unfoldings,
    })
}

fn it_subterms(t: &ItTerm) -> Vec<&ItTerm> {
    let mut out = vec![t];
    match t {
        ItTerm::Nil | ItTerm::Var(_) => {}
        ItTerm::Prefix(_, _, p) | ItTerm::Hide(p, _) | ItTerm::Relab(p, _) | ItTerm::Rec(_, p) => {
            out.extend(it_subterms(p))
        }
        ItTerm::Choice(l, r) | ItTerm::Par(l, r, _) => {
            out.extend(it_subterms(l));
            out.extend(it_subterms(r));
        }
    }
    out
}

fn is_scheme_name(s: &str) -> bool {
    match s.strip_prefix('Z') {
        None => false,
        Some("") => true,
        Some(rest) => rest.chars().all(|c| c.is_ascii_digit()),
    }
}

fn touches_scheme(t: &ItTerm) -> bool {
    match t {
        ItTerm::Var(x) => is_scheme_name(x),
        ItTerm::Rec(x, p) => is_scheme_name(x) || touches_scheme(p),
        ItTerm::Nil => false,
        ItTerm::Prefix(_, _, p) | ItTerm::Hide(p, _) | ItTerm::Relab(p, _) => touches_scheme(p),
        ItTerm::Choice(l, r) | ItTerm::Par(l, r, _) => touches_scheme(l) || touches_scheme(r),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_it, parse_ot, print_ot};

    fn enc_lazy(src: &str) -> OtTerm {
        gamma_lazy(&parse_it(src).unwrap()).unwrap()
    }

    fn enc_eager(src: &str) -> OtTerm {
        gamma_eager(&parse_it(src).unwrap()).unwrap()
    }

    fn enc_mp(src: &str) -> OtTerm {
        gamma_max_progress(&parse_it(src).unwrap()).unwrap()
    }

    #[test]
    fn lazy_prefix_clause() {
        assert_eq!(enc_lazy("<a,1>.nil"), parse_ot("(1).a.nil").unwrap());
        assert_eq!(enc_lazy("nil"), OtTerm::Nil);
    }

    #[test]
    fn lazy_is_homomorphic_on_choice() {
        assert_eq!(
            enc_lazy("<a,1>.nil + <b,2>.nil"),
            parse_ot("(1).a.nil + (2).b.nil").unwrap()
        );
    }

    #[test]
    fn lazy_rejects_any_parallel() {
        let err = gamma_lazy(&parse_it("nil ||{} nil").unwrap()).unwrap_err();
        assert_eq!(err, EncodeError::NotSequential { path: vec![] });
        let err = gamma_lazy(&parse_it("<a,1>.(nil ||{} nil)").unwrap()).unwrap_err();
        assert_eq!(err, EncodeError::NotSequential { path: vec![0] });
    }

    #[test]
    fn eager_maps_interleaving_to_interleaving() {
        // P1 of the counterexample pair goes to Q1.
        assert_eq!(
            enc_eager("<a,1>.nil ||{} <b,2>.nil"),
            parse_ot("(1).a.nil ||{} (2).b.nil").unwrap()
        );
        assert_eq!(enc_eager("<a,1>.nil"), parse_ot("(1).a.nil").unwrap());
    }

    #[test]
    fn eager_rejects_synchronization() {
        let p4 = parse_it("(<a,1>.nil + <b,2>.nil) ||{b} nil").unwrap();
        let err = gamma_eager(&p4).unwrap_err();
        assert_eq!(err, EncodeError::NotSyncFree { path: vec![] });
    }

    #[test]
    fn mp_prefix_clause_and_fresh_variables() {
        assert_eq!(
            enc_mp("<a,1>.nil"),
            parse_ot("(1).rec Z.(tau.Z + a.nil)").unwrap()
        );
        assert_eq!(enc_mp("nil"), OtTerm::Nil);
        // Nested prefixes each pick the loop variable fresh with respect to
        // their own continuation's free variables, so the name repeats.
        assert_eq!(
            print_ot(&enc_mp("<a,1>.<b,2>.nil")),
            "(1).rec Z.(tau.Z + a.(2).rec Z.(tau.Z + b.nil))"
        );
    }

    #[test]
    fn mp_avoids_capturing_free_continuation_variables() {
        // Inside rec Z, the continuation has Z free; the loop binder moves
        // to Z1 to avoid capturing it.
        let t = parse_it("rec Z.<a,1>.Z").unwrap();
        let img = gamma_max_progress(&t).unwrap();
        assert_eq!(print_ot(&img), "rec Z.(1).rec Z1.(tau.Z1 + a.Z)");
    }

    #[test]
    fn lemma_checks_pass_on_simple_terms() {
        for variant in OtVariant::ALL {
            let r = check_lemmas(&parse_it("<a,1>.nil").unwrap(), variant, 1000).unwrap();
            assert!(r.is_ok(), "{variant}: {:?}", r.failures);
            let r = check_lemmas(&parse_it("nil").unwrap(), variant, 1000).unwrap();
            assert!(r.is_ok());
            assert_eq!(r.checked_pairs, 1);
        }
    }

    #[test]
    fn lemma_checks_pass_on_recursion() {
        for variant in OtVariant::ALL {
            let r = check_lemmas(&parse_it("rec X.<a,1>.X").unwrap(), variant, 1000).unwrap();
            assert!(r.is_ok(), "{variant}: {:?}", r.failures);
            assert_eq!(r.checked_unfoldings, 1);
        }
    }

    #[test]
    fn lemma_checks_pass_on_parallel_for_eager_and_mp() {
        for variant in [OtVariant::Eager, OtVariant::MaxProgress] {
            let p = parse_it("<a,1>.nil ||{} (<b,2>.nil + <c,3>.<a,1>.nil)").unwrap();
            let r = check_lemmas(&p, variant, 1000).unwrap();
            assert!(r.is_ok(), "{variant}: {:?}", r.failures);
        }
    }
}
