//! Orthogonal-time operational semantics.
//!
//! Two transition relations: action transitions form a plain set (duplicate
//! derivations collapse, as for classical nondeterministic processes),
//! while time transitions form a multiset with proof multiplicities,
//! because `(l).Q + (l).Q` delays at twice the rate of `(l).Q`. Delays
//! never synchronize and interleave freely through parallel composition.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::SemanticsError;
use crate::mlts::{self, Label};
use crate::rate::Rate;
use crate::terms::{
    free_vars_ot, ot_structural, unfold_ot, ActionName, Calculus, OtTerm, TermClass,
};

type ActionSet = BTreeSet<(ActionName, OtTerm)>;

fn derive_actions(q: &OtTerm, fuel: usize) -> Result<ActionSet, SemanticsError> {
    let mut out = ActionSet::new();
    match q {
        OtTerm::Nil | OtTerm::Var(_) | OtTerm::TimePrefix(..) => {}
        OtTerm::ActPrefix(a, p) => {
            out.insert((a.clone(), (**p).clone()));
        }
        OtTerm::Choice(l, r) => {
            out = derive_actions(l, fuel)?;
            out.extend(derive_actions(r, fuel)?);
        }
        OtTerm::Par(l, r, sync) => {
            let ls = derive_actions(l, fuel)?;
            let rs = derive_actions(r, fuel)?;
            let in_sync =
                |a: &ActionName| a.as_visible().is_some_and(|v| sync.contains(v));
            for (a, target) in &ls {
                if !in_sync(a) {
                    out.insert((
                        a.clone(),
                        OtTerm::Par(Box::new(target.clone()), r.clone(), sync.clone()),
                    ));
                }
            }
            for (a, target) in &rs {
                if !in_sync(a) {
                    out.insert((
                        a.clone(),
                        OtTerm::Par(l.clone(), Box::new(target.clone()), sync.clone()),
                    ));
                }
            }
            for (la, lt) in &ls {
                if !in_sync(la) {
                    continue;
                }
                for (ra, rt) in &rs {
                    if ra == la {
                        out.insert((
                            la.clone(),
                            OtTerm::Par(Box::new(lt.clone()), Box::new(rt.clone()), sync.clone()),
                        ));
                    }
                }
            }
        }
        OtTerm::Hide(p, hidden) => {
            for (a, target) in derive_actions(p, fuel)? {
                let name = match a.as_visible() {
                    Some(v) if hidden.contains(v) => ActionName::Tau,
                    _ => a,
                };
                out.insert((name, OtTerm::Hide(Box::new(target), hidden.clone())));
            }
        }
        OtTerm::Relab(p, phi) => {
            for (a, target) in derive_actions(p, fuel)? {
                out.insert((
                    phi.apply(&a),
                    OtTerm::Relab(Box::new(target), phi.clone()),
                ));
            }
        }
        OtTerm::Rec(x, body) => {
            if fuel == 0 {
                return Err(SemanticsError::UnguardedRecursion {
                    term: q.to_string(),
                });
            }
            out = derive_actions(&unfold_ot(x, body, q), fuel - 1)?;
        }
    }
    Ok(out)
}

type TimeMap = BTreeMap<(Rate, OtTerm), u64>;

fn derive_time(q: &OtTerm, fuel: usize) -> Result<TimeMap, SemanticsError> {
    let mut out = TimeMap::new();
    match q {
        OtTerm::Nil | OtTerm::Var(_) | OtTerm::ActPrefix(..) => {}
        OtTerm::TimePrefix(rate, p) => {
            out.insert((rate.clone(), (**p).clone()), 1);
        }
        OtTerm::Choice(l, r) => {
            out = derive_time(l, fuel)?;
            for (key, mult) in derive_time(r, fuel)? {
                *out.entry(key).or_insert(0) += mult;
            }
        }
        // Delays always interleave: no synchronization and no side
        // condition on the parallel rules.
        OtTerm::Par(l, r, sync) => {
            for ((rate, target), mult) in derive_time(l, fuel)? {
                let par = OtTerm::Par(Box::new(target), r.clone(), sync.clone());
                *out.entry((rate, par)).or_insert(0) += mult;
            }
            for ((rate, target), mult) in derive_time(r, fuel)? {
                let par = OtTerm::Par(l.clone(), Box::new(target), sync.clone());
                *out.entry((rate, par)).or_insert(0) += mult;
            }
        }
        OtTerm::Hide(p, hidden) => {
            for ((rate, target), mult) in derive_time(p, fuel)? {
                let wrapped = OtTerm::Hide(Box::new(target), hidden.clone());
                *out.entry((rate, wrapped)).or_insert(0) += mult;
            }
        }
        OtTerm::Relab(p, phi) => {
            for ((rate, target), mult) in derive_time(p, fuel)? {
                let wrapped = OtTerm::Relab(Box::new(target), phi.clone());
                *out.entry((rate, wrapped)).or_insert(0) += mult;
            }
        }
        OtTerm::Rec(x, body) => {
            if fuel == 0 {
                return Err(SemanticsError::UnguardedRecursion {
                    term: q.to_string(),
                });
            }
            out = derive_time(&unfold_ot(x, body, q), fuel - 1)?;
        }
    }
    Ok(out)
}

/// The action transition set of `q`.
pub fn step_ot_actions(q: &OtTerm) -> Result<BTreeSet<(ActionName, OtTerm)>, SemanticsError> {
    derive_actions(q, q.node_count() + 1)
}

/// One element of the time transition multiset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtTimeStep {
    pub rate: Rate,
    pub target: OtTerm,
    pub mult: u64,
}

/// The time transition multiset of `q`, merged by pair with summed
/// multiplicities.
pub fn step_ot_time(q: &OtTerm) -> Result<Vec<OtTimeStep>, SemanticsError> {
    Ok(derive_time(q, q.node_count() + 1)?
        .into_iter()
        .map(|((rate, target), mult)| OtTimeStep { rate, target, mult })
        .collect())
}

/// Exit rate of `q` into the destination set described by `dest`; zero when
/// no delay leads there.
pub fn rate_ot<D>(q: &OtTerm, dest: D) -> Result<Rate, SemanticsError>
where
    D: Fn(&OtTerm) -> bool,
{
    let mut total = Rate::zero();
    for step in step_ot_time(q)? {
        if dest(&step.target) {
            total += &step.rate.scaled(step.mult);
        }
    }
    Ok(total)
}

/// Total exit rate: the rate sum over every delay of `q`.
pub fn total_rate_ot(q: &OtTerm) -> Result<Rate, SemanticsError> {
    rate_ot(q, |_| true)
}

/// Adapter feeding [`crate::mlts::build`]: action transitions carry
/// multiplicity 1, time transitions their proof count.
pub fn ot_stepper() -> impl Fn(&OtTerm) -> Result<Vec<(Label, OtTerm, u64)>, SemanticsError> {
    |q| {
        let mut out = Vec::new();
        for (name, target) in step_ot_actions(q)? {
            out.push((Label::OtAct { name }, target, 1));
        }
        for step in step_ot_time(q)? {
            out.push((Label::OtTime { rate: step.rate }, step.target, step.mult));
        }
        Ok(out)
    }
}

#[derive(Debug, Error)]
pub enum OtClassifyError {
    #[error("state space exceeds {max_states} states; classification would be unreliable")]
    Truncated { max_states: usize },
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

/// Matches `rec Z.(tau.Z + a.Q)` with `Z` not free in `Q`: the one
/// nondeterministic shape the maximal-progress translation introduces.
fn is_controlled_loop(q: &OtTerm) -> bool {
    let OtTerm::Rec(z, body) = q else {
        return false;
    };
    let OtTerm::Choice(left, right) = &**body else {
        return false;
    };
    let OtTerm::ActPrefix(ActionName::Tau, back) = &**left else {
        return false;
    };
    if !matches!(&**back, OtTerm::Var(x) if x == z) {
        return false;
    }
    let OtTerm::ActPrefix(_, cont) = &**right else {
        return false;
    };
    !free_vars_ot(cont).contains(z)
}

/// A state offers a nondeterministic choice if some sequential component of
/// it has two or more action transitions. Parallel components are judged
/// separately: interleaving is concurrency, not choice.
fn component_nondet_free(
    q: &OtTerm,
    allow_controlled: bool,
    fuel: usize,
) -> Result<bool, SemanticsError> {
    if allow_controlled && is_controlled_loop(q) {
        return Ok(true);
    }
    match q {
        OtTerm::Par(l, r, _) => Ok(component_nondet_free(l, allow_controlled, fuel)?
            && component_nondet_free(r, allow_controlled, fuel)?),
        OtTerm::Hide(p, _) | OtTerm::Relab(p, _) => {
            component_nondet_free(p, allow_controlled, fuel)
        }
        OtTerm::Rec(x, body) => {
            if fuel == 0 {
                return Err(SemanticsError::UnguardedRecursion {
                    term: q.to_string(),
                });
            }
            component_nondet_free(&unfold_ot(x, body, q), allow_controlled, fuel - 1)
        }
        _ => Ok(step_ot_actions(q)?.len() <= 1),
    }
}

/// Full classification of an orthogonal-time term: the structural flags
/// plus the two nondeterminism flags, the latter evaluated over every
/// reachable state.
pub fn classify_ot(q: &OtTerm, max_states: usize) -> Result<TermClass, OtClassifyError> {
    let (sequential, sync_free) = ot_structural(q);
    let system = mlts::build(q.clone(), Calculus::Ot, ot_stepper(), max_states).map_err(
        |e| match e {
            mlts::BuildError::Truncated(_) => OtClassifyError::Truncated { max_states },
            mlts::BuildError::Semantics(s) => OtClassifyError::Semantics(s),
        },
    )?;
    let mut no_nondet = true;
    let mut controlled = true;
    for state in &system.states {
        let fuel = state.node_count() + 1;
        if no_nondet && !component_nondet_free(state, false, fuel)? {
            no_nondet = false;
        }
        if controlled && !component_nondet_free(state, true, fuel)? {
            controlled = false;
        }
        if !no_nondet && !controlled {
            break;
        }
    }
    Ok(TermClass {
        sequential: Some(sequential),
        sync_free: Some(sync_free),
        no_nondet: Some(no_nondet),
        controlled_nondet: Some(controlled),
    })
}
