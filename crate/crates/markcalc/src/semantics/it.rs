//! Integrated-time operational semantics.
//!
//! `step_it` returns the transition multiset of a closed guarded term:
//! every derivable `(name, rate, target)` triple together with the number
//! of distinct derivation proofs. Keeping the count matters because
//! `<a,l>.nil + <a,l>.nil` leaves at twice the rate of `<a,l>.nil`.

use std::collections::BTreeMap;
use std::fmt;

use super::SemanticsError;
use crate::mlts::Label;
use crate::rate::Rate;
use crate::terms::{unfold_it, ActionName, ItTerm};

/// The associative and commutative operator composing the rates of two
/// synchronizing actions. The calculus leaves it open; product is the
/// default here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateComposer {
    Product,
    Min,
    Sum,
}

impl RateComposer {
    pub fn name(self) -> &'static str {
        match self {
            RateComposer::Product => "product",
            RateComposer::Min => "min",
            RateComposer::Sum => "sum",
        }
    }

    pub fn compose(self, a: &Rate, b: &Rate) -> Rate {
        match self {
            RateComposer::Product => a * b,
            RateComposer::Min => a.clone().min(b.clone()),
            RateComposer::Sum => a.clone() + b,
        }
    }
}

impl fmt::Display for RateComposer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RateComposer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "product" => Ok(RateComposer::Product),
            "min" => Ok(RateComposer::Min),
            "sum" => Ok(RateComposer::Sum),
            other => Err(format!(
                "unknown rate composer `{other}` (use product, min or sum)"
            )),
        }
    }
}

/// One element of the transition multiset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ItStep {
    pub name: ActionName,
    pub rate: Rate,
    pub target: ItTerm,
    pub mult: u64,
}

type StepMap = BTreeMap<(ActionName, Rate, ItTerm), u64>;

fn add(map: &mut StepMap, key: (ActionName, Rate, ItTerm), mult: u64) {
    *map.entry(key).or_insert(0) += mult;
}

fn derive(t: &ItTerm, composer: RateComposer, fuel: usize) -> Result<StepMap, SemanticsError> {
    let mut out = StepMap::new();
    match t {
        ItTerm::Nil | ItTerm::Var(_) => {}
        ItTerm::Prefix(a, rate, p) => {
            add(&mut out, (a.clone(), rate.clone(), (**p).clone()), 1);
        }
        ItTerm::Choice(l, r) => {
            // Union of multisets: coinciding triples from the two sides are
            // distinct proofs, so their counts accumulate.
            out = derive(l, composer, fuel)?;
            for (key, mult) in derive(r, composer, fuel)? {
                add(&mut out, key, mult);
            }
        }
        ItTerm::Par(l, r, sync) => {
            let ls = derive(l, composer, fuel)?;
            let rs = derive(r, composer, fuel)?;
            let in_sync =
                |a: &ActionName| a.as_visible().is_some_and(|v| sync.contains(v));
            for ((a, rate, target), mult) in &ls {
                if !in_sync(a) {
                    let par = ItTerm::Par(Box::new(target.clone()), r.clone(), sync.clone());
                    add(&mut out, (a.clone(), rate.clone(), par), *mult);
                }
            }
            for ((a, rate, target), mult) in &rs {
                if !in_sync(a) {
                    let par = ItTerm::Par(l.clone(), Box::new(target.clone()), sync.clone());
                    add(&mut out, (a.clone(), rate.clone(), par), *mult);
                }
            }
            // Synchronization pairs every left proof with every right proof
            // and composes the two rates.
            for ((la, lrate, ltarget), lmult) in &ls {
                if !in_sync(la) {
                    continue;
                }
                for ((ra, rrate, rtarget), rmult) in &rs {
                    if ra != la {
                        continue;
                    }
                    let par = ItTerm::Par(
                        Box::new(ltarget.clone()),
                        Box::new(rtarget.clone()),
                        sync.clone(),
                    );
                    add(
                        &mut out,
                        (la.clone(), composer.compose(lrate, rrate), par),
                        lmult * rmult,
                    );
                }
            }
        }
        ItTerm::Hide(p, hidden) => {
            for ((a, rate, target), mult) in derive(p, composer, fuel)? {
                let name = match a.as_visible() {
                    Some(v) if hidden.contains(v) => ActionName::Tau,
                    _ => a,
                };
                let wrapped = ItTerm::Hide(Box::new(target), hidden.clone());
                add(&mut out, (name, rate, wrapped), mult);
            }
        }
        ItTerm::Relab(p, phi) => {
            for ((a, rate, target), mult) in derive(p, composer, fuel)? {
                let wrapped = ItTerm::Relab(Box::new(target), phi.clone());
                add(&mut out, (phi.apply(&a), rate, wrapped), mult);
            }
        }
        ItTerm::Rec(x, body) => {
            if fuel == 0 {
                return Err(SemanticsError::UnguardedRecursion {
                    term: t.to_string(),
                });
            }
            out = derive(&unfold_it(x, body, t), composer, fuel - 1)?;
        }
    }
    Ok(out)
}

/// Transition multiset of `t`, merged by triple with summed multiplicities
/// and deterministically ordered.
pub fn step_it(t: &ItTerm, composer: RateComposer) -> Result<Vec<ItStep>, SemanticsError> {
    let fuel = t.node_count() + 1;
    Ok(derive(t, composer, fuel)?
        .into_iter()
        .map(|((name, rate, target), mult)| ItStep {
            name,
            rate,
            target,
            mult,
        })
        .collect())
}

/// Exit rate of `t` through actions named `name` into the destination set
/// described by `dest`: the rate sum of the matching transitions, zero when
/// there are none.
pub fn rate_it<D>(
    t: &ItTerm,
    name: &ActionName,
    dest: D,
    composer: RateComposer,
) -> Result<Rate, SemanticsError>
where
    D: Fn(&ItTerm) -> bool,
{
    let mut total = Rate::zero();
    for step in step_it(t, composer)? {
        if step.name == *name && dest(&step.target) {
            total += &step.rate.scaled(step.mult);
        }
    }
    Ok(total)
}

/// Total exit rate: the rate sum over every transition of `t`, the
/// reciprocal of its average sojourn time.
pub fn total_rate_it(t: &ItTerm, composer: RateComposer) -> Result<Rate, SemanticsError> {
    let mut total = Rate::zero();
    for step in step_it(t, composer)? {
        total += &step.rate.scaled(step.mult);
    }
    Ok(total)
}

/// Adapter feeding [`crate::mlts::build`].
pub fn it_stepper(
    composer: RateComposer,
) -> impl Fn(&ItTerm) -> Result<Vec<(Label, ItTerm, u64)>, SemanticsError> {
    move |t| {
        Ok(step_it(t, composer)?
            .into_iter()
            .map(|s| {
                (
                    Label::ItAct {
                        name: s.name,
                        rate: s.rate,
                    },
                    s.target,
                    s.mult,
                )
            })
            .collect())
    }
}
