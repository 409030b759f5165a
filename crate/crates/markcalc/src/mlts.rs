//! Labeled multitransition systems shared by both semantics.
//!
//! States are closed terms deduplicated by structural equality; transitions
//! carry a multiplicity equal to the number of distinct derivation proofs.
//! Exploration is breadth first, so state indexing is deterministic.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parser::TermSyntax;
use crate::rate::Rate;
use crate::semantics::SemanticsError;
use crate::terms::{ActionName, Calculus};

/// Default bound on explored states; guarded recursion under parallel
/// composition can still generate unboundedly many states.
pub const DEFAULT_MAX_STATES: usize = 10_000;

/// Environment variable consulted by the command-line tool for the bound.
pub const MAX_STATES_ENV: &str = "MARKCALC_MAX_STATES";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    /// Integrated time: a durational action.
    ItAct { name: ActionName, rate: Rate },
    /// Orthogonal time: an instantaneous action.
    OtAct { name: ActionName },
    /// Orthogonal time: an exponential delay.
    OtTime { rate: Rate },
}

impl Label {
    pub fn calculus(&self) -> Calculus {
        match self {
            Label::ItAct { .. } => Calculus::It,
            Label::OtAct { .. } | Label::OtTime { .. } => Calculus::Ot,
        }
    }

    pub fn is_action(&self) -> bool {
        matches!(self, Label::ItAct { .. } | Label::OtAct { .. })
    }

    fn text(&self, mult: u64) -> String {
        let base = match self {
            Label::ItAct { name, rate } => format!("{name},{rate}"),
            Label::OtAct { name } => name.to_string(),
            Label::OtTime { rate } => format!("({rate})"),
        };
        if mult > 1 {
            format!("{base} [×{mult}]")
        } else {
            base
        }
    }
}

/// A transition multiset over indexed states. `truncated` records that the
/// exploration bound was reached, in which case no semantic judgment may be
/// based on the system.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlts<S> {
    pub states: Vec<S>,
    pub transitions: BTreeMap<(usize, Label, usize), u64>,
    pub calculus: Calculus,
    pub truncated: bool,
}

impl<S> Mlts<S> {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    /// Outgoing transitions grouped by source state.
    pub fn outgoing(&self) -> Vec<Vec<(&Label, usize, u64)>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for ((src, label, dst), mult) in &self.transitions {
            out[*src].push((label, *dst, *mult));
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum BuildError<S: std::fmt::Debug> {
    /// The state bound was hit; the partial system is attached.
    #[error("state bound reached after {} states", .0.states.len())]
    Truncated(Mlts<S>),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
}

impl<S: std::fmt::Debug> BuildError<S> {
    /// The partial system of a truncation, for display purposes.
    pub fn into_partial(self) -> Option<Mlts<S>> {
        match self {
            BuildError::Truncated(m) => Some(m),
            BuildError::Semantics(_) => None,
        }
    }
}

type StepFn<'a, S> = dyn Fn(&S) -> Result<Vec<(Label, S, u64)>, SemanticsError> + 'a;

fn explore<S>(
    roots: Vec<S>,
    stepper: &StepFn<'_, S>,
    max_states: usize,
    calculus: Calculus,
) -> Result<Mlts<S>, BuildError<S>>
where
    S: Clone + Eq + Hash + std::fmt::Debug,
{
    let mut states: Vec<S> = Vec::new();
    let mut index: HashMap<S, usize> = HashMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();
    let mut transitions: BTreeMap<(usize, Label, usize), u64> = BTreeMap::new();
    let mut truncated = false;

    for root in roots {
        if index.contains_key(&root) {
            continue;
        }
        let i = states.len();
        states.push(root.clone());
        index.insert(root, i);
        queue.push_back(i);
    }

    while let Some(src) = queue.pop_front() {
        let steps = stepper(&states[src].clone()).map_err(BuildError::Semantics)?;
        for (label, target, mult) in steps {
            let dst = match index.get(&target) {
                Some(&i) => i,
                None if states.len() < max_states => {
                    let i = states.len();
                    states.push(target.clone());
                    index.insert(target, i);
                    queue.push_back(i);
                    i
                }
                None => {
                    // Bound hit: drop transitions into unexplored territory
                    // but finish the admitted frontier so the partial system
                    // is closed over its own states.
                    truncated = true;
                    continue;
                }
            };
            *transitions.entry((src, label, dst)).or_insert(0) += mult;
        }
    }

    let mlts = Mlts {
        states,
        transitions,
        calculus,
        truncated,
    };
    if truncated {
        Err(BuildError::Truncated(mlts))
    } else {
        Ok(mlts)
    }
}

/// Breadth-first closure of a single term under `stepper`.
pub fn build<S, F>(
    initial: S,
    calculus: Calculus,
    stepper: F,
    max_states: usize,
) -> Result<Mlts<S>, BuildError<S>>
where
    S: Clone + Eq + Hash + std::fmt::Debug,
    F: Fn(&S) -> Result<Vec<(Label, S, u64)>, SemanticsError>,
{
    explore(vec![initial], &stepper, max_states, calculus)
}

/// Joint closure of two terms in one shared state space, for equivalence
/// checking. Returns the system together with the two root indices.
pub fn build_pair<S, F>(
    left: S,
    right: S,
    calculus: Calculus,
    stepper: F,
    max_states: usize,
) -> Result<(Mlts<S>, usize, usize), BuildError<S>>
where
    S: Clone + Eq + Hash + std::fmt::Debug,
    F: Fn(&S) -> Result<Vec<(Label, S, u64)>, SemanticsError>,
{
    let same = left == right;
    let mlts = explore(vec![left, right], &stepper, max_states, calculus)?;
    let right_ix = if same { 0 } else { 1 };
    Ok((mlts, 0, right_ix))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CtmcError {
    /// An orthogonal-time state offers both an action and a delay, so its
    /// sojourn is not exponentially distributed.
    #[error("state {state} mixes action and time transitions; no Markov chain underlies it")]
    NotMarkovian { state: usize },
}

/// Rate matrix of the underlying chain: entry `(i, j)` sums rate times
/// multiplicity over all timed transitions from `i` to `j`, names
/// discarded. The diagonal is not adjusted to generator form.
pub fn extract_ctmc<S>(m: &Mlts<S>) -> Result<Vec<Vec<Rate>>, CtmcError> {
    if m.calculus == Calculus::Ot {
        let mut has_action = vec![false; m.num_states()];
        let mut has_time = vec![false; m.num_states()];
        for ((src, label, _), _) in &m.transitions {
            match label {
                Label::OtAct { .. } => has_action[*src] = true,
                Label::OtTime { .. } => has_time[*src] = true,
                Label::ItAct { .. } => {}
            }
        }
        if let Some(state) = (0..m.num_states()).find(|&i| has_action[i] && has_time[i]) {
            return Err(CtmcError::NotMarkovian { state });
        }
    }
    let n = m.num_states();
    let mut matrix = vec![vec![Rate::zero(); n]; n];
    for ((src, label, dst), mult) in &m.transitions {
        let rate = match label {
            Label::ItAct { rate, .. } | Label::OtTime { rate } => rate,
            Label::OtAct { .. } => continue,
        };
        matrix[*src][*dst] += &rate.scaled(*mult);
    }
    Ok(matrix)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// DOT digraph: states labeled by index and term text, edges by
/// `a,rate [×k]` / `a` / `(rate) [×k]`.
pub fn export_dot<S: TermSyntax>(m: &Mlts<S>) -> String {
    let mut out = String::new();
    writeln!(out, "digraph mlts {{").unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=box];").unwrap();
    for (i, state) in m.states.iter().enumerate() {
        writeln!(
            out,
            "  s{i} [label=\"{i}: {}\"];",
            dot_escape(&state.print_term())
        )
        .unwrap();
    }
    for ((src, label, dst), mult) in &m.transitions {
        writeln!(
            out,
            "  s{src} -> s{dst} [label=\"{}\"];",
            dot_escape(&label.text(*mult))
        )
        .unwrap();
    }
    if m.truncated {
        writeln!(out, "  truncated [shape=plaintext, label=\"truncated\"];").unwrap();
    }
    writeln!(out, "}}").unwrap();
    out
}

#[derive(Serialize, Deserialize)]
struct LabelJson {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct TransitionJson {
    src: usize,
    label: LabelJson,
    dst: usize,
    mult: u64,
}

#[derive(Serialize, Deserialize)]
struct MltsJson {
    states: Vec<String>,
    initial: usize,
    transitions: Vec<TransitionJson>,
    truncated: bool,
}

fn label_to_json(label: &Label) -> LabelJson {
    match label {
        Label::ItAct { name, rate } => LabelJson {
            kind: "itAct".into(),
            name: Some(name.to_string()),
            rate: Some(rate.to_string()),
        },
        Label::OtAct { name } => LabelJson {
            kind: "otAct".into(),
            name: Some(name.to_string()),
            rate: None,
        },
        Label::OtTime { rate } => LabelJson {
            kind: "otTime".into(),
            name: None,
            rate: Some(rate.to_string()),
        },
    }
}

pub fn export_json<S: TermSyntax>(m: &Mlts<S>) -> String {
    let doc = MltsJson {
        states: m.states.iter().map(|s| s.print_term()).collect(),
        initial: 0,
        transitions: m
            .transitions
            .iter()
            .map(|((src, label, dst), mult)| TransitionJson {
                src: *src,
                label: label_to_json(label),
                dst: *dst,
                mult: *mult,
            })
            .collect(),
        truncated: m.truncated,
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("state {index}: {message}")]
    State { index: usize, message: String },
    #[error("transition {index}: {message}")]
    Transition { index: usize, message: String },
}

fn action_name_from_text(text: &str) -> Result<ActionName, String> {
    if text == "tau" {
        Ok(ActionName::Tau)
    } else {
        ActionName::visible(text).map_err(|e| e.to_string())
    }
}

/// Reads a system back from the JSON interchange form, re-parsing states
/// with the calculus-appropriate parser.
pub fn import_json<S: TermSyntax>(text: &str) -> Result<Mlts<S>, ImportError> {
    let doc: MltsJson = serde_json::from_str(text)?;
    let mut states = Vec::with_capacity(doc.states.len());
    for (index, s) in doc.states.iter().enumerate() {
        states.push(S::parse_term(s).map_err(|e| ImportError::State {
            index,
            message: e.to_string(),
        })?);
    }
    if doc.initial != 0 {
        return Err(ImportError::State {
            index: doc.initial,
            message: "initial state must be index 0".into(),
        });
    }
    let mut transitions = BTreeMap::new();
    for (index, t) in doc.transitions.iter().enumerate() {
        let bad = |message: String| ImportError::Transition { index, message };
        if t.src >= states.len() || t.dst >= states.len() {
            return Err(bad("endpoint out of range".into()));
        }
        if t.mult == 0 {
            return Err(bad("multiplicity must be positive".into()));
        }
        let need = |field: &Option<String>, what: &str| {
            field
                .clone()
                .ok_or_else(|| bad(format!("label kind `{}` needs `{what}`", t.label.kind)))
        };
        let label = match t.label.kind.as_str() {
            "itAct" => Label::ItAct {
                name: action_name_from_text(&need(&t.label.name, "name")?)
                    .map_err(|m| bad(m))?,
                rate: need(&t.label.rate, "rate")?
                    .parse::<Rate>()
                    .map_err(|e| bad(e.to_string()))?,
            },
            "otAct" => Label::OtAct {
                name: action_name_from_text(&need(&t.label.name, "name")?)
                    .map_err(|m| bad(m))?,
            },
            "otTime" => Label::OtTime {
                rate: need(&t.label.rate, "rate")?
                    .parse::<Rate>()
                    .map_err(|e| bad(e.to_string()))?,
            },
            other => return Err(bad(format!("unknown label kind `{other}`"))),
        };
        if label.calculus() != S::CALCULUS {
            return Err(bad(format!(
                "label kind `{}` does not belong to the {} calculus",
                t.label.kind,
                S::CALCULUS
            )));
        }
        *transitions.entry((t.src, label, t.dst)).or_insert(0) += t.mult;
    }
    Ok(Mlts {
        states,
        transitions,
        calculus: S::CALCULUS,
        truncated: doc.truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_it;
    use crate::semantics::{it_stepper, RateComposer};
    use crate::terms::ItTerm;

    fn build_it(src: &str) -> Mlts<ItTerm> {
        let t = parse_it(src).unwrap();
        build(
            t,
            Calculus::It,
            it_stepper(RateComposer::Product),
            DEFAULT_MAX_STATES,
        )
        .unwrap()
    }

    #[test]
    fn nil_has_one_state_no_transitions() {
        let m = build_it("nil");
        assert_eq!(m.num_states(), 1);
        assert!(m.transitions.is_empty());
        assert!(!m.truncated);
    }

    #[test]
    fn guarded_selfloop_is_a_single_state() {
        let m = build_it("rec X.<a,1>.X");
        assert_eq!(m.num_states(), 1);
        let trans: Vec<_> = m.transitions.iter().collect();
        assert_eq!(trans.len(), 1);
        let ((src, label, dst), mult) = trans[0];
        assert_eq!((*src, *dst, *mult), (0, 0, 1));
        assert_eq!(
            *label,
            Label::ItAct {
                name: ActionName::visible("a").unwrap(),
                rate: Rate::from_integer(1),
            }
        );
    }

    #[test]
    fn duplicate_derivations_merge_with_multiplicity() {
        let m = build_it("<a,1>.nil + <a,1>.nil");
        assert_eq!(m.num_states(), 2);
        let trans: Vec<_> = m.transitions.iter().collect();
        assert_eq!(trans.len(), 1);
        assert_eq!(*trans[0].1, 2);
    }

    #[test]
    fn truncation_is_signaled_with_partial_system() {
        // Guarded but with an unbounded state space.
        let t = parse_it("rec X.<a,1>.(X ||{} X)").unwrap();
        let err = build(
            t,
            Calculus::It,
            it_stepper(RateComposer::Product),
            16,
        )
        .unwrap_err();
        let partial = err.into_partial().expect("truncated");
        assert!(partial.truncated);
        assert_eq!(partial.num_states(), 16);
    }

    #[test]
    fn bfs_indexing_is_deterministic() {
        let a = build_it("<a,2>.<b,3>.nil");
        let b = build_it("<a,2>.<b,3>.nil");
        assert_eq!(a, b);
        assert_eq!(a.states[0], parse_it("<a,2>.<b,3>.nil").unwrap());
        assert_eq!(a.states[1], parse_it("<b,3>.nil").unwrap());
        assert_eq!(a.states[2], ItTerm::Nil);
    }

    #[test]
    fn ctmc_race_sum() {
        let m = build_it("<a,1>.nil + <a,1>.nil");
        let matrix = extract_ctmc(&m).unwrap();
        assert_eq!(matrix[0][1], Rate::from_integer(2));
        assert_eq!(matrix[1][0], Rate::zero());
        assert_eq!(matrix[1][1], Rate::zero());
    }

    #[test]
    fn ctmc_of_nil_is_zero() {
        let m = build_it("nil");
        assert_eq!(extract_ctmc(&m).unwrap(), vec![vec![Rate::zero()]]);
    }

    #[test]
    fn ctmc_of_two_step_chain() {
        let m = build_it("<a,2>.<b,3>.nil");
        let z = Rate::zero;
        let expected = vec![
            vec![z(), Rate::from_integer(2), z()],
            vec![z(), z(), Rate::from_integer(3)],
            vec![z(), z(), z()],
        ];
        assert_eq!(extract_ctmc(&m).unwrap(), expected);
    }

    #[test]
    fn dot_export_mentions_states_and_labels() {
        let m = build_it("rec X.<a,1>.X");
        let dot = export_dot(&m);
        assert!(dot.contains("digraph"));
        assert!(dot.contains("a,1"));
        assert!(!dot.contains("[×"));
        let m2 = build_it("<a,1>.nil + <a,1>.nil");
        assert!(export_dot(&m2).contains("[×2]"));
    }

    #[test]
    fn json_round_trips() {
        let m = build_it("(<a,1>.nil + <b,2>.nil)/{a}");
        let json = export_json(&m);
        let back: Mlts<ItTerm> = import_json(&json).unwrap();
        assert_eq!(m, back);
    }
}
