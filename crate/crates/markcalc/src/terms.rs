//! Abstract syntax for both calculi, well-formedness checking and
//! syntactic classification.
//!
//! Terms are plain syntax trees: two terms are the same state exactly when
//! they are structurally equal. Recursion binders are not identified up to
//! renaming, mirroring the way the operational rules manipulate syntax.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::rate::Rate;

/// Which calculus a term, label or transition system belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Calculus {
    /// Integrated time: durational actions `<a,rate>`.
    It,
    /// Orthogonal time: instantaneous actions plus separate delays `(rate)`.
    Ot,
}

impl fmt::Display for Calculus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Calculus::It => write!(f, "it"),
            Calculus::Ot => write!(f, "ot"),
        }
    }
}

pub const RESERVED_WORDS: [&str; 3] = ["nil", "rec", "tau"];

/// Action names are `[a-z][a-zA-Z0-9_]*` and not a reserved word.
pub fn is_valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    let head_ok = chars.next().is_some_and(|c| c.is_ascii_lowercase());
    head_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !RESERVED_WORDS.contains(&s)
}

/// Process variables start with an uppercase letter, keeping them lexically
/// apart from action names.
pub fn is_valid_variable(s: &str) -> bool {
    let mut chars = s.chars();
    let head_ok = chars.next().is_some_and(|c| c.is_ascii_uppercase());
    head_ok && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A visible action name. The internal name τ is never a `VisName`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VisName(String);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("`{0}` is not a visible action name")]
pub struct InvalidName(pub String);

impl VisName {
    pub fn new(s: &str) -> Result<Self, InvalidName> {
        if is_valid_name(s) {
            Ok(VisName(s.to_string()))
        } else {
            Err(InvalidName(s.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An action name: the internal name τ or a visible name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ActionName {
    Tau,
    Visible(VisName),
}

impl ActionName {
    pub fn visible(s: &str) -> Result<Self, InvalidName> {
        VisName::new(s).map(ActionName::Visible)
    }

    pub fn is_tau(&self) -> bool {
        matches!(self, ActionName::Tau)
    }

    pub fn as_visible(&self) -> Option<&VisName> {
        match self {
            ActionName::Tau => None,
            ActionName::Visible(v) => Some(v),
        }
    }
}

impl fmt::Display for ActionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActionName::Tau => f.write_str("tau"),
            ActionName::Visible(v) => write!(f, "{v}"),
        }
    }
}

/// A visibility-preserving relabeling: a finite map between visible names,
/// the identity elsewhere. τ is never remapped and never a target.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relabeling(BTreeMap<VisName, VisName>);

impl Relabeling {
    pub fn identity() -> Self {
        Relabeling(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VisName, VisName)>) -> Self {
        Relabeling(pairs.into_iter().collect())
    }

    pub fn apply(&self, name: &ActionName) -> ActionName {
        match name {
            ActionName::Tau => ActionName::Tau,
            ActionName::Visible(v) => match self.0.get(v) {
                Some(w) => ActionName::Visible(w.clone()),
                None => name.clone(),
            },
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&VisName, &VisName)> {
        self.0.iter()
    }

    pub fn is_identity_map(&self) -> bool {
        self.0.is_empty()
    }
}

/// Integrated-time process term: every action carries its rate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ItTerm {
    Nil,
    Prefix(ActionName, Rate, Box<ItTerm>),
    Choice(Box<ItTerm>, Box<ItTerm>),
    Par(Box<ItTerm>, Box<ItTerm>, BTreeSet<VisName>),
    Hide(Box<ItTerm>, BTreeSet<VisName>),
    Relab(Box<ItTerm>, Relabeling),
    Var(String),
    Rec(String, Box<ItTerm>),
}

/// Orthogonal-time process term: instantaneous action prefixes and
/// exponential time prefixes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OtTerm {
    Nil,
    ActPrefix(ActionName, Box<OtTerm>),
    TimePrefix(Rate, Box<OtTerm>),
    Choice(Box<OtTerm>, Box<OtTerm>),
    Par(Box<OtTerm>, Box<OtTerm>, BTreeSet<VisName>),
    Hide(Box<OtTerm>, BTreeSet<VisName>),
    Relab(Box<OtTerm>, Relabeling),
    Var(String),
    Rec(String, Box<OtTerm>),
}

impl ItTerm {
    pub fn prefix(name: ActionName, rate: Rate, body: ItTerm) -> ItTerm {
        ItTerm::Prefix(name, rate, Box::new(body))
    }

    pub fn choice(left: ItTerm, right: ItTerm) -> ItTerm {
        ItTerm::Choice(Box::new(left), Box::new(right))
    }

    pub fn par(left: ItTerm, right: ItTerm, sync: BTreeSet<VisName>) -> ItTerm {
        ItTerm::Par(Box::new(left), Box::new(right), sync)
    }

    pub fn hide(body: ItTerm, hidden: BTreeSet<VisName>) -> ItTerm {
        ItTerm::Hide(Box::new(body), hidden)
    }

    pub fn relab(body: ItTerm, phi: Relabeling) -> ItTerm {
        ItTerm::Relab(Box::new(body), phi)
    }

    pub fn rec(var: &str, body: ItTerm) -> ItTerm {
        ItTerm::Rec(var.to_string(), Box::new(body))
    }

    pub fn node_count(&self) -> usize {
        let mut n = 1;
        for c in self.children() {
            n += c.node_count();
        }
        n
    }

    fn children(&self) -> Vec<&ItTerm> {
        match self {
            ItTerm::Nil | ItTerm::Var(_) => vec![],
            ItTerm::Prefix(_, _, p) | ItTerm::Hide(p, _) | ItTerm::Relab(p, _) => vec![p],
            ItTerm::Choice(l, r) | ItTerm::Par(l, r, _) => vec![l, r],
            ItTerm::Rec(_, p) => vec![p],
        }
    }
}

impl OtTerm {
    pub fn act(name: ActionName, body: OtTerm) -> OtTerm {
        OtTerm::ActPrefix(name, Box::new(body))
    }

    pub fn delay(rate: Rate, body: OtTerm) -> OtTerm {
        OtTerm::TimePrefix(rate, Box::new(body))
    }

    pub fn choice(left: OtTerm, right: OtTerm) -> OtTerm {
        OtTerm::Choice(Box::new(left), Box::new(right))
    }

    pub fn par(left: OtTerm, right: OtTerm, sync: BTreeSet<VisName>) -> OtTerm {
        OtTerm::Par(Box::new(left), Box::new(right), sync)
    }

    pub fn hide(body: OtTerm, hidden: BTreeSet<VisName>) -> OtTerm {
        OtTerm::Hide(Box::new(body), hidden)
    }

    pub fn relab(body: OtTerm, phi: Relabeling) -> OtTerm {
        OtTerm::Relab(Box::new(body), phi)
    }

    pub fn rec(var: &str, body: OtTerm) -> OtTerm {
        OtTerm::Rec(var.to_string(), Box::new(body))
    }

    pub fn node_count(&self) -> usize {
        let mut n = 1;
        for c in self.children() {
            n += c.node_count();
        }
        n
    }

    fn children(&self) -> Vec<&OtTerm> {
        match self {
            OtTerm::Nil | OtTerm::Var(_) => vec![],
            OtTerm::ActPrefix(_, p) | OtTerm::TimePrefix(_, p) => vec![p],
            OtTerm::Hide(p, _) | OtTerm::Relab(p, _) | OtTerm::Rec(_, p) => vec![p],
            OtTerm::Choice(l, r) | OtTerm::Par(l, r, _) => vec![l, r],
        }
    }
}

/// Position of a subterm: child indices from the root (0 = only/left child,
/// 1 = right child).
pub type TermPath = Vec<usize>;

pub fn path_string(path: &TermPath) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

/// A single well-formedness violation, located by term path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// A variable occurrence with no enclosing binder of that name.
    FreeVariable { name: String, path: TermPath },
    /// A bound variable occurrence not protected by a prefix inside its
    /// binder, so unfolding it would not make progress.
    UnguardedVariable { name: String, path: TermPath },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::FreeVariable { name, path } => {
                write!(f, "variable `{name}` is free (at {})", path_string(path))
            }
            Violation::UnguardedVariable { name, path } => {
                write!(f, "variable `{name}` is unguarded (at {})", path_string(path))
            }
        }
    }
}

/// Outcome of [`check_well_formed_it`] / [`check_well_formed_ot`]: empty
/// means closed and guarded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WellFormedReport {
    pub violations: Vec<Violation>,
}

impl WellFormedReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for WellFormedReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "well-formed")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

struct WfWalker {
    // (binder name, guarded by a prefix yet)
    env: Vec<(String, bool)>,
    violations: Vec<Violation>,
    path: TermPath,
}

impl WfWalker {
    fn new() -> Self {
        WfWalker {
            env: Vec::new(),
            violations: Vec::new(),
            path: Vec::new(),
        }
    }

    fn visit_var(&mut self, name: &str) {
        // Innermost binder wins when names shadow.
        match self.env.iter().rev().find(|(n, _)| n == name) {
            None => self.violations.push(Violation::FreeVariable {
                name: name.to_string(),
                path: self.path.clone(),
            }),
            Some((_, guarded)) if !guarded => {
                self.violations.push(Violation::UnguardedVariable {
                    name: name.to_string(),
                    path: self.path.clone(),
                })
            }
            Some(_) => {}
        }
    }

    fn under_prefix<F: FnOnce(&mut Self)>(&mut self, f: F) {
        let saved: Vec<bool> = self.env.iter().map(|(_, g)| *g).collect();
        for entry in &mut self.env {
            entry.1 = true;
        }
        f(self);
        for (entry, g) in self.env.iter_mut().zip(saved) {
            entry.1 = g;
        }
    }

    fn it(&mut self, t: &ItTerm) {
        match t {
            ItTerm::Nil => {}
            ItTerm::Var(x) => self.visit_var(x),
            ItTerm::Prefix(_, _, p) => {
                self.path.push(0);
                self.under_prefix(|w| w.it(p));
                self.path.pop();
            }
            ItTerm::Choice(l, r) | ItTerm::Par(l, r, _) => {
                self.path.push(0);
                self.it(l);
                self.path.pop();
                self.path.push(1);
                self.it(r);
                self.path.pop();
            }
            ItTerm::Hide(p, _) | ItTerm::Relab(p, _) => {
                self.path.push(0);
                self.it(p);
                self.path.pop();
            }
            ItTerm::Rec(x, p) => {
                self.env.push((x.clone(), false));
                self.path.push(0);
                self.it(p);
                self.path.pop();
                self.env.pop();
            }
        }
    }

    fn ot(&mut self, t: &OtTerm) {
        match t {
            OtTerm::Nil => {}
            OtTerm::Var(x) => self.visit_var(x),
            // Both prefix forms guard recursion: each unfolding step that
            // reaches one of them has made progress.
            OtTerm::ActPrefix(_, p) | OtTerm::TimePrefix(_, p) => {
                self.path.push(0);
                self.under_prefix(|w| w.ot(p));
                self.path.pop();
            }
            OtTerm::Choice(l, r) | OtTerm::Par(l, r, _) => {
                self.path.push(0);
                self.ot(l);
                self.path.pop();
                self.path.push(1);
                self.ot(r);
                self.path.pop();
            }
            OtTerm::Hide(p, _) | OtTerm::Relab(p, _) => {
                self.path.push(0);
                self.ot(p);
                self.path.pop();
            }
            OtTerm::Rec(x, p) => {
                self.env.push((x.clone(), false));
                self.path.push(0);
                self.ot(p);
                self.path.pop();
                self.env.pop();
            }
        }
    }
}

/// Reports every free variable occurrence and every unguarded recursion
/// variable occurrence; the term is admissible iff the report is empty.
pub fn check_well_formed_it(t: &ItTerm) -> WellFormedReport {
    let mut w = WfWalker::new();
    w.it(t);
    WellFormedReport {
        violations: w.violations,
    }
}

pub fn check_well_formed_ot(t: &OtTerm) -> WellFormedReport {
    let mut w = WfWalker::new();
    w.ot(t);
    WellFormedReport {
        violations: w.violations,
    }
}

/// Syntactic and semantic classification flags. The structural pair applies
/// to both calculi; the nondeterminism pair is computed from the
/// orthogonal-time semantics and is `None` for integrated-time terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TermClass {
    /// No parallel composition operator anywhere.
    pub sequential: Option<bool>,
    /// Every parallel composition has an empty synchronization set.
    pub sync_free: Option<bool>,
    /// No reachable state offers a nondeterministic choice between actions.
    pub no_nondet: Option<bool>,
    /// Nondeterminism occurs only in the `rec Z.(tau.Z + a.Q)` shape.
    pub controlled_nondet: Option<bool>,
}

fn it_structural(t: &ItTerm) -> (bool, bool) {
    match t {
        ItTerm::Nil | ItTerm::Var(_) => (true, true),
        ItTerm::Prefix(_, _, p) | ItTerm::Hide(p, _) | ItTerm::Relab(p, _) | ItTerm::Rec(_, p) => {
            it_structural(p)
        }
        ItTerm::Choice(l, r) => {
            let (ls, lf) = it_structural(l);
            let (rs, rf) = it_structural(r);
            (ls && rs, lf && rf)
        }
        ItTerm::Par(l, r, sync) => {
            let (_, lf) = it_structural(l);
            let (_, rf) = it_structural(r);
            (false, lf && rf && sync.is_empty())
        }
    }
}

pub(crate) fn ot_structural(t: &OtTerm) -> (bool, bool) {
    match t {
        OtTerm::Nil | OtTerm::Var(_) => (true, true),
        OtTerm::ActPrefix(_, p)
        | OtTerm::TimePrefix(_, p)
        | OtTerm::Hide(p, _)
        | OtTerm::Relab(p, _)
        | OtTerm::Rec(_, p) => ot_structural(p),
        OtTerm::Choice(l, r) => {
            let (ls, lf) = ot_structural(l);
            let (rs, rf) = ot_structural(r);
            (ls && rs, lf && rf)
        }
        OtTerm::Par(l, r, sync) => {
            let (_, lf) = ot_structural(l);
            let (_, rf) = ot_structural(r);
            (false, lf && rf && sync.is_empty())
        }
    }
}

/// Structural classification of an integrated-time term.
pub fn classify_it(t: &ItTerm) -> TermClass {
    let (sequential, sync_free) = it_structural(t);
    TermClass {
        sequential: Some(sequential),
        sync_free: Some(sync_free),
        no_nondet: None,
        controlled_nondet: None,
    }
}

fn collect_identifiers_ot(t: &OtTerm, out: &mut BTreeSet<String>) {
    match t {
        OtTerm::Var(x) => {
            out.insert(x.clone());
        }
        OtTerm::Rec(x, p) => {
            out.insert(x.clone());
            collect_identifiers_ot(p, out);
        }
        _ => {
            for c in t.children() {
                collect_identifiers_ot(c, out);
            }
        }
    }
}

/// Smallest identifier of the scheme `Z, Z1, Z2, …` occurring nowhere in
/// `t`, free or bound. Deterministic in `t`.
pub fn fresh_variable(t: &OtTerm) -> String {
    let mut used = BTreeSet::new();
    collect_identifiers_ot(t, &mut used);
    fresh_from(&used)
}

pub(crate) fn fresh_from(used: &BTreeSet<String>) -> String {
    if !used.contains("Z") {
        return "Z".to_string();
    }
    let mut i = 1u64;
    loop {
        let candidate = format!("Z{i}");
        if !used.contains(&candidate) {
            return candidate;
        }
        i += 1;
    }
}

pub fn free_vars_it(t: &ItTerm) -> BTreeSet<String> {
    fn go(t: &ItTerm, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match t {
            ItTerm::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            ItTerm::Rec(x, p) => {
                bound.push(x.clone());
                go(p, bound, out);
                bound.pop();
            }
            _ => {
                for c in t.children() {
                    go(c, bound, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

pub fn free_vars_ot(t: &OtTerm) -> BTreeSet<String> {
    fn go(t: &OtTerm, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match t {
            OtTerm::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            OtTerm::Rec(x, p) => {
                bound.push(x.clone());
                go(p, bound, out);
                bound.pop();
            }
            _ => {
                for c in t.children() {
                    go(c, bound, out);
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// Substitutes `replacement` for every free occurrence of `var` in `t`.
///
/// The replacement must be closed; binders shadow, so occurrences under a
/// `rec var` are left alone and no capture can arise.
pub fn subst_it(t: &ItTerm, var: &str, replacement: &ItTerm) -> ItTerm {
    match t {
        ItTerm::Nil => ItTerm::Nil,
        ItTerm::Var(x) => {
            if x == var {
                replacement.clone()
            } else {
                t.clone()
            }
        }
        ItTerm::Prefix(a, r, p) => {
            ItTerm::Prefix(a.clone(), r.clone(), Box::new(subst_it(p, var, replacement)))
        }
        ItTerm::Choice(l, r) => ItTerm::Choice(
            Box::new(subst_it(l, var, replacement)),
            Box::new(subst_it(r, var, replacement)),
        ),
        ItTerm::Par(l, r, s) => ItTerm::Par(
            Box::new(subst_it(l, var, replacement)),
            Box::new(subst_it(r, var, replacement)),
            s.clone(),
        ),
        ItTerm::Hide(p, h) => ItTerm::Hide(Box::new(subst_it(p, var, replacement)), h.clone()),
        ItTerm::Relab(p, phi) => {
            ItTerm::Relab(Box::new(subst_it(p, var, replacement)), phi.clone())
        }
        ItTerm::Rec(x, p) => {
            if x == var {
                t.clone()
            } else {
                ItTerm::Rec(x.clone(), Box::new(subst_it(p, var, replacement)))
            }
        }
    }
}

pub fn subst_ot(t: &OtTerm, var: &str, replacement: &OtTerm) -> OtTerm {
    match t {
        OtTerm::Nil => OtTerm::Nil,
        OtTerm::Var(x) => {
            if x == var {
                replacement.clone()
            } else {
                t.clone()
            }
        }
        OtTerm::ActPrefix(a, p) => {
            OtTerm::ActPrefix(a.clone(), Box::new(subst_ot(p, var, replacement)))
        }
        OtTerm::TimePrefix(r, p) => {
            OtTerm::TimePrefix(r.clone(), Box::new(subst_ot(p, var, replacement)))
        }
        OtTerm::Choice(l, r) => OtTerm::Choice(
            Box::new(subst_ot(l, var, replacement)),
            Box::new(subst_ot(r, var, replacement)),
        ),
        OtTerm::Par(l, r, s) => OtTerm::Par(
            Box::new(subst_ot(l, var, replacement)),
            Box::new(subst_ot(r, var, replacement)),
            s.clone(),
        ),
        OtTerm::Hide(p, h) => OtTerm::Hide(Box::new(subst_ot(p, var, replacement)), h.clone()),
        OtTerm::Relab(p, phi) => {
            OtTerm::Relab(Box::new(subst_ot(p, var, replacement)), phi.clone())
        }
        OtTerm::Rec(x, p) => {
            if x == var {
                t.clone()
            } else {
                OtTerm::Rec(x.clone(), Box::new(subst_ot(p, var, replacement)))
            }
        }
    }
}

/// One unfolding of a recursive term: the body with the whole `rec` term
/// substituted for the recursion variable.
pub fn unfold_it(var: &str, body: &ItTerm, whole: &ItTerm) -> ItTerm {
    subst_it(body, var, whole)
}

pub fn unfold_ot(var: &str, body: &OtTerm, whole: &OtTerm) -> OtTerm {
    subst_ot(body, var, whole)
}
