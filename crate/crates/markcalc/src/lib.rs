//! Workbench for two Markovian process calculi: an integrated-time one,
//! where every action carries an exponentially distributed duration, and an
//! orthogonal-time one, where instantaneous actions alternate with
//! exponential delays.
//!
//! The crate provides concrete syntax and printing for both calculi
//! ([`parser`]), the operational semantics as labeled multitransition
//! systems ([`semantics`], [`mlts`]), Markovian bisimilarity checkers — one
//! integrated-time, three orthogonal-time variants for eager, lazy and
//! maximal-progress readings of action urgency ([`bisim`]) — and the three
//! class-restricted translations from the integrated-time calculus into the
//! orthogonal-time one together with their correctness self-checks
//! ([`encode`]). [`corpus`] generates seeded random term corpora for the
//! equivalence-preservation harness.

pub mod bisim;
pub mod corpus;
pub mod encode;
pub mod mlts;
pub mod parser;
pub mod rate;
pub mod semantics;
pub mod terms;

pub use bisim::{bisim_it, bisim_ot, equivalent_it, equivalent_ot, OtVariant, Partition, Verdict};
pub use encode::{check_lemmas, gamma_eager, gamma_lazy, gamma_max_progress};
pub use mlts::{Label, Mlts, DEFAULT_MAX_STATES};
pub use parser::{parse_it, parse_ot, print_it, print_ot};
pub use rate::Rate;
pub use semantics::{step_it, step_ot_actions, step_ot_time, RateComposer};
pub use terms::{ActionName, Calculus, ItTerm, OtTerm, VisName};
