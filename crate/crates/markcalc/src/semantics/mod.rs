//! One-state expansion functions for both calculi.

pub mod it;
pub mod ot;

pub use it::{it_stepper, rate_it, step_it, total_rate_it, ItStep, RateComposer};
pub use ot::{
    classify_ot, ot_stepper, rate_ot, step_ot_actions, step_ot_time, total_rate_ot,
    OtClassifyError, OtTimeStep,
};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SemanticsError {
    /// Unfolding never reached a prefix. Well-formed input cannot trigger
    /// this; it is a backstop against ill-formed terms passed in directly.
    #[error("recursion in `{term}` unfolds without reaching a prefix")]
    UnguardedRecursion { term: String },
}
