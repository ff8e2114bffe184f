//! Reduction steps, conflicts, distributability and synchronisation
//! patterns for mobile ambients (plus safe ambients), the pi-calculus
//! family and the join calculus.

pub mod analysis;
pub mod congruence;
pub mod oracle;
pub mod parser;
pub mod patterns;
pub mod reachability;
pub mod semantics;
pub mod syntax;

pub use syntax::{Calculus, Label, Name, Proc, Term};

use thiserror::Error as ThisError;

#[derive(Debug, Clone, PartialEq, Eq, ThisError)]
pub enum Error {
    #[error("calculus mismatch: {0} vs {1}")]
    CalculusMismatch(Calculus, Calculus),
    #[error(transparent)]
    Parse(#[from] parser::ParseError),
    #[error("step not applicable: {0}")]
    StepNotApplicable(String),
    #[error("steps are not alternative steps of the term")]
    NotAlternative,
    #[error("execution not replayable at position {0}")]
    NotReplayable(usize),
    #[error("witness does not replay: {0}")]
    WitnessReplay(String),
    #[error("expected a {expected} term, found {found}")]
    WrongCalculus { expected: Calculus, found: Calculus },
    #[error("unsupported: {0}")]
    Unsupported(String),
}
