//! Error types for instance validation, schedule construction, persistence,
//! and solving.

use thiserror::Error;

/// Invalid argument to a probability computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("standard normal cdf is undefined for NaN")]
    NanArgument,
    #[error("due date must be positive and finite, got {0}")]
    BadDueDate(f64),
}

/// Structural problems with an instance.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("need 1 <= machines <= jobs, got {jobs} jobs on {machines} machines")]
    BadCounts { jobs: usize, machines: usize },
    #[error("job {id}: mean must be positive and finite")]
    BadMean { id: usize },
    #[error("job {id}: variance must be nonnegative and finite")]
    BadVariance { id: usize },
    #[error("job ids must run 1..=n in order; position {position} holds id {id}")]
    BadJobId { position: usize, id: usize },
    #[error("setup matrix is {got}x{got} but the instance has {expected} jobs")]
    BadSetupSize { expected: usize, got: usize },
    #[error("setup({from},{to}) must be nonnegative and finite")]
    BadSetup { from: usize, to: usize },
    #[error("setup({d},{d}) must be stored as zero")]
    BadDiagonal { d: usize },
    #[error("due date must be positive and finite")]
    BadDueDate,
}

/// Failure to read or write an instance or schedule file.
#[derive(Debug, Error)]
pub enum PersistError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] InstanceError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

impl PersistError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        PersistError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Misuse of schedule-building operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("machine index {machine} out of range for {machines} machines")]
    MachineOutOfRange { machine: usize, machines: usize },
    #[error("job {id} is already assigned")]
    JobAlreadyAssigned { id: usize },
    #[error("job {id} out of range for {jobs} jobs")]
    JobOutOfRange { id: usize, jobs: usize },
    #[error("job {id} appears more than once")]
    DuplicateJob { id: usize },
    #[error(
        "{assigned} of {jobs} jobs assigned; a complete schedule needs every job exactly once"
    )]
    Incomplete { assigned: usize, jobs: usize },
}

/// Errors from the exact solvers and oracles.
#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("solver supports at most {max} jobs, instance has {got}")]
    TooManyJobs { got: usize, max: usize },
    #[error("brute force is capped at {cap} jobs, instance has {got}")]
    OverBruteForceCap { got: usize, cap: usize },
}
