//! Exact solver for robust scheduling on identical parallel machines.
//!
//! Jobs have normally distributed processing times and sequence-dependent
//! setup times; all machines share one due date. A schedule assigns every
//! job to an ordered position on some machine (no machine idle), and its
//! quality is the probability that *every* machine finishes by the due
//! date. [`solve`] maximizes that probability exactly by best-first branch
//! and bound; [`oracles`] holds independent reference implementations used
//! to validate it.
//!
//! Everything is generic over the scalar type through [`Real`] (`f64` is
//! the reference configuration, `f32` also works); the `*64` aliases at
//! the crate root pin `f64`.
//!
//! ```
//! use robsched_core::{solve, Instance64, SolverConfig};
//!
//! let instance = Instance64::generate(6, 2, 42)?;
//! let result = solve(&instance, &SolverConfig::default())?;
//! assert!(result.proven_optimal);
//! assert!(result.objective > 0.0 && result.objective <= 1.0);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bounds;
pub mod error;
pub mod instance;
pub mod normal;
pub mod oracles;
pub mod real;
pub mod schedule;
pub mod solver;

pub use bounds::{
    combined_upper_bound, heuristic_lower_bound, upper_bound_1, upper_bound_2, upper_bound_3,
    BoundSet,
};
pub use error::{DomainError, InstanceError, PersistError, ScheduleError, SolveError};
pub use instance::{Instance, Job, JobId, SetupMatrix};
pub use normal::{ln_std_normal_cdf, std_normal_cdf};
pub use oracles::{
    brute_force_solve, brute_force_solve_with_cap, deterministic_baseline_solve,
    for_each_canonical_schedule, monte_carlo_service_level, DeterministicBaseline,
    MonteCarloEstimate, BRUTE_FORCE_CAP,
};
pub use real::Real;
pub use schedule::{MachineState, PartialSchedule, Schedule};
pub use solver::{child_moves, solve, BranchScheme, SolveResult, SolverConfig, MAX_JOBS};

pub type Instance64 = Instance<f64>;
pub type Schedule64 = Schedule<f64>;
pub type PartialSchedule64 = PartialSchedule<f64>;
pub type SolveResult64 = SolveResult<f64>;
pub type DeterministicBaseline64 = DeterministicBaseline<f64>;
