//! Path-level scheduling of `M` generations over `M` (or `M + 1`) slots.

mod counting;
mod deletion;
mod exhaustive;
mod graph;
mod grouping;

pub use counting::{counting, factorial, Counts};
pub use deletion::{min_deletion_schedule, Allocation};
pub use exhaustive::{exhaustive_search, leximin_cmp, ExhaustiveResult, DEFAULT_ORACLE_CAP};
pub use graph::{enumerate_paths, Layer, PathCombination, SchedulingProblem, DEFAULT_ENUMERATION_CAP};
pub use grouping::{color_grouping, ColorGrouping};

use crate::channel::NoiseModel;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    pub allocation: Allocation,
    /// Slot-rate evaluations spent (one per enumerated path).
    pub evaluations: u64,
}

/// Enumerates and rates all paths, then runs minimum deletion.
pub fn schedule(problem: &SchedulingProblem<'_>, noise: NoiseModel, cap: u64) -> Result<ScheduleOutcome> {
    let paths = enumerate_paths(problem, noise, cap)?;
    let allocation = min_deletion_schedule(&paths, problem.slots())?;
    Ok(ScheduleOutcome {
        allocation,
        evaluations: paths.len() as u64,
    })
}
