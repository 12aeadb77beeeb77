//! Adaptive scheduling depth with free-slot assignment (FSA).
//!
//! Generations arrive as a stream. Each schedule starts at depth 1; while
//! the worst slot misses `r_th`, the next generation is pulled in and the
//! group is rescheduled one level deeper. Once the depth reaches `m_fsa` and
//! still misses, a last try spreads the `m_fsa` generations over
//! `m_fsa + 1` slots, leaving every beam idle in exactly one slot.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelMatrix, NoiseModel};
use crate::error::{Error, Result};
use crate::metrics::jain_index;
use crate::scheduler::{
    enumerate_paths, schedule, Allocation, ColorGrouping, PathCombination, ScheduleOutcome, SchedulingProblem,
    DEFAULT_ENUMERATION_CAP,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FsaConfig {
    /// Requested minimum per-user rate, bits/s/Hz.
    pub r_th: f64,
    /// Deepest regular schedule before a free slot is granted.
    pub m_fsa: usize,
    /// Keep the free-slot schedule even when it misses `r_th`; otherwise
    /// fall back to the depth-`m_fsa` schedule.
    pub keep_best_on_failure: bool,
}

impl FsaConfig {
    pub fn new(r_th: f64, m_fsa: usize) -> Result<Self> {
        let cfg = Self {
            r_th,
            m_fsa,
            keep_best_on_failure: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_th >= 0.0) || !self.r_th.is_finite() {
            return Err(Error::Config(format!(
                "r_th must be finite and non-negative, got {}",
                self.r_th
            )));
        }
        if self.m_fsa == 0 {
            return Err(Error::Config("m_fsa must be at least 1".into()));
        }
        Ok(())
    }
}

/// How path problems are built for every schedule of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchedulingSetup {
    pub noise: NoiseModel,
    /// Color groups; `None` schedules beam by beam.
    pub grouping: Option<ColorGrouping>,
    pub enumeration_cap: u64,
    /// Seed for the random pairing inside color groups.
    pub seed: u64,
}

impl Default for SchedulingSetup {
    fn default() -> Self {
        Self {
            noise: NoiseModel::default(),
            grouping: None,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            seed: 0,
        }
    }
}

impl SchedulingSetup {
    /// Problem for the group of generations starting at stream index
    /// `first_generation`.
    pub fn problem<'a>(
        &self,
        generations: &'a [ChannelMatrix],
        first_generation: usize,
    ) -> Result<SchedulingProblem<'a>> {
        match &self.grouping {
            None => SchedulingProblem::ungrouped(generations),
            Some(g) => SchedulingProblem::grouped(
                generations,
                g,
                pairing_seed(self.seed, first_generation, generations.len()),
            ),
        }
    }

    pub fn schedule(&self, generations: &[ChannelMatrix], first_generation: usize) -> Result<ScheduleOutcome> {
        let problem = self.problem(generations, first_generation)?;
        schedule(&problem, self.noise, self.enumeration_cap)
    }

    pub fn schedule_free_slot(
        &self,
        generations: &[ChannelMatrix],
        first_generation: usize,
    ) -> Result<ScheduleOutcome> {
        let problem = self.problem(generations, first_generation)?.with_free_slot();
        schedule(&problem, self.noise, self.enumeration_cap)
    }

    /// Free-slot schedules need at least two layers, otherwise the silent
    /// slot would be empty.
    pub fn supports_free_slot(&self, beams: usize) -> bool {
        self.grouping.as_ref().map_or(beams, ColorGrouping::colors) >= 2
    }
}

fn pairing_seed(seed: u64, first_generation: usize, depth: usize) -> u64 {
    let mut z = seed ^ ((first_generation as u64) << 8 | depth as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Paths over `m_fsa + 1` nodes per layer, the extra node being silent.
/// The all-silent path is never produced.
pub fn fsa_path_enumeration(
    generations: &[ChannelMatrix],
    setup: &SchedulingSetup,
    first_generation: usize,
) -> Result<Vec<PathCombination>> {
    let problem = setup.problem(generations, first_generation)?.with_free_slot();
    enumerate_paths(&problem, setup.noise, setup.enumeration_cap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleRecord {
    /// Stream index of the first generation in this schedule.
    pub first_generation: usize,
    /// Generations (users per beam) in the final schedule.
    pub m_used: usize,
    /// Slots spent: `m_used`, or `m_used + 1` with a free slot.
    pub slots_used: usize,
    pub fsa_used: bool,
    pub satisfied: bool,
    /// The stream ran out before `r_th` was met.
    pub truncated: bool,
    /// Slot-rate evaluations over all tries of this schedule.
    pub evaluations: u64,
    pub allocation: Allocation,
}

impl ScheduleRecord {
    fn new(
        first_generation: usize,
        m: usize,
        r_th: f64,
        outcome: ScheduleOutcome,
        fsa_used: bool,
        evaluations: u64,
    ) -> Self {
        let satisfied = outcome.allocation.worst_min_rate() >= r_th;
        Self {
            first_generation,
            m_used: m,
            slots_used: outcome.allocation.slots(),
            fsa_used,
            satisfied,
            truncated: false,
            evaluations,
            allocation: outcome.allocation,
        }
    }

    pub fn slot_min_rates(&self) -> Vec<f64> {
        self.allocation.paths.iter().map(|p| p.min_rate).collect()
    }

    pub fn jain_indices(&self) -> Result<Vec<f64>> {
        self.allocation
            .paths
            .iter()
            .map(|p| jain_index(&p.active_rates()))
            .collect()
    }

    pub fn users(&self) -> usize {
        self.allocation.paths.iter().map(PathCombination::active_users).sum()
    }

    pub fn cells(&self) -> usize {
        self.allocation.paths.iter().map(|p| p.user_per_beam.len()).sum()
    }
}

/// Streams through `stream`, escalating the depth until `cfg.r_th` is met
/// and granting one free slot past `cfg.m_fsa`.
pub fn adaptive_schedule(
    stream: &[ChannelMatrix],
    cfg: &FsaConfig,
    setup: &SchedulingSetup,
) -> Result<Vec<ScheduleRecord>> {
    cfg.validate()?;
    if stream.is_empty() {
        return Err(Error::Config("empty generation stream".into()));
    }
    let beams = stream[0].dim();
    let mut records = Vec::new();
    let mut next = 0;
    while next < stream.len() {
        let start = next;
        let mut depth = 1;
        let mut evaluations = 0;
        loop {
            let group = &stream[start..start + depth];
            let outcome = setup.schedule(group, start)?;
            evaluations += outcome.evaluations;
            if outcome.allocation.worst_min_rate() >= cfg.r_th {
                records.push(ScheduleRecord::new(start, depth, cfg.r_th, outcome, false, evaluations));
                break;
            }
            if depth >= cfg.m_fsa {
                let record = if setup.supports_free_slot(beams) {
                    let free = setup.schedule_free_slot(group, start)?;
                    evaluations += free.evaluations;
                    let met = free.allocation.worst_min_rate() >= cfg.r_th;
                    if met || cfg.keep_best_on_failure {
                        ScheduleRecord::new(start, depth, cfg.r_th, free, true, evaluations)
                    } else {
                        ScheduleRecord::new(start, depth, cfg.r_th, outcome, false, evaluations)
                    }
                } else {
                    ScheduleRecord::new(start, depth, cfg.r_th, outcome, false, evaluations)
                };
                records.push(record);
                break;
            }
            if start + depth == stream.len() {
                let mut record = ScheduleRecord::new(start, depth, cfg.r_th, outcome, false, evaluations);
                record.truncated = true;
                records.push(record);
                break;
            }
            depth += 1;
        }
        next = start + depth;
    }
    Ok(records)
}

/// Benchmark without adaptation: consecutive groups of `m` generations, the
/// last group possibly shorter.
pub fn fixed_depth_schedule(
    stream: &[ChannelMatrix],
    m: usize,
    r_th: f64,
    setup: &SchedulingSetup,
) -> Result<Vec<ScheduleRecord>> {
    if m == 0 {
        return Err(Error::Config("scheduling depth must be at least 1".into()));
    }
    if stream.is_empty() {
        return Err(Error::Config("empty generation stream".into()));
    }
    stream
        .par_chunks(m)
        .enumerate()
        .map(|(k, group)| {
            let start = k * m;
            let outcome = setup.schedule(group, start)?;
            let evaluations = outcome.evaluations;
            Ok(ScheduleRecord::new(
                start,
                group.len(),
                r_th,
                outcome,
                false,
                evaluations,
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyReport {
    pub slots: usize,
    pub schedules: usize,
    /// Fraction of user-carrying slots whose minimum rate meets `r_th`.
    pub availability: f64,
    /// Occupied beam-slot cells over all cells.
    pub efficiency: f64,
    /// Fraction of slots in which every beam transmits.
    pub efficiency_full_slots: f64,
    /// Fraction of slots belonging to free-slot schedules.
    pub fsa_use: f64,
    /// Fraction of slots by the slot count of the schedule they belong to.
    pub slots_by_size: BTreeMap<usize, f64>,
    pub users: usize,
    pub evaluations: u64,
}

pub fn efficiency_accounting(records: &[ScheduleRecord], r_th: f64) -> Result<EfficiencyReport> {
    if records.is_empty() {
        return Err(Error::NoSamples("no schedule records".into()));
    }
    let mut slots = 0usize;
    let mut available = 0usize;
    let mut cells = 0usize;
    let mut users = 0usize;
    let mut full_slots = 0usize;
    let mut fsa_slots = 0usize;
    let mut by_size: BTreeMap<usize, usize> = BTreeMap::new();
    let mut evaluations = 0u64;
    for r in records {
        let n = r.allocation.slots();
        slots += n;
        cells += r.cells();
        users += r.users();
        evaluations += r.evaluations;
        available += r.allocation.paths.iter().filter(|p| p.min_rate >= r_th).count();
        full_slots += r
            .allocation
            .paths
            .iter()
            .filter(|p| p.active_users() == p.user_per_beam.len())
            .count();
        if r.fsa_used {
            fsa_slots += n;
        }
        *by_size.entry(r.slots_used).or_default() += n;
    }
    let total = slots as f64;
    Ok(EfficiencyReport {
        slots,
        schedules: records.len(),
        availability: available as f64 / total,
        efficiency: users as f64 / cells as f64,
        efficiency_full_slots: full_slots as f64 / total,
        fsa_use: fsa_slots as f64 / total,
        slots_by_size: by_size.into_iter().map(|(k, v)| (k, v as f64 / total)).collect(),
        users,
        evaluations,
    })
}
