//! Exhaustive search over allocations, used as an oracle for the path-level
//! scheduler.

use std::cmp::Ordering;

use serde::Serialize;

use crate::channel::NoiseModel;
use crate::error::{Error, Result};

use super::deletion::Allocation;
use super::graph::SchedulingProblem;

pub const DEFAULT_ORACLE_CAP: u64 = 100_000;

#[derive(Debug, Clone, Serialize)]
pub struct ExhaustiveResult {
    pub allocation: Allocation,
    /// Allocations visited (free-slot allocations with an empty slot excluded).
    pub allocations: u64,
    /// Slot evaluations performed.
    pub evaluations: u64,
}

/// Compares ascending slot-minimum vectors: larger worst slot wins, then the
/// next-worst, and so on.
pub fn leximin_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn factorial_u64(n: usize) -> Option<u64> {
    (1..=n as u64).try_fold(1u64, |acc, k| acc.checked_mul(k))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Visits every allocation (slot `s` holds node `s` of layer 0; every other
/// layer is permuted) and keeps the leximin-best. Every slot of every
/// allocation is evaluated afresh.
pub fn exhaustive_search(problem: &SchedulingProblem<'_>, noise: NoiseModel, cap: u64) -> Result<ExhaustiveResult> {
    let n = problem.slots();
    let layers = problem.layers().len();
    let per_layer = factorial_u64(n).ok_or_else(|| Error::Cap(format!("{n}! overflows")))?;
    let total = (1..layers).try_fold(1u64, |acc, _| acc.checked_mul(per_layer));
    match total {
        Some(t) if t <= cap => {}
        _ => {
            return Err(Error::Cap(format!(
                "({n}!)^{} allocations exceed the oracle cap of {cap}",
                layers - 1
            )))
        }
    }

    let perms = permutations(n);
    let silent: Vec<Option<usize>> = problem
        .layers()
        .iter()
        .map(|l| l.nodes.iter().position(Option::is_none))
        .collect();

    let mut choice = vec![0usize; layers];
    let mut best: Option<(Vec<f64>, Allocation)> = None;
    let mut allocations = 0u64;
    let mut evaluations = 0u64;
    loop {
        let slots: Vec<Vec<usize>> = (0..n)
            .map(|s| {
                (0..layers)
                    .map(|l| if l == 0 { s } else { perms[choice[l]][s] })
                    .collect()
            })
            .collect();
        let has_empty_slot = problem.has_free_slot()
            && slots
                .iter()
                .any(|nodes| nodes.iter().zip(&silent).all(|(&n, s)| Some(n) == *s));
        if !has_empty_slot {
            allocations += 1;
            let mut paths = Vec::with_capacity(n);
            for nodes in &slots {
                paths.push(problem.evaluate(nodes, noise)?);
                evaluations += 1;
            }
            let alloc = Allocation { paths };
            let key = alloc.sorted_slot_mins();
            if best
                .as_ref()
                .is_none_or(|(k, _)| leximin_cmp(&key, k) == Ordering::Greater)
            {
                best = Some((key, alloc));
            }
        }

        let mut l = layers;
        loop {
            if l <= 1 {
                let (_, allocation) =
                    best.ok_or_else(|| Error::Scheduling("no admissible allocation exists".into()))?;
                return Ok(ExhaustiveResult {
                    allocation,
                    allocations,
                    evaluations,
                });
            }
            l -= 1;
            choice[l] += 1;
            if choice[l] < perms.len() {
                break;
            }
            choice[l] = 0;
        }
    }
}
