//! Minimum-deletion selection of node-disjoint paths.
//!
//! Paths are visited from the worst minimum rate upwards. A path is deleted
//! if the remaining paths still contain a perfect system of disjoint paths
//! over the unpruned nodes; otherwise it is locked into the allocation and
//! its nodes are pruned. The first locked path is the bottleneck of every
//! surviving solution, which makes the result max-min optimal over the
//! evaluated paths.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};

use super::graph::{PathCombination, SchedulingProblem, LAYER_BITS, MAX_LAYERS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    pub paths: Vec<PathCombination>,
}

impl Allocation {
    pub fn slots(&self) -> usize {
        self.paths.len()
    }

    /// Minimum rate over all slots.
    pub fn worst_min_rate(&self) -> f64 {
        self.paths.iter().map(|p| p.min_rate).fold(f64::INFINITY, f64::min)
    }

    /// Per-slot minimum rates in ascending order.
    pub fn sorted_slot_mins(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.paths.iter().map(|p| p.min_rate).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Every node of every layer used by exactly one path.
    pub fn is_disjoint(&self, layers: usize, nodes_per_layer: usize) -> bool {
        if self.paths.len() != nodes_per_layer {
            return false;
        }
        let mut used = vec![vec![false; nodes_per_layer]; layers];
        for p in &self.paths {
            if p.nodes.len() != layers {
                return false;
            }
            for (l, &n) in p.nodes.iter().enumerate() {
                if n >= nodes_per_layer || std::mem::replace(&mut used[l][n], true) {
                    return false;
                }
            }
        }
        true
    }
}

/// Backtracking search for `N` disjoint paths covering every node, with a
/// table of node sets known to admit no completion. Paths only ever
/// disappear, so a dead end stays dead for the lifetime of the search.
struct CoverSearch {
    masks: Vec<u128>,
    /// Path indices grouped by their node in layer 0.
    by_first: Vec<Vec<usize>>,
    alive: Vec<bool>,
    full: u128,
    nodes_per_layer: usize,
    dead_ends: HashSet<u128>,
}

impl CoverSearch {
    fn new(paths: &[PathCombination], layers: usize, nodes_per_layer: usize) -> Self {
        let masks: Vec<u128> = paths.iter().map(|p| SchedulingProblem::mask(&p.nodes)).collect();
        let mut by_first = vec![Vec::new(); nodes_per_layer];
        for (i, p) in paths.iter().enumerate() {
            by_first[p.nodes[0]].push(i);
        }
        let full = (0..layers).fold(0u128, |acc, l| {
            acc | (((1u128 << nodes_per_layer) - 1) << (l * LAYER_BITS))
        });
        Self {
            masks,
            by_first,
            alive: vec![true; paths.len()],
            full,
            nodes_per_layer,
            dead_ends: HashSet::new(),
        }
    }

    fn solve(&mut self, used: u128, out: &mut Vec<usize>) -> bool {
        if used == self.full {
            return true;
        }
        if self.dead_ends.contains(&used) {
            return false;
        }
        let first_free = (0..self.nodes_per_layer)
            .find(|&n| used & (1u128 << n) == 0)
            .expect("layer 0 has a free node while the cover is incomplete");
        for k in 0..self.by_first[first_free].len() {
            let p = self.by_first[first_free][k];
            if self.alive[p] && self.masks[p] & used == 0 {
                out.push(p);
                if self.solve(used | self.masks[p], out) {
                    return true;
                }
                out.pop();
            }
        }
        self.dead_ends.insert(used);
        false
    }
}

/// Selects `nodes_per_layer` node-disjoint paths maximizing the minimum
/// per-slot rate. Ties in `min_rate` are visited in input order.
pub fn min_deletion_schedule(paths: &[PathCombination], nodes_per_layer: usize) -> Result<Allocation> {
    let layers = paths
        .first()
        .map(|p| p.nodes.len())
        .ok_or_else(|| Error::Scheduling("no paths to schedule".into()))?;
    if layers == 0 || layers > MAX_LAYERS || nodes_per_layer == 0 || nodes_per_layer > LAYER_BITS {
        return Err(Error::Scheduling(format!(
            "unsupported graph shape: {layers} layers x {nodes_per_layer} nodes"
        )));
    }
    if paths
        .iter()
        .any(|p| p.nodes.len() != layers || p.nodes.iter().any(|&n| n >= nodes_per_layer))
    {
        return Err(Error::Scheduling("paths disagree on the graph shape".into()));
    }

    let mut search = CoverSearch::new(paths, layers, nodes_per_layer);
    let mut witness = Vec::new();
    if !search.solve(0, &mut witness) {
        return Err(Error::Scheduling(
            "paths admit no system of disjoint paths covering every node".into(),
        ));
    }
    let mut in_witness = vec![false; paths.len()];
    for &p in &witness {
        in_witness[p] = true;
    }

    let mut visit: Vec<usize> = (0..paths.len()).collect();
    visit.sort_by(|&a, &b| paths[a].min_rate.total_cmp(&paths[b].min_rate));

    let mut locked: Vec<usize> = Vec::with_capacity(nodes_per_layer);
    let mut locked_mask = 0u128;
    for p in visit {
        if locked.len() == nodes_per_layer {
            break;
        }
        if search.masks[p] & locked_mask != 0 {
            search.alive[p] = false;
            continue;
        }
        search.alive[p] = false;
        if !in_witness[p] {
            continue;
        }
        let mut rest = Vec::new();
        if search.solve(locked_mask, &mut rest) {
            in_witness.iter_mut().for_each(|w| *w = false);
            for &q in locked.iter().chain(&rest) {
                in_witness[q] = true;
            }
        } else {
            // Dead ends recorded without `p` stay valid: every later state
            // contains p's nodes, where `p` could not be placed anyway.
            search.alive[p] = true;
            locked.push(p);
            locked_mask |= search.masks[p];
        }
    }
    debug_assert_eq!(locked.len(), nodes_per_layer);

    Ok(Allocation {
        paths: locked.into_iter().map(|p| paths[p].clone()).collect(),
    })
}
