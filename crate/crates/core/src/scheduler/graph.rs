//! Layered node graph over which paths are enumerated.
//!
//! A layer is either a single beam or a color group of beams. Node `n` of a
//! layer names, for every beam in the layer, which generation's user is
//! transmitted when the node is picked. With a free slot, each layer gets one
//! extra silent node whose beams stay idle.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{generation_rng, ChannelMatrix, NoiseModel, C64};
use crate::error::{Error, Result};
use crate::rates::optimal_rates;

use super::grouping::ColorGrouping;

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// Bits reserved per layer in a node mask.
pub(crate) const LAYER_BITS: usize = 16;
pub(crate) const MAX_LAYERS: usize = 128 / LAYER_BITS;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layer {
    pub beams: Vec<usize>,
    /// `nodes[n][k]`: generation transmitting in `beams[k]` under node `n`;
    /// `None` for the silent node.
    pub nodes: Vec<Option<Vec<usize>>>,
}

impl Layer {
    fn is_silent(&self, node: usize) -> bool {
        self.nodes[node].is_none()
    }
}

/// One user (or silence) per beam, all in the same slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathCombination {
    /// Node picked in every layer.
    pub nodes: Vec<usize>,
    /// Generation (within the scheduled group) transmitting in each beam.
    pub user_per_beam: Vec<Option<usize>>,
    /// Rate per beam, bits/s/Hz; zero for silent beams.
    pub rates: Vec<f64>,
    /// Beams in decode order; silent beams omitted.
    pub order: Vec<usize>,
    /// Minimum over transmitting beams.
    pub min_rate: f64,
}

impl PathCombination {
    pub fn active_rates(&self) -> Vec<f64> {
        self.user_per_beam
            .iter()
            .zip(&self.rates)
            .filter_map(|(u, &r)| u.map(|_| r))
            .collect()
    }

    pub fn active_users(&self) -> usize {
        self.user_per_beam.iter().filter(|u| u.is_some()).count()
    }
}

#[derive(Debug, Clone)]
pub struct SchedulingProblem<'a> {
    generations: &'a [ChannelMatrix],
    layers: Vec<Layer>,
    beams: usize,
    free_slot: bool,
}

impl<'a> SchedulingProblem<'a> {
    /// Every beam is its own layer; node `n` is generation `n`.
    pub fn ungrouped(generations: &'a [ChannelMatrix]) -> Result<Self> {
        let beams = check_generations(generations)?;
        Self::grouped_with(generations, &ColorGrouping::singletons(beams), None)
    }

    /// Layers are color groups. Inside a group, the first beam's user `n`
    /// is paired with a seeded random permutation of users in each other
    /// beam.
    pub fn grouped(generations: &'a [ChannelMatrix], grouping: &ColorGrouping, pairing_seed: u64) -> Result<Self> {
        Self::grouped_with(generations, grouping, Some(pairing_seed))
    }

    fn grouped_with(
        generations: &'a [ChannelMatrix],
        grouping: &ColorGrouping,
        pairing_seed: Option<u64>,
    ) -> Result<Self> {
        let beams = check_generations(generations)?;
        if grouping.beams() != beams {
            return Err(Error::Config(format!(
                "grouping covers {} beams, channels have {beams}",
                grouping.beams()
            )));
        }
        if grouping.colors() > MAX_LAYERS {
            return Err(Error::Config(format!("at most {MAX_LAYERS} layers supported")));
        }
        let m = generations.len();
        let layers = grouping
            .groups
            .iter()
            .enumerate()
            .map(|(g, beams_in_group)| {
                let mut rng = pairing_seed.map(|s| generation_rng(s, g));
                let columns: Vec<Vec<usize>> = beams_in_group
                    .iter()
                    .enumerate()
                    .map(|(k, _)| {
                        let mut perm: Vec<usize> = (0..m).collect();
                        if k > 0 {
                            if let Some(rng) = rng.as_mut() {
                                perm.shuffle(rng);
                            }
                        }
                        perm
                    })
                    .collect();
                Layer {
                    beams: beams_in_group.clone(),
                    nodes: (0..m)
                        .map(|n| Some(columns.iter().map(|perm| perm[n]).collect()))
                        .collect(),
                }
            })
            .collect();
        Ok(Self {
            generations,
            layers,
            beams,
            free_slot: false,
        })
    }

    /// Adds a silent node to every layer: `m` generations over `m + 1`
    /// slots, every beam idle in exactly one slot.
    pub fn with_free_slot(mut self) -> Self {
        if !self.free_slot {
            for layer in &mut self.layers {
                layer.nodes.push(None);
            }
            self.free_slot = true;
        }
        self
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn beams(&self) -> usize {
        self.beams
    }

    pub fn generations(&self) -> &[ChannelMatrix] {
        self.generations
    }

    pub fn has_free_slot(&self) -> bool {
        self.free_slot
    }

    /// Nodes per layer, equal to the number of slots of an allocation.
    pub fn slots(&self) -> usize {
        self.layers[0].nodes.len()
    }

    /// Number of admissible paths.
    pub fn path_count(&self) -> u128 {
        let total = (self.slots() as u128).pow(self.layers.len() as u32);
        if self.free_slot {
            total - 1
        } else {
            total
        }
    }

    fn is_all_silent(&self, nodes: &[usize]) -> bool {
        self.layers.iter().zip(nodes).all(|(l, &n)| l.is_silent(n))
    }

    /// Composes the slot matrix for `nodes` and rates it under the max-min
    /// decode order.
    pub fn evaluate(&self, nodes: &[usize], noise: NoiseModel) -> Result<PathCombination> {
        let mut user_per_beam = vec![None; self.beams];
        for (layer, &n) in self.layers.iter().zip(nodes) {
            if let Some(users) = &layer.nodes[n] {
                for (&beam, &g) in layer.beams.iter().zip(users) {
                    user_per_beam[beam] = Some(g);
                }
            }
        }
        let active: Vec<usize> = (0..self.beams).filter(|&b| user_per_beam[b].is_some()).collect();
        if active.is_empty() {
            return Err(Error::Scheduling("a slot must carry at least one user".into()));
        }
        let slot = DMatrix::<C64>::from_fn(self.beams, active.len(), |r, k| {
            let beam = active[k];
            let g = user_per_beam[beam].expect("active beam");
            self.generations[g].entries[(r, beam)]
        });
        let slot_rates = optimal_rates(&slot, noise)?;
        let mut rates = vec![0.0; self.beams];
        for (k, &beam) in active.iter().enumerate() {
            rates[beam] = slot_rates.rates[k];
        }
        Ok(PathCombination {
            nodes: nodes.to_vec(),
            user_per_beam,
            rates,
            order: slot_rates.order.iter().map(|&k| active[k]).collect(),
            min_rate: slot_rates.min_rate,
        })
    }

    /// All admissible node tuples in lexicographic order.
    pub fn node_tuples(&self) -> Vec<Vec<usize>> {
        let n = self.slots();
        let l = self.layers.len();
        let mut out = Vec::new();
        let mut cur = vec![0usize; l];
        loop {
            if !(self.free_slot && self.is_all_silent(&cur)) {
                out.push(cur.clone());
            }
            let mut k = l;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                cur[k] += 1;
                if cur[k] < n {
                    break;
                }
                cur[k] = 0;
            }
        }
    }

    /// Node mask with `LAYER_BITS` bits per layer.
    pub(crate) fn mask(nodes: &[usize]) -> u128 {
        nodes
            .iter()
            .enumerate()
            .fold(0u128, |acc, (layer, &n)| acc | (1u128 << (layer * LAYER_BITS + n)))
    }
}

fn check_generations(generations: &[ChannelMatrix]) -> Result<usize> {
    let first = generations
        .first()
        .ok_or_else(|| Error::Scheduling("no channel generations to schedule".into()))?;
    let b = first.dim();
    if b == 0 {
        return Err(Error::Scheduling("channel matrices are empty".into()));
    }
    if generations.len() + 1 > LAYER_BITS {
        return Err(Error::Config(format!(
            "at most {} users per beam supported",
            LAYER_BITS - 1
        )));
    }
    for h in generations {
        if h.entries.nrows() != b || h.entries.ncols() != b {
            return Err(Error::Scheduling(format!(
                "generation {} is {}x{}, expected {b}x{b}",
                h.generation,
                h.entries.nrows(),
                h.entries.ncols()
            )));
        }
    }
    Ok(b)
}

/// Evaluates every admissible path. Refuses when the path count exceeds
/// `cap`.
pub fn enumerate_paths(problem: &SchedulingProblem<'_>, noise: NoiseModel, cap: u64) -> Result<Vec<PathCombination>> {
    let count = problem.path_count();
    if count > cap as u128 {
        return Err(Error::Cap(format!(
            "{count} paths exceed the enumeration cap of {cap}; enable color grouping (c_colors) or raise the cap"
        )));
    }
    problem
        .node_tuples()
        .into_par_iter()
        .map(|nodes| problem.evaluate(&nodes, noise))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{default_layout, generate_channels};
    use crate::scheduler::grouping::color_grouping;

    fn channels(b: usize, m: usize, seed: u64) -> Vec<ChannelMatrix> {
        let layout = default_layout(b).unwrap();
        generate_channels(&layout, m, seed, NoiseModel::default(), 15.0).unwrap()
    }

    #[test]
    fn path_counts() {
        let g = channels(3, 2, 1);
        let p = SchedulingProblem::ungrouped(&g).unwrap();
        let paths = enumerate_paths(&p, NoiseModel::default(), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(paths.len(), 8);
    }

    #[test]
    fn single_generation_is_its_own_path() {
        let g = channels(4, 1, 2);
        let p = SchedulingProblem::ungrouped(&g).unwrap();
        let paths = enumerate_paths(&p, NoiseModel::default(), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].user_per_beam, vec![Some(0); 4]);
        let direct = optimal_rates(&g[0].entries, NoiseModel::default()).unwrap();
        assert_eq!(paths[0].rates, direct.rates);
    }

    #[test]
    fn grouping_shrinks_the_path_set() {
        let layout = default_layout(7).unwrap();
        let g = generate_channels(&layout, 3, 4, NoiseModel::default(), 15.0).unwrap();
        let grouping = color_grouping(&layout, 3).unwrap();
        let p = SchedulingProblem::grouped(&g, &grouping, 9).unwrap();
        assert_eq!(p.path_count(), 27);
        assert_eq!(SchedulingProblem::ungrouped(&g).unwrap().path_count(), 2187);
        let paths = enumerate_paths(&p, NoiseModel::default(), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(paths.len(), 27);
        for path in &paths {
            assert!(path.user_per_beam.iter().all(Option::is_some));
        }
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let g = channels(3, 3, 5);
        let p = SchedulingProblem::ungrouped(&g).unwrap();
        let err = enumerate_paths(&p, NoiseModel::default(), 26).unwrap_err();
        assert!(matches!(err, Error::Cap(_)));
        assert!(err.to_string().contains("grouping"));
    }

    #[test]
    fn free_slot_paths_skip_the_empty_slot() {
        let g = channels(2, 2, 6);
        let p = SchedulingProblem::ungrouped(&g).unwrap().with_free_slot();
        assert_eq!(p.slots(), 3);
        assert_eq!(p.path_count(), 8);
        let paths = enumerate_paths(&p, NoiseModel::default(), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(paths.len(), 8);
        assert!(paths.iter().all(|p| p.active_users() >= 1));
        let half_silent = paths.iter().find(|p| p.active_users() == 1).unwrap();
        let silent = half_silent.user_per_beam.iter().position(Option::is_none).unwrap();
        assert_eq!(half_silent.rates[silent], 0.0);
        assert!(half_silent.min_rate > 0.0);
    }
}
