//! Fictitious colors: partitions of the beam set into groups of mutually
//! non-adjacent beams. Scheduling then runs over groups instead of beams.

use serde::Serialize;

use crate::channel::BeamLayout;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColorGrouping {
    /// Beam indices per color, each list ascending.
    pub groups: Vec<Vec<usize>>,
}

impl ColorGrouping {
    /// One group per beam.
    pub fn singletons(beams: usize) -> Self {
        Self {
            groups: (0..beams).map(|b| vec![b]).collect(),
        }
    }

    pub fn colors(&self) -> usize {
        self.groups.len()
    }

    pub fn beams(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }
}

/// Deterministic `c`-coloring of the layout's adjacency graph. Beams are
/// colored in index order, each taking the lowest admissible color, with
/// backtracking when a beam has none left.
pub fn color_grouping(layout: &BeamLayout, c: usize) -> Result<ColorGrouping> {
    let b = layout.beam_count();
    if c == 0 || c > b {
        return Err(Error::Config(format!("cannot split {b} beams into {c} colors")));
    }
    let adjacent: Vec<Vec<bool>> = (0..b)
        .map(|i| (0..b).map(|j| layout.are_adjacent(i, j)).collect())
        .collect();

    let mut colors = vec![usize::MAX; b];
    if !assign(0, c, &adjacent, &mut colors) {
        return Err(Error::Config(format!(
            "no {c}-coloring avoids adjacent beams sharing a color"
        )));
    }
    let mut groups = vec![Vec::new(); c];
    for (beam, &color) in colors.iter().enumerate() {
        groups[color].push(beam);
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::Config(format!("{c} colors leave an empty group on {b} beams")));
    }
    Ok(ColorGrouping { groups })
}

fn assign(beam: usize, c: usize, adjacent: &[Vec<bool>], colors: &mut [usize]) -> bool {
    if beam == colors.len() {
        return true;
    }
    for color in 0..c {
        let clash = (0..beam).any(|other| adjacent[beam][other] && colors[other] == color);
        if !clash {
            colors[beam] = color;
            if assign(beam + 1, c, adjacent, colors) {
                return true;
            }
        }
    }
    colors[beam] = usize::MAX;
    false
}
