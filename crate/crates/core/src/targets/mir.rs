//! Most-interest range: the smallest-measure set holding at least `1 - ε`
//! of the target mass, computed on a uniform grid.

use serde::Serialize;

use super::Target;
use crate::error::{Error, Result};

pub const MIN_MIR_RESOLUTION: usize = 1_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MirResult {
    pub epsilon: f64,
    /// Density level of the last cell admitted to the set.
    pub level: f64,
    /// Sorted, disjoint closed intervals.
    pub intervals: Vec<(f64, f64)>,
    pub hull_lo: f64,
    pub hull_hi: f64,
    pub mass: f64,
}

/// Cells over the working support are ranked by density at their midpoint
/// and admitted greedily until their exact (CDF-difference) mass reaches
/// `1 - epsilon`. Equal-density cells are admitted left to right.
pub fn most_interest_range(target: &Target, epsilon: f64, resolution: usize) -> Result<MirResult> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} not in (0, 1)"
        )));
    }
    if resolution < MIN_MIR_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} below minimum {MIN_MIR_RESOLUTION}"
        )));
    }
    let (lo, hi) = target.working_support();
    let width = (hi - lo) / resolution as f64;
    let edge = |j: usize| if j == resolution { hi } else { lo + j as f64 * width };

    let cdf_at_edges: Vec<f64> = (0..=resolution).map(|j| target.cdf(edge(j))).collect();
    let cells: Vec<(f64, f64)> = (0..resolution)
        .map(|j| {
            let density = target.density(0.5 * (edge(j) + edge(j + 1)));
            let mass = (cdf_at_edges[j + 1] - cdf_at_edges[j]).max(0.0);
            (density, mass)
        })
        .collect();

    let mut order: Vec<usize> = (0..resolution).collect();
    // stable sort keeps ties in left-to-right order
    order.sort_by(|&a, &b| cells[b].0.total_cmp(&cells[a].0));

    let goal = 1.0 - epsilon;
    let mut mass = 0.0;
    let mut level = 0.0;
    let mut taken = vec![false; resolution];
    for &j in &order {
        taken[j] = true;
        mass += cells[j].1;
        level = cells[j].0;
        if mass >= goal {
            break;
        }
    }

    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut j = 0;
    while j < resolution {
        if !taken[j] {
            j += 1;
            continue;
        }
        let start = j;
        while j < resolution && taken[j] {
            j += 1;
        }
        intervals.push((edge(start), edge(j)));
    }

    Ok(MirResult {
        epsilon,
        level,
        hull_lo: intervals.first().map_or(lo, |i| i.0),
        hull_hi: intervals.last().map_or(hi, |i| i.1),
        intervals,
        mass,
    })
}
