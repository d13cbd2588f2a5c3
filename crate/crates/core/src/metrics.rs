//! Trajectory error, set-level OSPA assignment, detection statistics and
//! the exhaustive on-grid error floor.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dictionary::ParamGrid;
use crate::error::{Error, Result};
use crate::trajectory::TrajectoryParams;

pub const DEFAULT_OSPA_ORDER: f64 = 2.0;
pub const DEFAULT_OSPA_CUTOFF: f64 = 100.0;
pub const DEFAULT_DETECTION_THRESHOLD: f64 = 5.0;

/// Snapshot-wise DOA RMSE in degrees; the two models may differ.
pub fn trajectory_rmse(truth: &TrajectoryParams, est: &TrajectoryParams, len: usize) -> f64 {
    if len == 0 {
        return 0.0;
    }
    let sum: f64 = (0..len)
        .map(|l| {
            let e = truth.doa(l, len) - est.doa(l, len);
            e * e
        })
        .sum();
    (sum / len as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub truth: usize,
    pub estimate: usize,
    /// Cut-off trajectory RMSE.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// One entry per true source, in true-index order.
    pub pairs: Vec<Pair>,
    pub ospa: f64,
    pub unassigned_estimates: Vec<usize>,
}

/// Minimum-cost assignment of every row to a distinct column, `rows <= cols`.
///
/// Shortest augmenting paths with dual potentials; `O(rows^2 cols)`.
/// Returns the column chosen for each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "more rows than columns");
    // 1-based with column 0 as the virtual start.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

/// OSPA between `K` true and `K_hat >= K` estimated trajectories, with the
/// optimal injection of truths into estimates.
pub fn ospa_assign(
    truth: &[TrajectoryParams],
    estimates: &[TrajectoryParams],
    order: f64,
    cutoff: f64,
    len: usize,
) -> Result<Assignment> {
    let (k, k_hat) = (truth.len(), estimates.len());
    if k > k_hat {
        return Err(Error::TooFewEstimates {
            truth: k,
            estimates: k_hat,
        });
    }
    if !(order >= 1.0 && cutoff > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "OSPA needs order >= 1 and cutoff > 0, got p={order}, c={cutoff}"
        )));
    }
    if k_hat == 0 {
        return Ok(Assignment {
            pairs: Vec::new(),
            ospa: 0.0,
            unassigned_estimates: Vec::new(),
        });
    }
    let dist: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| estimates.iter().map(|e| trajectory_rmse(t, e, len).min(cutoff)).collect())
        .collect();
    let cost: Vec<Vec<f64>> = dist.iter().map(|row| row.iter().map(|d| d.powf(order)).collect()).collect();
    let cols = min_cost_assignment(&cost);
    let pairs: Vec<Pair> = cols
        .iter()
        .enumerate()
        .map(|(i, &j)| Pair {
            truth: i,
            estimate: j,
            distance: dist[i][j],
        })
        .collect();
    let matched: f64 = cols.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    let penalty = (k_hat - k) as f64 * cutoff.powf(order);
    let ospa = ((matched + penalty) / k_hat as f64).powf(1.0 / order);
    let unassigned_estimates = (0..k_hat).filter(|j| !cols.contains(j)).collect();
    Ok(Assignment {
        pairs,
        ospa,
        unassigned_estimates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub probability: f64,
    /// Mean distance over detected sources; `None` when nothing was detected.
    pub mean_rmse: Option<f64>,
    /// Per true source, in true-index order.
    pub detected: Vec<bool>,
}

/// A true source is detected when its assigned distance is below `threshold`.
pub fn detection_stats(assignment: &Assignment, threshold: f64) -> DetectionStats {
    let detected: Vec<bool> = assignment.pairs.iter().map(|p| p.distance < threshold).collect();
    let hits: Vec<f64> = assignment
        .pairs
        .iter()
        .filter(|p| p.distance < threshold)
        .map(|p| p.distance)
        .collect();
    let k = assignment.pairs.len();
    DetectionStats {
        probability: if k == 0 { 0.0 } else { hits.len() as f64 / k as f64 },
        mean_rmse: (!hits.is_empty()).then(|| hits.iter().sum::<f64>() / hits.len() as f64),
        detected,
    }
}

/// Smallest RMSE any grid trajectory achieves against `truth`, by exhaustive scan.
/// Ties go to the lowest grid index.
pub fn min_grid_rmse(truth: &TrajectoryParams, grid: &ParamGrid, len: usize) -> (f64, TrajectoryParams) {
    let (best, index) = (0..grid.size())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let g = grid.grid_point(i).expect("index within grid");
            (trajectory_rmse(truth, &g, len), i)
        })
        .reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
        );
    (best, grid.grid_point(index).expect("grid is non-empty"))
}
