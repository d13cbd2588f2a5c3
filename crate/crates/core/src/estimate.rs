use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::trajectory::TrajectoryParams;

/// One recovered source: trajectory plus per-band snapshot amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceEstimate {
    pub params: TrajectoryParams,
    /// `amplitudes[f][l]`
    pub amplitudes: Vec<Vec<Complex64>>,
}

/// Regroups `[f][k][l]` amplitudes into one estimate per source.
pub(crate) fn estimates_from(params: &[TrajectoryParams], amplitudes: &[Vec<Vec<Complex64>>]) -> Vec<SourceEstimate> {
    params
        .iter()
        .enumerate()
        .map(|(k, p)| SourceEstimate {
            params: p.clone(),
            amplitudes: amplitudes.iter().map(|band| band[k].clone()).collect(),
        })
        .collect()
}
