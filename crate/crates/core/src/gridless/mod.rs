//! Off-grid trajectory localization: a grid scan seeds each source, then
//! continuous refinement moves it off the lattice.

mod nomp;
mod sfw;

pub use nomp::{tl_nomp, tl_nomp_with, NompOptions};
pub use sfw::{tl_sfw, tl_sfw_with, SfwOptions};

use serde::{Deserialize, Serialize};

use crate::estimate::SourceEstimate;
use crate::observation::ObservationBlock;

/// Least-squares fit `1/2 sum ||R||^2` around one outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFits {
    /// Residual fit entering the iteration.
    pub before: f64,
    /// After the new source is placed and amplitudes re-solved.
    pub after_insert: f64,
    /// After the iteration's refinement step.
    pub after_refine: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// Frobenius norm of the residual: initial, then after each source.
    pub residual_norms: Vec<f64>,
    pub fits: Vec<PhaseFits>,
    /// Wall-clock time per outer iteration, milliseconds.
    pub iteration_ms: Vec<f64>,
    /// Local optimizer iterations for the newly inserted source.
    pub local_iterations: Vec<usize>,
    /// Joint refinement iterations (SFW) or cyclic rounds (NOMP).
    pub refine_iterations: Vec<usize>,
    pub newton_fallbacks: usize,
    /// Some refinement loop stopped on its iteration cap.
    pub hit_iteration_cap: bool,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridlessResult {
    pub estimates: Vec<SourceEstimate>,
    /// `Y - sum_k A_k X_k` at the returned estimates.
    pub residual: Vec<ObservationBlock>,
    pub trace: RunTrace,
}

pub(crate) fn frobenius(blocks: &[ObservationBlock]) -> f64 {
    blocks.iter().map(|b| b.data.norm_squared()).sum::<f64>().sqrt()
}
