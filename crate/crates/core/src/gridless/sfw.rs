use std::time::Instant;

use super::{frobenius, GridlessResult, PhaseFits, RunTrace};
use crate::dictionary::ParamGrid;
use crate::error::Result;
use crate::estimate::estimates_from;
use crate::grid::{find_peaks, Spectrum};
use crate::kernel;
use crate::observation::{check_blocks, ObservationBlock};
use crate::optim::{amplitudes_ls, joint_refine_with, maximize_local_with, Bounds, LocalOptions};
use crate::trajectory::TrajectoryParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfwOptions {
    /// Number of residual-spectrum peaks used to start the local search.
    pub multistart: usize,
    pub local: LocalOptions,
}

impl Default for SfwOptions {
    fn default() -> Self {
        Self {
            multistart: 1,
            local: LocalOptions::default(),
        }
    }
}

pub fn tl_sfw(
    blocks: &[ObservationBlock],
    grid: &ParamGrid,
    k: usize,
    bounds: &Bounds,
) -> Result<GridlessResult> {
    tl_sfw_with(blocks, grid, k, bounds, &SfwOptions::default())
}

/// Sliding Frank-Wolfe over trajectories.
///
/// Each iteration adds the residual's best grid trajectory, polishes it
/// locally, re-solves all amplitudes, then jointly refines every trajectory.
pub fn tl_sfw_with(
    blocks: &[ObservationBlock],
    grid: &ParamGrid,
    k: usize,
    bounds: &Bounds,
    opts: &SfwOptions,
) -> Result<GridlessResult> {
    check_blocks(blocks)?;
    let mut residual = blocks.to_vec();
    let mut trace = RunTrace {
        residual_norms: vec![frobenius(blocks)],
        ..Default::default()
    };
    let mut sources: Vec<TrajectoryParams> = Vec::with_capacity(k);
    let mut amplitudes = vec![Vec::new(); blocks.len()];
    for _ in 0..k {
        let start = Instant::now();
        let before = 0.5 * trace.residual_norms.last().unwrap().powi(2);

        let spectrum = Spectrum {
            grid: grid.clone(),
            values: kernel::scan(&residual, grid),
        };
        let seeds = if opts.multistart <= 1 {
            vec![grid.grid_point(spectrum.argmax().expect("grid is non-empty"))?]
        } else {
            find_peaks(&spectrum, opts.multistart).params()
        };
        let mut best: Option<(TrajectoryParams, f64, usize)> = None;
        for seed in &seeds {
            let (p, report) = maximize_local_with(seed, &residual, bounds, &opts.local)?;
            trace.newton_fallbacks += report.gradient_fallbacks;
            if best.as_ref().is_none_or(|b| report.final_objective > b.1) {
                best = Some((p, report.final_objective, report.iterations));
            }
        }
        let (new, _, local_iters) = best.expect("at least one seed");
        trace.local_iterations.push(local_iters);
        sources.push(new);

        let inserted = amplitudes_ls(&sources, blocks)?;
        let fit = joint_refine_with(&sources, blocks, bounds, &opts.local)?;
        trace.rank_deficient |= inserted.rank_deficient || fit.solution.rank_deficient;
        trace.refine_iterations.push(fit.report.iterations);
        trace.newton_fallbacks += fit.report.gradient_fallbacks;
        trace.hit_iteration_cap |= !fit.report.converged;
        trace.fits.push(PhaseFits {
            before,
            after_insert: inserted.fit,
            after_refine: fit.solution.fit,
        });

        sources = fit.trajectories;
        amplitudes = fit.solution.amplitudes;
        residual = fit.solution.residuals;
        trace.residual_norms.push(frobenius(&residual));
        trace.iteration_ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(GridlessResult {
        estimates: estimates_from(&sources, &amplitudes),
        residual,
        trace,
    })
}
