use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{frobenius, GridlessResult, PhaseFits, RunTrace};
use crate::dictionary::ParamGrid;
use crate::error::Result;
use crate::estimate::estimates_from;
use crate::kernel;
use crate::observation::{check_blocks, ObservationBlock};
use crate::optim::{amplitudes_ls, newton_step, Bounds};
use crate::trajectory::TrajectoryParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NompOptions {
    /// Cyclic refinement repeats while `||R||_F^2` moves by more than this.
    pub cyclic_tolerance: f64,
    pub max_cycles: usize,
}

impl Default for NompOptions {
    fn default() -> Self {
        Self {
            cyclic_tolerance: 1e-6,
            max_cycles: 50,
        }
    }
}

pub fn tl_nomp(
    blocks: &[ObservationBlock],
    grid: &ParamGrid,
    k: usize,
    bounds: &Bounds,
) -> Result<GridlessResult> {
    tl_nomp_with(blocks, grid, k, bounds, &NompOptions::default())
}

/// Adds (`sign > 0`) or removes one source's contribution in every band.
fn apply(residual: &mut [ObservationBlock], params: &TrajectoryParams, x: &[Vec<Complex64>], sign: f64) {
    for (block, xf) in residual.iter_mut().zip(x) {
        let m = block.manifold();
        let len = block.snapshots();
        let contribution: DMatrix<Complex64> =
            kernel::reconstruct(&m, std::slice::from_ref(params), std::slice::from_ref(xf), len);
        if sign > 0.0 {
            block.data += contribution;
        } else {
            block.data -= contribution;
        }
    }
}

fn matched(residual: &[ObservationBlock], params: &TrajectoryParams) -> Vec<Vec<Complex64>> {
    residual.iter().map(|b| kernel::matched_amplitudes(b, params)).collect()
}

fn norm_sq(blocks: &[ObservationBlock]) -> f64 {
    blocks.iter().map(|b| b.data.norm_squared()).sum()
}

/// Newtonized orthogonal matching pursuit over trajectories.
///
/// Each iteration takes the residual's best grid trajectory, improves it with
/// a single Newton step, cyclically re-refines every detected source against
/// the residual with the others removed, then re-solves all amplitudes by
/// least squares.
pub fn tl_nomp_with(
    blocks: &[ObservationBlock],
    grid: &ParamGrid,
    k: usize,
    bounds: &Bounds,
    opts: &NompOptions,
) -> Result<GridlessResult> {
    check_blocks(blocks)?;
    let mut residual = blocks.to_vec();
    let mut trace = RunTrace {
        residual_norms: vec![frobenius(blocks)],
        ..Default::default()
    };
    let mut sources: Vec<TrajectoryParams> = Vec::with_capacity(k);
    // gains[i][f][l]
    let mut gains: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(k);
    let mut amplitudes = vec![Vec::new(); blocks.len()];
    for _ in 0..k {
        let start = Instant::now();
        let before = 0.5 * norm_sq(&residual);

        let values = kernel::scan(&residual, grid);
        let coarse = grid.grid_point(kernel::argmax(&values).expect("grid is non-empty"))?;
        let step = newton_step(&coarse, &residual, bounds)?;
        trace.newton_fallbacks += step.fallback as usize;
        trace.local_iterations.push(1);
        let x = matched(&residual, &step.point);
        apply(&mut residual, &step.point, &x, -1.0);
        sources.push(step.point);
        gains.push(x);
        let after_insert = 0.5 * norm_sq(&residual);

        let mut energy = norm_sq(&residual);
        let mut rounds = 0;
        let mut settled = false;
        while rounds < opts.max_cycles {
            rounds += 1;
            for i in 0..sources.len() {
                apply(&mut residual, &sources[i], &gains[i], 1.0);
                let step = newton_step(&sources[i], &residual, bounds)?;
                trace.newton_fallbacks += step.fallback as usize;
                sources[i] = step.point;
                gains[i] = matched(&residual, &sources[i]);
                apply(&mut residual, &sources[i], &gains[i], -1.0);
            }
            let updated = norm_sq(&residual);
            let change = (updated - energy).abs();
            energy = updated;
            if change <= opts.cyclic_tolerance {
                settled = true;
                break;
            }
        }
        trace.hit_iteration_cap |= !settled;
        trace.refine_iterations.push(rounds);

        let ls = amplitudes_ls(&sources, blocks)?;
        trace.rank_deficient |= ls.rank_deficient;
        for (i, g) in gains.iter_mut().enumerate() {
            *g = ls.amplitudes.iter().map(|band| band[i].clone()).collect();
        }
        trace.fits.push(PhaseFits {
            before,
            after_insert,
            after_refine: ls.fit,
        });
        amplitudes = ls.amplitudes;
        residual = ls.residuals;
        trace.residual_norms.push(frobenius(&residual));
        trace.iteration_ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(GridlessResult {
        estimates: estimates_from(&sources, &amplitudes),
        residual,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ArrayConfig, Frequency};
    use crate::observation::{synthesize_block, synthesize_with, SynthesisOptions};
    use crate::trajectory::TrajectoryModel;

    fn grid() -> ParamGrid {
        ParamGrid::uniform((-85.0, 2.0, 85.0), (-5.0, 0.5, 5.0), TrajectoryModel::linear()).unwrap()
    }

    #[test]
    fn off_grid_noiseless_single_source() {
        let truth = TrajectoryParams::linear(33.7, -2.2);
        let options = SynthesisOptions {
            noiseless: true,
            ..Default::default()
        };
        let array = ArrayConfig::half_wavelength(10).unwrap();
        let (blocks, _) =
            synthesize_with(&[truth.clone()], &array, 30, 0.0, &[Frequency::Narrowband], 2, options).unwrap();
        let g = grid();
        let out = tl_nomp(&blocks, &g, 1, &g.default_bounds()).unwrap();
        let p = &out.estimates[0].params;
        assert!((p.phi - truth.phi).abs() < 1e-4, "{p:?}");
        assert!((p.coeffs[0] - truth.coeffs[0]).abs() < 1e-4, "{p:?}");
    }

    #[test]
    fn residual_is_least_squares_residual() {
        let truth = [TrajectoryParams::linear(-11.0, 3.5), TrajectoryParams::linear(20.3, 1.4)];
        let array = ArrayConfig::half_wavelength(10).unwrap();
        let (blocks, _) = synthesize_block(&truth, &array, 30, 5.0, &[Frequency::Narrowband], 12).unwrap();
        let g = grid();
        let out = tl_nomp(&blocks, &g, 2, &g.default_bounds()).unwrap();
        let params: Vec<_> = out.estimates.iter().map(|e| e.params.clone()).collect();
        let ls = amplitudes_ls(&params, &blocks).unwrap();
        assert_eq!(out.residual, ls.residuals);
        assert!(out.trace.residual_norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn wideband_runs_with_per_band_amplitudes() {
        let truth = [TrajectoryParams::linear(-20.4, 2.1)];
        let array = ArrayConfig::for_max_frequency(10, 2200.0, 343.0).unwrap();
        let freqs = [Frequency::Hz(1400.0), Frequency::Hz(1800.0), Frequency::Hz(2200.0)];
        let (blocks, _) = synthesize_block(&truth, &array, 30, 10.0, &freqs, 8).unwrap();
        let g = grid();
        let out = tl_nomp(&blocks, &g, 1, &g.default_bounds()).unwrap();
        assert_eq!(out.estimates[0].amplitudes.len(), 3);
        assert!((out.estimates[0].params.phi - truth[0].phi).abs() < 0.5);
    }
}
