//! Multi-snapshot sparse Bayesian learning over trajectory atoms.
//!
//! Atom `m` contributes only `a_l^m` at snapshot `l`, so the data covariance
//! is block diagonal with per-snapshot blocks
//! `Sigma_l = sigma^2 I + sum_m gamma_m a_l^m (a_l^m)^H`, and the fixed-point
//! update is
//! `gamma_m <- gamma_m * sum_l |a^H Sigma_l^-1 y_l|^2 / sum_l a^H Sigma_l^-1 a`.
//!
//! On a ULA every `a a^H` is Hermitian Toeplitz, so `Sigma_l` is built from
//! its first column and each quadratic form `a^H S a` collapses to a
//! polynomial in the atom's phasor over the diagonal sums of `S`. One
//! iteration costs `O(M L N)` instead of `O(M L N^2)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use super::{find_peaks, PeakSet, Spectrum};
use crate::dictionary::ParamGrid;
use crate::error::{Error, Result};
use crate::kernel::BasisTable;
use crate::observation::{check_blocks, ObservationBlock};

/// Relative level below which a hyperparameter counts as collapsed.
const PRUNE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SblOptions {
    pub max_iterations: usize,
    /// Stop once `max_m |gamma_new - gamma_old| / max_m gamma_old` drops below this.
    pub tolerance: f64,
    /// Extra peaks beyond `K`.
    pub peak_excess: usize,
}

impl Default for SblOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-3,
            peak_excess: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SblResult {
    /// Final `gamma`.
    pub spectrum: Spectrum,
    pub peaks: PeakSet,
    pub iterations: usize,
    pub converged: bool,
}

pub fn tl_sbl(blocks: &[ObservationBlock], grid: &ParamGrid, k: usize, noise_variance: f64) -> Result<SblResult> {
    tl_sbl_with(blocks, grid, k, noise_variance, &SblOptions::default())
}

pub fn tl_sbl_with(
    blocks: &[ObservationBlock],
    grid: &ParamGrid,
    k: usize,
    noise_variance: f64,
    opts: &SblOptions,
) -> Result<SblResult> {
    let (n, len) = check_blocks(blocks)?;
    if blocks.len() != 1 {
        return Err(Error::InvalidArgument("TL-SBL is narrowband only".into()));
    }
    if !(noise_variance > 0.0 && noise_variance.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise variance must be positive, got {noise_variance}"
        )));
    }
    let block = &blocks[0];
    let kappa = block.manifold().kappa;
    let m_size = grid.size();

    // phasors[m * len + l] = exp(j kappa sin theta_l^m), so a_l^m[n] = z^n.
    let table = BasisTable::new(grid.model(), len);
    let dim = grid.dim();
    let phasors: Vec<Complex64> = (0..m_size)
        .into_par_iter()
        .with_min_len(64)
        .flat_map_iter(|m| {
            let mut omega = vec![0.0; dim];
            grid.point_into(m, &mut omega);
            let table = &table;
            (0..len).map(move |l| Complex64::from_polar(1.0, kappa * table.theta(&omega, l).to_radians().sin()))
        })
        .collect();

    let mut gamma = vec![1.0; m_size];
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        iterations += 1;
        let gmax = gamma.iter().cloned().fold(0.0, f64::max);
        // Collapsed atoms are frozen: they neither enter Sigma nor get updated.
        let floor = PRUNE * gmax;
        let mut num = vec![0.0; m_size];
        let mut den = vec![0.0; m_size];
        for l in 0..len {
            // First column of sum_m gamma_m a a^H.
            let mut t = vec![Complex64::default(); n];
            for m in 0..m_size {
                let g = gamma[m];
                if g <= floor {
                    continue;
                }
                let z = phasors[m * len + l];
                let mut p = Complex64::new(g, 0.0);
                for td in t.iter_mut() {
                    *td += p;
                    p *= z;
                }
            }
            let sigma = DMatrix::from_fn(n, n, |i, j| {
                let base = if i >= j { t[i - j] } else { t[j - i].conj() };
                if i == j {
                    Complex64::new(base.re + noise_variance, 0.0)
                } else {
                    base
                }
            });
            let chol = sigma.cholesky().ok_or_else(|| {
                Error::InvalidArgument("SBL covariance lost positive definiteness".into())
            })?;
            let inv = chol.inverse();
            let w: DVector<Complex64> = chol.solve(&DVector::from_column_slice(block.snapshot(l)));
            // diag_sums[d] = sum_{j - i = d} S_ij, d >= 0
            let diag_sums: Vec<Complex64> = (0..n).map(|d| (0..n - d).map(|i| inv[(i, i + d)]).sum()).collect();
            for m in 0..m_size {
                if gamma[m] <= floor {
                    continue;
                }
                let z = phasors[m * len + l];
                // a^H w = sum_n conj(z)^n w_n
                let zc = z.conj();
                let mut aw = Complex64::default();
                for &wn in w.iter().rev() {
                    aw = aw * zc + wn;
                }
                // a^H S a = c_0 + 2 Re sum_{d>=1} c_d z^d
                let mut q = Complex64::default();
                for &c in diag_sums[1..].iter().rev() {
                    q = (q + c) * z;
                }
                num[m] += aw.norm_sqr();
                den[m] += diag_sums[0].re + 2.0 * q.re;
            }
        }
        let mut change: f64 = 0.0;
        for m in 0..m_size {
            if gamma[m] <= floor {
                continue;
            }
            let updated = gamma[m] * num[m] / den[m];
            change = change.max((updated - gamma[m]).abs());
            gamma[m] = updated;
        }
        if change / gmax < opts.tolerance {
            converged = true;
            break;
        }
    }

    let spectrum = Spectrum {
        grid: grid.clone(),
        values: gamma,
    };
    let peaks = find_peaks(&spectrum, k + opts.peak_excess);
    Ok(SblResult {
        spectrum,
        peaks,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ArrayConfig, Frequency};
    use crate::observation::synthesize_block;
    use crate::trajectory::{TrajectoryModel, TrajectoryParams};

    fn grid() -> ParamGrid {
        ParamGrid::uniform((-85.0, 2.0, 85.0), (-5.0, 0.5, 5.0), TrajectoryModel::linear()).unwrap()
    }

    /// Direct O(N^2) evaluation of the same update, for checking the fast path.
    fn reference_update(block: &ObservationBlock, grid: &ParamGrid, gamma: &[f64], noise: f64) -> Vec<f64> {
        let len = block.snapshots();
        let n = block.n_sensors();
        let m = block.manifold();
        let atoms: Vec<Vec<DVector<Complex64>>> = (0..grid.size())
            .map(|i| {
                let p = grid.grid_point(i).unwrap();
                (0..len).map(|l| m.steering(p.doa(l, len))).collect()
            })
            .collect();
        let mut out = Vec::with_capacity(grid.size());
        let mut inv = Vec::new();
        for l in 0..len {
            let mut s = DMatrix::<Complex64>::identity(n, n) * Complex64::new(noise, 0.0);
            for (g, a) in gamma.iter().zip(&atoms) {
                s += &a[l] * a[l].adjoint() * Complex64::new(*g, 0.0);
            }
            inv.push(s.try_inverse().unwrap());
        }
        for (g, a) in gamma.iter().zip(&atoms) {
            let mut num = 0.0;
            let mut den = 0.0;
            for l in 0..len {
                let y = DVector::from_column_slice(block.snapshot(l));
                num += a[l].dotc(&(&inv[l] * y)).norm_sqr();
                den += a[l].dotc(&(&inv[l] * &a[l])).re;
            }
            out.push(g * num / den);
        }
        out
    }

    #[test]
    fn fast_update_matches_direct_evaluation() {
        let small = ParamGrid::uniform((-30.0, 6.0, 30.0), (-2.0, 1.0, 2.0), TrajectoryModel::linear()).unwrap();
        let array = ArrayConfig::half_wavelength(6).unwrap();
        let (blocks, truth) =
            synthesize_block(&[TrajectoryParams::linear(6.0, 1.0)], &array, 8, 10.0, &[Frequency::Narrowband], 4).unwrap();
        let opts = SblOptions {
            max_iterations: 1,
            ..Default::default()
        };
        let fast = tl_sbl_with(&blocks, &small, 1, truth.noise_variance, &opts).unwrap();
        let slow = reference_update(&blocks[0], &small, &vec![1.0; small.size()], truth.noise_variance);
        for (a, b) in fast.spectrum.values.iter().zip(&slow) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-12), "{a} vs {b}");
            assert!(*a > 0.0);
        }
    }

    #[test]
    fn strong_source_wins() {
        let p = TrajectoryParams::linear(31.0, -1.5);
        let array = ArrayConfig::half_wavelength(10).unwrap();
        for seed in 0..10 {
            let (blocks, truth) = synthesize_block(&[p.clone()], &array, 30, 30.0, &[Frequency::Narrowband], seed).unwrap();
            let out = tl_sbl(&blocks, &grid(), 1, truth.noise_variance).unwrap();
            assert!(out.spectrum.values.iter().all(|g| *g >= 0.0));
            assert_eq!(out.spectrum.argmax(), grid().index_of(&p));
            assert_eq!(out.peaks.entries[0].params, p);
            assert_eq!(out.peaks.entries.len(), 3);
        }
    }

    #[test]
    fn wideband_rejected() {
        let array = ArrayConfig::for_max_frequency(10, 1800.0, 343.0).unwrap();
        let (blocks, _) =
            synthesize_block(&[], &array, 10, 0.0, &[Frequency::Hz(1400.0), Frequency::Hz(1800.0)], 1).unwrap();
        assert!(tl_sbl(&blocks, &grid(), 1, 1.0).is_err());
    }
}
