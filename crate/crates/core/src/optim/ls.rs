//! Closed-form per-snapshot amplitude least squares.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::BasisTable;
use crate::observation::{check_blocks, ObservationBlock};
use crate::trajectory::TrajectoryParams;

/// Relative singular-value (or `|R_ii|`) threshold below which a snapshot's
/// steering set is treated as rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Least-squares solver for one snapshot's `N x k` steering matrix.
pub(crate) enum SnapshotSolver {
    Qr {
        q: DMatrix<Complex64>,
        r: DMatrix<Complex64>,
    },
    Pinv {
        /// Orthonormal basis of the numerical range.
        u: DMatrix<Complex64>,
        pinv: DMatrix<Complex64>,
    },
}

impl SnapshotSolver {
    pub fn new(a: DMatrix<Complex64>) -> Self {
        let k = a.ncols();
        let qr = a.clone().qr();
        let r = qr.r();
        let max_diag = (0..k).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        let full_rank = k <= a.nrows() && (0..k).all(|i| r[(i, i)].norm() > RANK_TOL * max_diag);
        if full_rank {
            return SnapshotSolver::Qr { q: qr.q(), r };
        }
        let svd = a.svd(true, true);
        let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let tol = RANK_TOL * smax;
        let u_full = svd.u.expect("requested U");
        let v_t = svd.v_t.expect("requested V^H");
        let keep: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > tol)
            .collect();
        let n = u_full.nrows();
        let mut u = DMatrix::zeros(n, keep.len());
        let mut pinv = DMatrix::zeros(k, n);
        for (j, &i) in keep.iter().enumerate() {
            let ui = u_full.column(i);
            u.set_column(j, &ui);
            let vi = v_t.row(i).adjoint();
            pinv += (vi * ui.adjoint()) / Complex64::new(svd.singular_values[i], 0.0);
        }
        SnapshotSolver::Pinv { u, pinv }
    }

    pub fn is_deficient(&self) -> bool {
        matches!(self, SnapshotSolver::Pinv { .. })
    }

    pub fn solve(&self, y: &DVector<Complex64>) -> DVector<Complex64> {
        match self {
            SnapshotSolver::Qr { q, r } => {
                let qy = q.ad_mul(y);
                r.solve_upper_triangular(&qy).expect("full-rank R")
            }
            SnapshotSolver::Pinv { pinv, .. } => pinv * y,
        }
    }

    /// `v - P v` with `P` the orthogonal projector onto the steering span.
    pub fn project_out(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        let basis = match self {
            SnapshotSolver::Qr { q, .. } => q,
            SnapshotSolver::Pinv { u, .. } => u,
        };
        v - basis * basis.ad_mul(v)
    }
}

/// Output of [`amplitudes_ls`].
#[derive(Debug, Clone, PartialEq)]
pub struct LsSolution {
    /// `amplitudes[f][k][l]`
    pub amplitudes: Vec<Vec<Vec<Complex64>>>,
    /// `Y_f - A_f X_f` per band.
    pub residuals: Vec<ObservationBlock>,
    /// `1/2 sum_f ||Y_f - A_f X_f||_F^2`
    pub fit: f64,
    /// Some snapshot needed the pseudo-inverse fallback.
    pub rank_deficient: bool,
}

/// Exact amplitude least squares for fixed trajectories, per snapshot and band.
pub fn amplitudes_ls(trajectories: &[TrajectoryParams], blocks: &[ObservationBlock]) -> Result<LsSolution> {
    if trajectories.is_empty() {
        return Err(Error::InvalidArgument("need at least one trajectory".into()));
    }
    check_blocks(blocks)?;
    let model = trajectories[0].model;
    if trajectories.iter().any(|t| t.model != model) {
        return Err(Error::InvalidArgument("trajectories must share one model".into()));
    }
    let len = blocks[0].snapshots();
    let table = BasisTable::new(model, len);
    let omegas: Vec<Vec<f64>> = trajectories.iter().map(|t| t.to_vec()).collect();
    Ok(solve_all(&omegas, &table, blocks, false).0)
}

/// Shared by [`amplitudes_ls`] and the variable-projection refinement; with
/// `keep_solvers` the per-snapshot solvers are returned for Jacobian work.
pub(crate) fn solve_all(
    omegas: &[Vec<f64>],
    table: &BasisTable,
    blocks: &[ObservationBlock],
    keep_solvers: bool,
) -> (LsSolution, Vec<Vec<SnapshotSolver>>) {
    let k = omegas.len();
    let len = table.len;
    let mut amplitudes = Vec::with_capacity(blocks.len());
    let mut residuals = Vec::with_capacity(blocks.len());
    let mut solvers = Vec::new();
    let mut fit = 0.0;
    let mut deficient = false;
    for block in blocks {
        let manifold = block.manifold();
        let n = block.n_sensors();
        let mut band = vec![vec![Complex64::default(); len]; k];
        let mut resid = DMatrix::zeros(n, len);
        let mut band_solvers = Vec::new();
        for l in 0..len {
            let y = DVector::from_column_slice(block.snapshot(l));
            let mut a = DMatrix::zeros(n, k);
            for (j, omega) in omegas.iter().enumerate() {
                a.set_column(j, &manifold.steering(table.theta(omega, l)));
            }
            let (x, r) = if k == 1 {
                // single atom: x = a^H y / a^H a
                let col = a.column(0);
                let x = col.dotc(&y) / Complex64::new(col.norm_squared(), 0.0);
                let r = &y - col * x;
                let x = DVector::from_element(1, x);
                if keep_solvers {
                    band_solvers.push(SnapshotSolver::new(a));
                }
                (x, r)
            } else {
                let solver = SnapshotSolver::new(a);
                deficient |= solver.is_deficient();
                let x = solver.solve(&y);
                let r = solver.project_out(&y);
                if keep_solvers {
                    band_solvers.push(solver);
                }
                (x, r)
            };
            for j in 0..k {
                band[j][l] = x[j];
            }
            fit += 0.5 * r.norm_squared();
            resid.set_column(l, &r);
        }
        amplitudes.push(band);
        residuals.push(block.with_data(resid));
        solvers.push(band_solvers);
    }
    (
        LsSolution {
            amplitudes,
            residuals,
            fit,
            rank_deficient: deficient,
        },
        solvers,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ArrayConfig, Frequency};
    use crate::observation::{synthesize_block, synthesize_with, SynthesisOptions};

    fn array() -> ArrayConfig {
        ArrayConfig::half_wavelength(10).unwrap()
    }

    #[test]
    fn single_atom_is_matched_filter() {
        let p = TrajectoryParams::linear(12.0, -2.0);
        let (blocks, _) = synthesize_block(&[p.clone()], &array(), 20, 0.0, &[Frequency::Narrowband], 9).unwrap();
        let sol = amplitudes_ls(&[p.clone()], &blocks).unwrap();
        let m = blocks[0].manifold();
        for l in 0..20 {
            let expected = m.correlate(p.doa(l, 20), blocks[0].snapshot(l)) / 10.0;
            assert!((sol.amplitudes[0][0][l] - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn noiseless_amplitudes_are_exact() {
        let sources = vec![
            TrajectoryParams::linear(-11.0, 3.5),
            TrajectoryParams::linear(20.0, 1.5),
            TrajectoryParams::linear(61.0, -2.25),
        ];
        let options = SynthesisOptions {
            noiseless: true,
            ..Default::default()
        };
        let freqs = [Frequency::Hz(1400.0), Frequency::Hz(1800.0)];
        let wide = ArrayConfig::for_max_frequency(10, 1800.0, 343.0).unwrap();
        let (blocks, truth) = synthesize_with(&sources, &wide, 30, 0.0, &freqs, 4, options).unwrap();
        let sol = amplitudes_ls(&sources, &blocks).unwrap();
        assert!(!sol.rank_deficient);
        assert!(sol.fit < 1e-20);
        for f in 0..2 {
            for k in 0..3 {
                for l in 0..30 {
                    assert!((sol.amplitudes[f][k][l] - truth.amplitudes[f][k][l]).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn residual_is_orthogonal_to_steering_set() {
        let sources = vec![TrajectoryParams::linear(-30.0, 2.0), TrajectoryParams::linear(40.0, -1.0)];
        let (blocks, _) = synthesize_block(&sources, &array(), 25, 0.0, &[Frequency::Narrowband], 17).unwrap();
        let sol = amplitudes_ls(&sources, &blocks).unwrap();
        let m = blocks[0].manifold();
        for l in 0..25 {
            let r = sol.residuals[0].snapshot(l);
            let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for s in &sources {
                let ip = m.correlate(s.doa(l, 25), r).norm();
                assert!(ip <= 1e-9 * rn * (10f64).sqrt(), "{ip} vs {rn}");
            }
        }
    }

    #[test]
    fn crossing_trajectories_use_pseudo_inverse() {
        // Both trajectories pass through 0 deg at the middle snapshot (l = 10 of 21).
        let a = TrajectoryParams::linear(-2.0, 4.0);
        let b = TrajectoryParams::linear(3.0, -6.0);
        let (blocks, _) = synthesize_block(&[a.clone(), b.clone()], &array(), 21, 10.0, &[Frequency::Narrowband], 2).unwrap();
        assert!((a.doa(10, 21) - b.doa(10, 21)).abs() < 1e-12);
        let sol = amplitudes_ls(&[a, b], &blocks).unwrap();
        assert!(sol.rank_deficient);
        assert!(sol.amplitudes.iter().flatten().flatten().all(|z| z.re.is_finite() && z.im.is_finite()));
        // minimum-norm: the coincident pair splits the matched amplitude evenly
        let x = (sol.amplitudes[0][0][10], sol.amplitudes[0][1][10]);
        assert!((x.0 - x.1).norm() < 1e-9);
    }

    #[test]
    fn rejects_empty_set() {
        let (blocks, _) = synthesize_block(&[], &array(), 5, 0.0, &[Frequency::Narrowband], 2).unwrap();
        assert!(amplitudes_ls(&[], &blocks).is_err());
    }
}
