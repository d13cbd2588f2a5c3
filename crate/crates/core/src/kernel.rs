//! Hot loops shared by the grid scans and the continuous optimizers.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::{correlate_sin, Manifold};
use crate::dictionary::ParamGrid;
use crate::observation::ObservationBlock;
use crate::trajectory::{TrajectoryModel, TrajectoryParams};

/// Trajectory basis evaluated at every snapshot of a block, row-major `len x dim`.
#[derive(Debug, Clone)]
pub(crate) struct BasisTable {
    pub dim: usize,
    pub len: usize,
    rows: Vec<f64>,
}

impl BasisTable {
    pub fn new(model: TrajectoryModel, len: usize) -> Self {
        let dim = model.dim();
        let mut rows = vec![0.0; dim * len];
        for l in 0..len {
            model.basis_into(l, len, &mut rows[l * dim..(l + 1) * dim]);
        }
        Self { dim, len, rows }
    }

    #[inline]
    pub fn row(&self, l: usize) -> &[f64] {
        &self.rows[l * self.dim..(l + 1) * self.dim]
    }

    /// DOA at snapshot `l`; same summation order as [`TrajectoryParams::doa`].
    #[inline]
    pub fn theta(&self, omega: &[f64], l: usize) -> f64 {
        let row = self.row(l);
        let mut theta = omega[0];
        for i in 1..self.dim {
            theta += omega[i] * row[i];
        }
        theta
    }
}

/// `(1/L) sum_f sum_l |a_lf(omega)^H r_lf|^2`
pub(crate) fn power(blocks: &[ObservationBlock], kappas: &[f64], table: &BasisTable, omega: &[f64]) -> f64 {
    let mut acc = 0.0;
    for l in 0..table.len {
        let s = table.theta(omega, l).to_radians().sin();
        for (b, &k) in blocks.iter().zip(kappas) {
            acc += correlate_sin(k, s, b.snapshot(l)).norm_sqr();
        }
    }
    acc / table.len as f64
}

pub(crate) fn kappas(blocks: &[ObservationBlock]) -> Vec<f64> {
    blocks.iter().map(|b| b.manifold().kappa).collect()
}

/// Power at every grid point.
pub(crate) fn scan(blocks: &[ObservationBlock], grid: &ParamGrid) -> Vec<f64> {
    let len = blocks[0].snapshots();
    let table = BasisTable::new(grid.model(), len);
    let kappas = kappas(blocks);
    let dim = grid.dim();
    (0..grid.size())
        .into_par_iter()
        .with_min_len(64)
        .map_init(
            || vec![0.0; dim],
            |omega, m| {
                grid.point_into(m, omega);
                power(blocks, &kappas, &table, omega)
            },
        )
        .collect()
}

/// First index of the maximum; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some(b) if !(v > values[b]) => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Per-snapshot single-atom amplitude `a_l^H r_l / N` of a trajectory in one band.
pub(crate) fn matched_amplitudes(block: &ObservationBlock, params: &TrajectoryParams) -> Vec<Complex64> {
    let m = block.manifold();
    let len = block.snapshots();
    let n = block.n_sensors() as f64;
    (0..len)
        .map(|l| m.correlate(params.doa(l, len), block.snapshot(l)) / n)
        .collect()
}

/// `sum_k A_k X_k` for one band.
pub(crate) fn reconstruct(
    manifold: &Manifold,
    sources: &[TrajectoryParams],
    amplitudes: &[Vec<Complex64>],
    len: usize,
) -> nalgebra::DMatrix<Complex64> {
    let mut out = nalgebra::DMatrix::zeros(manifold.n_sensors, len);
    for (p, x) in sources.iter().zip(amplitudes) {
        for l in 0..len {
            let a: DVector<Complex64> = manifold.steering(p.doa(l, len));
            out.column_mut(l).axpy(x[l], &a, Complex64::new(1.0, 0.0));
        }
    }
    out
}
