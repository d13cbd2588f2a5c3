//! Joint trajectory refinement by variable projection.
//!
//! Amplitudes enter linearly, so for fixed trajectories they are replaced by
//! their per-snapshot least-squares optimum and only the `k * dim` trajectory
//! parameters are searched. The search direction is Gauss-Newton on the
//! projected residual `P_perp(omega) y`, using the Kaufman Jacobian
//! `-P_perp (dA/domega) x`, whose normal-equation gradient is exact.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::ls::{solve_all, LsSolution, SnapshotSolver};
use super::{Bounds, LocalOptions, OptimReport};
use crate::error::{Error, Result};
use crate::kernel::BasisTable;
use crate::observation::{check_blocks, ObservationBlock};
use crate::trajectory::TrajectoryParams;

#[derive(Debug, Clone, PartialEq)]
pub struct JointFit {
    pub trajectories: Vec<TrajectoryParams>,
    /// Least-squares amplitudes at the returned trajectories.
    pub solution: LsSolution,
    pub report: OptimReport,
}

struct Problem<'a> {
    blocks: &'a [ObservationBlock],
    table: BasisTable,
    k: usize,
}

impl Problem<'_> {
    fn split(&self, x: &[f64]) -> Vec<Vec<f64>> {
        x.chunks(self.table.dim).map(<[f64]>::to_vec).collect()
    }

    fn fit(&self, x: &[f64]) -> (LsSolution, Vec<Vec<SnapshotSolver>>) {
        solve_all(&self.split(x), &self.table, self.blocks, true)
    }

    /// Gauss-Newton normal matrix and gradient of the fit at `x`.
    fn normal_equations(
        &self,
        x: &[f64],
        sol: &LsSolution,
        solvers: &[Vec<SnapshotSolver>],
    ) -> (DMatrix<f64>, DVector<f64>) {
        let dim = self.table.dim;
        let p = self.k * dim;
        let len = self.table.len;
        let omegas = self.split(x);
        let mut jtj = DMatrix::zeros(p, p);
        let mut grad = DVector::zeros(p);
        for (f, block) in self.blocks.iter().enumerate() {
            let manifold = block.manifold();
            for l in 0..len {
                let solver = &solvers[f][l];
                let r = DVector::from_column_slice(sol.residuals[f].snapshot(l));
                let row = self.table.row(l);
                let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(p);
                for (k, omega) in omegas.iter().enumerate() {
                    let da = manifold.steering_derivative(self.table.theta(omega, l)) * sol.amplitudes[f][k][l];
                    let projected = solver.project_out(&da);
                    for &b in row.iter().take(dim) {
                        cols.push(&projected * Complex64::new(-b, 0.0));
                    }
                }
                for i in 0..p {
                    grad[i] += cols[i].dotc(&r).re;
                    for j in i..p {
                        let v = cols[i].dotc(&cols[j]).re;
                        jtj[(i, j)] += v;
                        if i != j {
                            jtj[(j, i)] += v;
                        }
                    }
                }
            }
        }
        (jtj, grad)
    }
}

/// Minimizes `1/2 sum_f ||A_f(W) X_f - Y_f||_F^2` jointly over all trajectories,
/// with amplitudes eliminated in closed form. The returned fit never exceeds
/// the fit of the input configuration.
pub fn joint_refine(trajectories: &[TrajectoryParams], blocks: &[ObservationBlock], bounds: &Bounds) -> Result<JointFit> {
    joint_refine_with(trajectories, blocks, bounds, &LocalOptions::default())
}

pub fn joint_refine_with(
    trajectories: &[TrajectoryParams],
    blocks: &[ObservationBlock],
    bounds: &Bounds,
    opts: &LocalOptions,
) -> Result<JointFit> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InvalidArgument("need at least one trajectory".into()))?;
    let model = first.model;
    if trajectories.iter().any(|t| t.model != model) {
        return Err(Error::InvalidArgument("trajectories must share one model".into()));
    }
    if bounds.dim() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters but {} bound pairs",
            model.dim(),
            bounds.dim()
        )));
    }
    let (_, len) = check_blocks(blocks)?;
    let problem = Problem {
        blocks,
        table: BasisTable::new(model, len),
        k: trajectories.len(),
    };
    let box_all = bounds.repeat(problem.k);

    let mut x: Vec<f64> = trajectories.iter().flat_map(|t| t.to_vec()).collect();
    let (mut sol, mut solvers) = problem.fit(&x);
    let mut report = OptimReport {
        objectives: vec![sol.fit],
        ..Default::default()
    };

    // Refine from the caller's point as given; projecting first could raise the fit.
    for _ in 0..opts.max_iterations {
        let (jtj, grad) = problem.normal_equations(&x, &sol, &solvers);
        if grad.iter().all(|g| *g == 0.0) {
            report.converged = true;
            break;
        }
        let p = jtj.nrows();
        let damping = 1e-12 * (jtj.trace() / p as f64).max(f64::MIN_POSITIVE);
        let mut reg = jtj.clone();
        for i in 0..p {
            reg[(i, i)] += damping;
        }
        let gn = reg.cholesky().map(|c| -c.solve(&grad));
        let descent = |d: &DVector<f64>| grad.dot(d) < 0.0;
        let mut dirs: Vec<DVector<f64>> = Vec::with_capacity(2);
        if let Some(d) = gn.filter(|d| d.iter().all(|v| v.is_finite()) && descent(d)) {
            let n = d.norm();
            dirs.push(if n > opts.max_step { d * (opts.max_step / n) } else { d });
        }
        let gnorm = grad.norm();
        dirs.push(-&grad * (opts.gradient_step / gnorm));

        report.iterations += 1;
        let mut accepted = None;
        for (attempt, dir) in dirs.iter().enumerate() {
            if attempt > 0 {
                report.gradient_fallbacks += 1;
            }
            let mut t = 1.0;
            for _ in 0..60 {
                let mut cand: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
                box_all.project(&mut cand);
                let decrease: f64 = grad.iter().zip(cand.iter().zip(&x)).map(|(g, (c, a))| g * (c - a)).sum();
                let (csol, csolvers) = problem.fit(&cand);
                if csol.fit <= sol.fit + opts.armijo * decrease && csol.fit <= sol.fit {
                    accepted = Some((cand, csol, csolvers));
                    break;
                }
                t *= opts.backtrack;
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((cand, csol, csolvers)) = accepted else {
            report.step_norms.push(0.0);
            report.objectives.push(sol.fit);
            report.converged = true;
            break;
        };
        let step = cand.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        x = cand;
        sol = csol;
        solvers = csolvers;
        report.step_norms.push(step);
        report.objectives.push(sol.fit);
        if step < opts.step_tolerance {
            report.converged = true;
            break;
        }
    }
    report.final_objective = sol.fit;
    let trajectories = problem
        .split(&x)
        .iter()
        .map(|omega| TrajectoryParams::from_slice(model, omega))
        .collect::<Result<Vec<_>>>()?;
    Ok(JointFit {
        trajectories,
        solution: sol,
        report,
    })
}
