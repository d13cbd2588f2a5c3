//! Continuous-parameter kernels for the gridless estimators.
//!
//! The single-source objective is the matched-filter power
//! `J(omega) = (1/L) sum_f sum_l |a_lf(omega)^H r_lf|^2` against a residual.
//! Because the DOA is linear in the trajectory parameters, its gradient and
//! Hessian reduce to per-snapshot angle derivatives weighted by the basis.

mod ls;
mod varpro;

pub use ls::{amplitudes_ls, LsSolution, RANK_TOL};
pub use varpro::{joint_refine, joint_refine_with, JointFit};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{self, BasisTable};
use crate::observation::{check_blocks, ObservationBlock};
use crate::trajectory::{TrajectoryModel, TrajectoryParams};

/// Box constraints per parameter, degrees. Index 0 is `phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pairs: Vec<(f64, f64)>,
}

impl Bounds {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("bounds need at least the phi pair".into()));
        }
        for &(lo, hi) in &pairs {
            if !(lo < hi) {
                return Err(Error::InvalidArgument(format!("empty bound interval [{lo}, {hi}]")));
            }
        }
        let (lo, hi) = pairs[0];
        if !(lo > -90.0 && hi < 90.0) {
            return Err(Error::InvalidArgument(format!(
                "phi bounds [{lo}, {hi}] must lie inside (-90, 90)"
            )));
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    pub fn dim(&self) -> usize {
        self.pairs.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.pairs).all(|(v, (lo, hi))| v >= lo && v <= hi)
    }

    pub fn project(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.pairs) {
            *v = v.clamp(lo, hi);
        }
    }

    /// The same box for `k` stacked parameter vectors.
    pub(crate) fn repeat(&self, k: usize) -> Bounds {
        Bounds {
            pairs: self.pairs.iter().cloned().cycle().take(k * self.dim()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OptimReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub step_norms: Vec<f64>,
    /// Objective before the first iteration and after each one.
    pub objectives: Vec<f64>,
    /// Iterations that fell back from a Newton-type to a gradient direction.
    pub gradient_fallbacks: usize,
}

/// A twice-differentiable objective to be maximized.
pub trait SmoothObjective {
    fn value(&self, x: &[f64]) -> f64;
    fn grad_hess(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOptions {
    pub max_iterations: usize,
    /// Stop once the accepted parameter step is shorter than this.
    pub step_tolerance: f64,
    pub armijo: f64,
    pub backtrack: f64,
    /// Newton steps longer than this (degrees) are shortened.
    pub max_step: f64,
    /// Initial length (degrees) of a gradient-direction step.
    pub gradient_step: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_tolerance: 1e-10,
            armijo: 1e-4,
            backtrack: 0.5,
            max_step: 5.0,
            gradient_step: 1.0,
        }
    }
}

/// Matched-filter power of one trajectory against residual blocks.
pub(crate) struct PowerObjective<'a> {
    blocks: &'a [ObservationBlock],
    kappas: Vec<f64>,
    table: BasisTable,
}

impl<'a> PowerObjective<'a> {
    pub fn new(model: TrajectoryModel, blocks: &'a [ObservationBlock]) -> Result<Self> {
        let (_, len) = check_blocks(blocks)?;
        Ok(Self {
            blocks,
            kappas: kernel::kappas(blocks),
            table: BasisTable::new(model, len),
        })
    }
}

impl SmoothObjective for PowerObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        kernel::power(self.blocks, &self.kappas, &self.table, x)
    }

    fn grad_hess(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let dim = self.table.dim;
        let len = self.table.len;
        let mut g = DVector::zeros(dim);
        let mut h = DMatrix::zeros(dim, dim);
        for l in 0..len {
            let theta = self.table.theta(x, l);
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for b in self.blocks {
                let (z, dz, d2z) = b.manifold().correlate_derivatives(theta, b.snapshot(l));
                // g(theta) = |z|^2
                d1 += 2.0 * (z.conj() * dz).re;
                d2 += 2.0 * (dz.norm_sqr() + (z.conj() * d2z).re);
            }
            let row = self.table.row(l);
            for i in 0..dim {
                g[i] += d1 * row[i];
                for j in 0..dim {
                    h[(i, j)] += d2 * row[i] * row[j];
                }
            }
        }
        let inv = 1.0 / len as f64;
        (g * inv, h * inv)
    }
}

fn check_dim(omega: &TrajectoryParams, bounds: &Bounds) -> Result<()> {
    if omega.dim() != bounds.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} parameters but {} bound pairs",
            omega.dim(),
            bounds.dim()
        )));
    }
    Ok(())
}

/// `(1/L) sum_f sum_l |a_lf(omega)^H r_lf|^2`
pub fn objective(omega: &TrajectoryParams, residuals: &[ObservationBlock]) -> Result<f64> {
    Ok(PowerObjective::new(omega.model, residuals)?.value(&omega.to_vec()))
}

/// Analytic gradient and Hessian of [`objective`] over the trajectory parameters.
pub fn objective_grad_hess(
    omega: &TrajectoryParams,
    residuals: &[ObservationBlock],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    Ok(PowerObjective::new(omega.model, residuals)?.grad_hess(&omega.to_vec()))
}

/// Ascent direction: Newton when `-H` is positive definite, else `None`.
fn newton_direction(g: &DVector<f64>, h: &DMatrix<f64>) -> Option<DVector<f64>> {
    let neg = -h;
    let chol = neg.cholesky()?;
    let d = chol.solve(g);
    d.iter().all(|v| v.is_finite()).then_some(d)
}

fn dot_step(g: &DVector<f64>, from: &[f64], to: &[f64]) -> f64 {
    g.iter().zip(from.iter().zip(to)).map(|(g, (a, b))| g * (b - a)).sum()
}

/// Armijo backtracking along `dir` with projection; `None` if no step is accepted.
fn backtrack<O: SmoothObjective>(
    obj: &O,
    x: &[f64],
    fx: f64,
    g: &DVector<f64>,
    dir: &DVector<f64>,
    bounds: &Bounds,
    opts: &LocalOptions,
) -> Option<(Vec<f64>, f64)> {
    let mut t = 1.0;
    for _ in 0..60 {
        let mut cand: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
        bounds.project(&mut cand);
        let fc = obj.value(&cand);
        if fc >= fx + opts.armijo * dot_step(g, x, &cand) && fc >= fx {
            return Some((cand, fc));
        }
        t *= opts.backtrack;
    }
    None
}

fn gradient_direction(g: &DVector<f64>, opts: &LocalOptions) -> DVector<f64> {
    let n = g.norm();
    if n > 0.0 {
        g * (opts.gradient_step / n)
    } else {
        g.clone()
    }
}

fn cap(mut d: DVector<f64>, max: f64) -> DVector<f64> {
    let n = d.norm();
    if n > max {
        d *= max / n;
    }
    d
}

/// Box-constrained ascent of a smooth objective.
pub fn maximize<O: SmoothObjective>(obj: &O, x0: &[f64], bounds: &Bounds, opts: &LocalOptions) -> (Vec<f64>, OptimReport) {
    let mut x = x0.to_vec();
    bounds.project(&mut x);
    let mut fx = obj.value(&x);
    let mut report = OptimReport {
        objectives: vec![fx],
        ..Default::default()
    };
    for _ in 0..opts.max_iterations {
        let (g, h) = obj.grad_hess(&x);
        if g.iter().all(|v| *v == 0.0) {
            report.converged = true;
            break;
        }
        let newton = newton_direction(&g, &h).map(|d| cap(d, opts.max_step));
        let mut accepted = newton
            .as_ref()
            .and_then(|d| backtrack(obj, &x, fx, &g, d, bounds, opts));
        if accepted.is_none() {
            report.gradient_fallbacks += 1;
            accepted = backtrack(obj, &x, fx, &g, &gradient_direction(&g, opts), bounds, opts);
        }
        report.iterations += 1;
        let Some((next, fnext)) = accepted else {
            // No ascent at any step length: numerically stationary.
            report.step_norms.push(0.0);
            report.objectives.push(fx);
            report.converged = true;
            break;
        };
        let step = next.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        x = next;
        fx = fnext;
        report.step_norms.push(step);
        report.objectives.push(fx);
        if step < opts.step_tolerance {
            report.converged = true;
            break;
        }
    }
    report.final_objective = fx;
    (x, report)
}

/// Local maximization of [`objective`] from `omega0` inside `bounds`.
pub fn maximize_local(
    omega0: &TrajectoryParams,
    residuals: &[ObservationBlock],
    bounds: &Bounds,
) -> Result<(TrajectoryParams, OptimReport)> {
    maximize_local_with(omega0, residuals, bounds, &LocalOptions::default())
}

pub fn maximize_local_with(
    omega0: &TrajectoryParams,
    residuals: &[ObservationBlock],
    bounds: &Bounds,
    opts: &LocalOptions,
) -> Result<(TrajectoryParams, OptimReport)> {
    check_dim(omega0, bounds)?;
    let obj = PowerObjective::new(omega0.model, residuals)?;
    let (x, report) = maximize(&obj, &omega0.to_vec(), bounds, opts);
    Ok((TrajectoryParams::from_slice(omega0.model, &x)?, report))
}

/// Result of one safeguarded Newton step.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonStep<T> {
    pub point: T,
    /// The Newton candidate was unusable and a gradient step was taken instead.
    pub fallback: bool,
}

/// One safeguarded Newton ascent step on a generic objective.
pub fn newton_step_with<O: SmoothObjective>(
    obj: &O,
    x: &[f64],
    bounds: &Bounds,
    opts: &LocalOptions,
) -> NewtonStep<Vec<f64>> {
    let fx = obj.value(x);
    let (g, h) = obj.grad_hess(x);
    if g.iter().all(|v| *v == 0.0) {
        return NewtonStep {
            point: x.to_vec(),
            fallback: false,
        };
    }
    if let Some(d) = newton_direction(&g, &h) {
        let mut cand: Vec<f64> = x.iter().zip(d.iter()).map(|(a, d)| a + d).collect();
        bounds.project(&mut cand);
        if obj.value(&cand) >= fx {
            return NewtonStep {
                point: cand,
                fallback: false,
            };
        }
    }
    let point = backtrack(obj, x, fx, &g, &gradient_direction(&g, opts), bounds, opts)
        .map(|(p, _)| p)
        .unwrap_or_else(|| x.to_vec());
    NewtonStep { point, fallback: true }
}

/// One safeguarded Newton step on [`objective`]; never decreases it.
pub fn newton_step(
    omega: &TrajectoryParams,
    residuals: &[ObservationBlock],
    bounds: &Bounds,
) -> Result<NewtonStep<TrajectoryParams>> {
    check_dim(omega, bounds)?;
    let obj = PowerObjective::new(omega.model, residuals)?;
    let step = newton_step_with(&obj, &omega.to_vec(), bounds, &LocalOptions::default());
    Ok(NewtonStep {
        point: TrajectoryParams::from_slice(omega.model, &step.point)?,
        fallback: step.fallback,
    })
}
