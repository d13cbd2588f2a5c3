//! Discrete trajectory-parameter grids.
//!
//! Points are linearized row-major over the axes, `phi` first (slowest) and
//! the last coefficient axis fastest.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayConfig, Manifold};
use crate::error::{Error, Result};
use crate::trajectory::{TrajectoryModel, TrajectoryParams};

/// One grid axis `{start : step : stop}`, degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl GridAxis {
    pub fn new(name: impl Into<String>, start: f64, step: f64, stop: f64) -> Self {
        Self {
            name: name.into(),
            start,
            step,
            stop,
        }
    }

    pub fn len(&self) -> usize {
        // The epsilon keeps e.g. {-5:0.5:5} at 21 points despite rounding.
        (((self.stop - self.start) / self.step) + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.start.is_finite()
            && self.stop.is_finite()
            && self.step.is_finite()
            && self.step > 0.0
            && self.stop >= self.start;
        if ok {
            Ok(())
        } else {
            Err(Error::EmptyAxis(self.name.clone()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    axes: Vec<GridAxis>,
    model: TrajectoryModel,
    lens: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl ParamGrid {
    /// Builds a grid; `axes[0]` is `phi`, the rest follow the model's coefficient order.
    pub fn build(axes: Vec<GridAxis>, model: TrajectoryModel) -> Result<Self> {
        model.validate()?;
        if axes.len() != model.dim() {
            return Err(Error::CoefficientCount {
                expected: model.dim(),
                got: axes.len(),
            });
        }
        for axis in &axes {
            axis.validate()?;
        }
        let lens: Vec<usize> = axes.iter().map(GridAxis::len).collect();
        let mut strides = vec![1; lens.len()];
        for d in (0..lens.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * lens[d + 1];
        }
        let size = lens.iter().product();
        Ok(Self {
            axes,
            model,
            lens,
            strides,
            size,
        })
    }

    /// `phi` axis plus `n_coeffs` identical coefficient axes named `c1, c2, ...`.
    pub fn uniform(phi: (f64, f64, f64), coeff: (f64, f64, f64), model: TrajectoryModel) -> Result<Self> {
        let mut axes = vec![GridAxis::new("phi", phi.0, phi.1, phi.2)];
        for i in 1..model.dim() {
            axes.push(GridAxis::new(format!("c{i}"), coeff.0, coeff.1, coeff.2));
        }
        Self::build(axes, model)
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn model(&self) -> TrajectoryModel {
        self.model
    }

    /// Number of grid points `M`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn shape(&self) -> &[usize] {
        &self.lens
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        self.strides
            .iter()
            .zip(&self.lens)
            .map(|(&s, &n)| (index / s) % n)
            .collect()
    }

    pub fn linear_index(&self, multi: &[usize]) -> Option<usize> {
        if multi.len() != self.dim() || multi.iter().zip(&self.lens).any(|(&i, &n)| i >= n) {
            return None;
        }
        Some(multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum())
    }

    /// Writes the parameter vector of point `index` into `out`.
    pub fn point_into(&self, index: usize, out: &mut [f64]) {
        for (d, axis) in self.axes.iter().enumerate() {
            out[d] = axis.value((index / self.strides[d]) % self.lens[d]);
        }
    }

    pub fn grid_point(&self, index: usize) -> Result<TrajectoryParams> {
        if index >= self.size {
            return Err(Error::IndexOutOfRange {
                index,
                size: self.size,
            });
        }
        let mut omega = vec![0.0; self.dim()];
        self.point_into(index, &mut omega);
        TrajectoryParams::from_slice(self.model, &omega)
    }

    /// Index of the grid point with exactly these parameter values, if any.
    pub fn index_of(&self, params: &TrajectoryParams) -> Option<usize> {
        if params.model != self.model {
            return None;
        }
        let omega = params.to_vec();
        let multi: Option<Vec<usize>> = self
            .axes
            .iter()
            .zip(&omega)
            .zip(&self.lens)
            .map(|((axis, &v), &n)| {
                let i = ((v - axis.start) / axis.step).round();
                if i < 0.0 || i as usize >= n {
                    return None;
                }
                let i = i as usize;
                ((axis.value(i) - v).abs() <= 1e-9 * axis.step).then_some(i)
            })
            .collect();
        multi.and_then(|m| self.linear_index(&m))
    }

    /// Linear indices of the Chebyshev-1 lattice neighbours of `index`.
    pub fn neighbors(&self, index: usize) -> Vec<usize> {
        let center = self.multi_index(index);
        let dim = self.dim();
        let mut out = Vec::with_capacity(3usize.pow(dim as u32) - 1);
        let mut offset = vec![-1i64; dim];
        loop {
            if offset.iter().any(|&o| o != 0) {
                let mut lin = 0usize;
                let mut inside = true;
                for d in 0..dim {
                    let i = center[d] as i64 + offset[d];
                    if i < 0 || i >= self.lens[d] as i64 {
                        inside = false;
                        break;
                    }
                    lin += i as usize * self.strides[d];
                }
                if inside {
                    out.push(lin);
                }
            }
            // odometer over {-1, 0, 1}^dim
            let mut d = dim;
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                if offset[d] < 1 {
                    offset[d] += 1;
                    break;
                }
                offset[d] = -1;
            }
        }
    }

    /// Grid axis ranges widened by one step, with `phi` kept inside `[-89, 89]`.
    pub fn default_bounds(&self) -> crate::optim::Bounds {
        let pairs = self
            .axes
            .iter()
            .enumerate()
            .map(|(d, a)| {
                let (lo, hi) = (a.start - a.step, a.stop + a.step);
                if d == 0 {
                    (lo.max(-89.0), hi.min(89.0))
                } else {
                    (lo, hi)
                }
            })
            .collect();
        crate::optim::Bounds::new(pairs).expect("grid axes produce ordered bounds")
    }
}

/// Trajectory steering matrix of grid point `index`.
///
/// Grid corners may touch endfire (e.g. `phi = 85, alpha = 5` reaches 90 deg),
/// so unlike [`crate::trajectory::trajectory_steering_matrix`] the DOA range is
/// not checked here.
pub fn atom(
    grid: &ParamGrid,
    index: usize,
    array: &ArrayConfig,
    len: usize,
    wavelength: f64,
) -> Result<DMatrix<Complex64>> {
    if !(wavelength > 0.0) {
        return Err(Error::NonPositiveWavelength(wavelength));
    }
    let params = grid.grid_point(index)?;
    Ok(Manifold::new(array.n_sensors, array.spacing / wavelength).trajectory_matrix(&params, len))
}
