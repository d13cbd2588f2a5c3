//! Parametric DOA trajectory models.
//!
//! A trajectory maps snapshot index `l` of an `L`-snapshot block to a DOA in
//! degrees. Both supported families are linear in their parameter vector
//! `(phi, c_1, ..., c_D)`: the DOA is the dot product of the parameters with a
//! per-snapshot basis, which is what the derivative code relies on.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayConfig, Manifold};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrajectoryModel {
    /// `theta_l = phi + sum_p alpha_p (l / (L - 1))^p`
    Polynomial { order: usize },
    /// `theta_l = phi + sum_q alpha_q sin(q nu l) + beta_q cos(q nu l)`, `nu` in rad/snapshot.
    Bandlimited { order: usize, nu: f64 },
}

impl TrajectoryModel {
    pub fn linear() -> Self {
        TrajectoryModel::Polynomial { order: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TrajectoryModel::Polynomial { .. } => Ok(()),
            TrajectoryModel::Bandlimited { order, nu } => {
                if order == 0 {
                    return Err(Error::InvalidModel("bandlimited order must be >= 1".into()));
                }
                if !(nu > 0.0 && nu.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "bandlimited fundamental must be positive, got {nu}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Length of the full parameter vector, `phi` included.
    pub fn dim(&self) -> usize {
        match *self {
            TrajectoryModel::Polynomial { order } => 1 + order,
            TrajectoryModel::Bandlimited { order, .. } => 1 + 2 * order,
        }
    }

    /// Writes `d theta_l / d omega_i` for every parameter into `out`.
    pub fn basis_into(&self, l: usize, len: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        out[0] = 1.0;
        match *self {
            TrajectoryModel::Polynomial { order } => {
                if order > 0 {
                    let t = l as f64 / (len as f64 - 1.0);
                    let mut pow = 1.0;
                    for b in out.iter_mut().skip(1) {
                        pow *= t;
                        *b = pow;
                    }
                }
            }
            TrajectoryModel::Bandlimited { order, nu } => {
                for q in 1..=order {
                    let (s, c) = (q as f64 * nu * l as f64).sin_cos();
                    out[q] = s;
                    out[order + q] = c;
                }
            }
        }
    }

    pub fn basis(&self, l: usize, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.basis_into(l, len, &mut out);
        out
    }

    /// Basis rows for every snapshot of a block, `len x dim`.
    pub fn basis_matrix(&self, len: usize) -> DMatrix<f64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(len, dim);
        let mut row = vec![0.0; dim];
        for l in 0..len {
            self.basis_into(l, len, &mut row);
            for (i, &b) in row.iter().enumerate() {
                m[(l, i)] = b;
            }
        }
        m
    }

    fn needs_two_snapshots(&self) -> bool {
        matches!(*self, TrajectoryModel::Polynomial { order } if order >= 1)
    }
}

/// Trajectory parameters of one source, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub model: TrajectoryModel,
    pub phi: f64,
    /// `alpha_1..alpha_P`, or `alpha_1..alpha_Q` followed by `beta_1..beta_Q`.
    pub coeffs: Vec<f64>,
}

impl TrajectoryParams {
    pub fn new(model: TrajectoryModel, phi: f64, coeffs: Vec<f64>) -> Result<Self> {
        model.validate()?;
        if coeffs.len() + 1 != model.dim() {
            return Err(Error::CoefficientCount {
                expected: model.dim() - 1,
                got: coeffs.len(),
            });
        }
        Ok(Self { model, phi, coeffs })
    }

    pub fn static_doa(phi: f64) -> Self {
        Self {
            model: TrajectoryModel::Polynomial { order: 0 },
            phi,
            coeffs: Vec::new(),
        }
    }

    pub fn linear(phi: f64, alpha: f64) -> Self {
        Self {
            model: TrajectoryModel::linear(),
            phi,
            coeffs: vec![alpha],
        }
    }

    /// Builds params from a full vector `(phi, coeffs...)`.
    pub fn from_slice(model: TrajectoryModel, omega: &[f64]) -> Result<Self> {
        match omega.split_first() {
            Some((&phi, rest)) => Self::new(model, phi, rest.to_vec()),
            None => Err(Error::CoefficientCount {
                expected: model.dim() - 1,
                got: 0,
            }),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.coeffs.len() + 1);
        v.push(self.phi);
        v.extend_from_slice(&self.coeffs);
        v
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// DOA at snapshot `l` without range checks.
    pub fn doa(&self, l: usize, len: usize) -> f64 {
        let basis = self.model.basis(l, len);
        let mut theta = self.phi;
        for (c, b) in self.coeffs.iter().zip(&basis[1..]) {
            theta += c * b;
        }
        theta
    }

    pub fn doa_at_snapshot(&self, l: usize, len: usize) -> Result<f64> {
        if len < 2 && self.model.needs_two_snapshots() {
            return Err(Error::BlockTooShort(len));
        }
        if l >= len {
            return Err(Error::SnapshotOutOfRange { index: l, len });
        }
        Ok(self.doa(l, len))
    }

    /// DOA sequence over a whole block.
    pub fn doas(&self, len: usize) -> Vec<f64> {
        (0..len).map(|l| self.doa(l, len)).collect()
    }

    /// Rejects trajectories that touch or leave (-90, 90) inside the block.
    pub fn check_in_bounds(&self, len: usize) -> Result<()> {
        if len < 2 && self.model.needs_two_snapshots() {
            return Err(Error::BlockTooShort(len));
        }
        for l in 0..len {
            let theta = self.doa(l, len);
            if !(theta.abs() < 90.0) {
                return Err(Error::TrajectoryOutOfBounds { snapshot: l, theta });
            }
        }
        Ok(())
    }
}

/// `N x L` matrix whose column `l` is the steering vector at the snapshot-`l` DOA.
pub fn trajectory_steering_matrix(
    params: &TrajectoryParams,
    array: &ArrayConfig,
    len: usize,
    wavelength: f64,
) -> Result<DMatrix<Complex64>> {
    if !(wavelength > 0.0) {
        return Err(Error::NonPositiveWavelength(wavelength));
    }
    params.check_in_bounds(len)?;
    Ok(Manifold::new(array.n_sensors, array.spacing / wavelength).trajectory_matrix(params, len))
}

impl Manifold {
    /// Unchecked trajectory steering matrix.
    pub fn trajectory_matrix(&self, params: &TrajectoryParams, len: usize) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.n_sensors, len);
        for l in 0..len {
            m.set_column(l, &self.steering(params.doa(l, len)));
        }
        m
    }

    pub fn trajectory_column(&self, params: &TrajectoryParams, l: usize, len: usize) -> DVector<Complex64> {
        self.steering(params.doa(l, len))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_trajectory_is_constant() {
        let p = TrajectoryParams::static_doa(20.0);
        for l in 0..30 {
            assert_eq!(p.doa_at_snapshot(l, 30).unwrap(), 20.0);
        }
        // Order zero is defined even for a single snapshot.
        assert_eq!(p.doa_at_snapshot(0, 1).unwrap(), 20.0);
    }

    #[test]
    fn linear_endpoint() {
        let p = TrajectoryParams::linear(20.0, 1.5);
        assert_eq!(p.doa_at_snapshot(29, 30).unwrap(), 21.5);
        assert_eq!(p.doa_at_snapshot(0, 30).unwrap(), 20.0);
    }

    #[test]
    fn bandlimited_at_origin() {
        let model = TrajectoryModel::Bandlimited { order: 1, nu: 0.37 };
        let p = TrajectoryParams::new(model, 10.0, vec![0.0, 2.0]).unwrap();
        assert_eq!(p.doa_at_snapshot(0, 40).unwrap(), 12.0);
        let expected = 10.0 + 2.0 * (0.37f64 * 5.0).cos();
        assert!((p.doa_at_snapshot(5, 40).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn doa_errors() {
        let p = TrajectoryParams::linear(0.0, 1.0);
        assert_eq!(
            p.doa_at_snapshot(30, 30),
            Err(Error::SnapshotOutOfRange { index: 30, len: 30 })
        );
        assert_eq!(p.doa_at_snapshot(0, 1), Err(Error::BlockTooShort(1)));
    }

    #[test]
    fn model_validation() {
        assert!(TrajectoryParams::new(TrajectoryModel::linear(), 0.0, vec![]).is_err());
        assert!(TrajectoryModel::Bandlimited { order: 0, nu: 0.1 }.validate().is_err());
        assert!(TrajectoryModel::Bandlimited { order: 1, nu: 0.0 }.validate().is_err());
        assert_eq!(TrajectoryModel::Bandlimited { order: 2, nu: 0.1 }.dim(), 5);
        assert_eq!(TrajectoryModel::Polynomial { order: 2 }.dim(), 3);
    }

    #[test]
    fn out_of_bounds_trajectory() {
        let p = TrajectoryParams::linear(85.0, 5.0);
        assert!(matches!(
            p.check_in_bounds(30),
            Err(Error::TrajectoryOutOfBounds { snapshot: 29, .. })
        ));
        assert!(TrajectoryParams::linear(85.0, 4.0).check_in_bounds(30).is_ok());
    }

    #[test]
    fn steering_matrix_columns() {
        let array = ArrayConfig::half_wavelength(10).unwrap();
        let s = trajectory_steering_matrix(&TrajectoryParams::static_doa(-33.0), &array, 8, 1.0).unwrap();
        for l in 1..8 {
            assert_eq!(s.column(l), s.column(0));
        }

        let p = TrajectoryParams::linear(20.0, 1.5);
        let s = trajectory_steering_matrix(&p, &array, 30, 1.0).unwrap();
        let end = array.steering_vector(21.5, 1.0).unwrap();
        assert!((s.column(29) - end).norm() < 1e-12);
        assert!(s.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }
}
