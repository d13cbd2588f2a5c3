//! Uniform linear array geometry and far-field steering vectors.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of sound in air, m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Processing band of an observation block.
///
/// Narrowband blocks use a unit wavelength, so [`ArrayConfig::spacing`] is read
/// directly as a fraction of the wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Narrowband,
    Hz(f64),
}

impl std::fmt::Display for Frequency {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Frequency::Narrowband => write!(f, "narrowband"),
            Frequency::Hz(hz) => write!(f, "{hz}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_sensors: usize,
    /// Inter-sensor spacing: meters, or wavelengths for narrowband processing.
    pub spacing: f64,
    pub propagation_speed: f64,
}

impl ArrayConfig {
    pub fn new(n_sensors: usize, spacing: f64, propagation_speed: f64) -> Result<Self> {
        if n_sensors < 2 {
            return Err(Error::InvalidArray(format!(
                "need at least 2 sensors, got {n_sensors}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidArray(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if !(propagation_speed > 0.0 && propagation_speed.is_finite()) {
            return Err(Error::InvalidArray(format!(
                "propagation speed must be positive, got {propagation_speed}"
            )));
        }
        Ok(Self {
            n_sensors,
            spacing,
            propagation_speed,
        })
    }

    /// Narrowband array with half-wavelength spacing.
    pub fn half_wavelength(n_sensors: usize) -> Result<Self> {
        Self::new(n_sensors, 0.5, SPEED_OF_SOUND)
    }

    /// Wideband array spaced at half the wavelength of `max_frequency`.
    pub fn for_max_frequency(n_sensors: usize, max_frequency: f64, propagation_speed: f64) -> Result<Self> {
        if !(max_frequency > 0.0) {
            return Err(Error::InvalidArray(format!(
                "maximum frequency must be positive, got {max_frequency}"
            )));
        }
        Self::new(
            n_sensors,
            propagation_speed / (2.0 * max_frequency),
            propagation_speed,
        )
    }

    pub fn wavelength(&self, frequency: Frequency) -> f64 {
        match frequency {
            Frequency::Narrowband => 1.0,
            Frequency::Hz(hz) => self.propagation_speed / hz,
        }
    }

    /// Spacing expressed in wavelengths at `frequency`, rejecting aliasing.
    pub fn spacing_in_wavelengths(&self, frequency: Frequency) -> Result<f64> {
        if let Frequency::Hz(hz) = frequency {
            if !(hz > 0.0 && hz.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "frequency must be positive, got {hz}"
                )));
            }
        }
        let wavelength = self.wavelength(frequency);
        // Tiny slack so that d = c / (2 f_max) is not rejected by rounding.
        if self.spacing > wavelength / 2.0 * (1.0 + 1e-12) {
            return Err(Error::Aliasing {
                frequency: match frequency {
                    Frequency::Hz(hz) => hz,
                    Frequency::Narrowband => f64::NAN,
                },
                spacing: self.spacing,
                half_wavelength: wavelength / 2.0,
            });
        }
        Ok(self.spacing / wavelength)
    }

    /// Far-field steering vector for a source at `theta` degrees.
    pub fn steering_vector(&self, theta: f64, wavelength: f64) -> Result<DVector<Complex64>> {
        if !(wavelength > 0.0) {
            return Err(Error::NonPositiveWavelength(wavelength));
        }
        if !(theta.abs() < 90.0) {
            return Err(Error::AngleOutOfRange(theta));
        }
        Ok(Manifold::new(self.n_sensors, self.spacing / wavelength).steering(theta))
    }
}

/// Array response of an `n`-sensor ULA at a fixed spacing-to-wavelength ratio.
///
/// Element `n` of the steering vector is `exp(j * kappa * n * sin(theta))` with
/// `kappa = 2 pi d / lambda`. Angles are taken in degrees; nothing here checks
/// that they lie inside (-90, 90), so grid and optimizer code may evaluate
/// points at or beyond endfire.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Manifold {
    pub n_sensors: usize,
    pub kappa: f64,
}

impl Manifold {
    pub fn new(n_sensors: usize, spacing_wavelengths: f64) -> Self {
        Self {
            n_sensors,
            kappa: 2.0 * std::f64::consts::PI * spacing_wavelengths,
        }
    }

    pub fn steering(&self, theta: f64) -> DVector<Complex64> {
        let s = theta.to_radians().sin();
        DVector::from_iterator(
            self.n_sensors,
            (0..self.n_sensors).map(|n| Complex64::from_polar(1.0, self.kappa * n as f64 * s)),
        )
    }

    /// Derivative of the steering vector with respect to `theta` in degrees.
    pub fn steering_derivative(&self, theta: f64) -> DVector<Complex64> {
        let u = theta.to_radians();
        let (s, c) = u.sin_cos();
        let scale = self.kappa * c * std::f64::consts::PI / 180.0;
        DVector::from_iterator(
            self.n_sensors,
            (0..self.n_sensors).map(|n| {
                let e = Complex64::from_polar(1.0, self.kappa * n as f64 * s);
                Complex64::new(0.0, scale * n as f64) * e
            }),
        )
    }

    /// `a(theta)^H r`, evaluated by Horner's rule in the conjugate phasor.
    #[inline]
    pub fn correlate(&self, theta: f64, r: &[Complex64]) -> Complex64 {
        let s = theta.to_radians().sin();
        correlate_sin(self.kappa, s, r)
    }

    /// `a^H r` together with its first and second derivatives in `theta` (degrees).
    pub fn correlate_derivatives(&self, theta: f64, r: &[Complex64]) -> (Complex64, Complex64, Complex64) {
        let u = theta.to_radians();
        let (s, c) = u.sin_cos();
        let w = Complex64::from_polar(1.0, -self.kappa * s);
        let mut e = Complex64::new(1.0, 0.0);
        let (mut z0, mut z1, mut z2) = (Complex64::default(), Complex64::default(), Complex64::default());
        for (n, &rn) in r.iter().enumerate() {
            let t = e * rn;
            let nf = n as f64;
            z0 += t;
            z1 += t * nf;
            z2 += t * (nf * nf);
            e *= w;
        }
        let k = self.kappa;
        let d = std::f64::consts::PI / 180.0;
        let dz = Complex64::new(0.0, -k * c) * z1;
        let d2z = z2 * (-k * k * c * c) + Complex64::new(0.0, k * s) * z1;
        (z0, dz * d, d2z * (d * d))
    }
}

/// `sum_n exp(-j kappa n s) r_n` by Horner's rule.
#[inline]
pub(crate) fn correlate_sin(kappa: f64, s: f64, r: &[Complex64]) -> Complex64 {
    let w = Complex64::from_polar(1.0, -kappa * s);
    let mut acc = Complex64::default();
    for &rn in r.iter().rev() {
        acc = acc * w + rn;
    }
    acc
}
