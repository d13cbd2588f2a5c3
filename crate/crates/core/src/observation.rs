//! Snapshot blocks and seeded synthetic data generation.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayConfig, Frequency, Manifold};
use crate::error::{Error, Result};
use crate::trajectory::TrajectoryParams;

/// `N x L` complex snapshots observed in one band.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationBlock {
    pub data: DMatrix<Complex64>,
    pub frequency: Frequency,
    /// `d / lambda` for this band.
    pub spacing_wavelengths: f64,
}

impl ObservationBlock {
    pub fn n_sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn manifold(&self) -> Manifold {
        Manifold::new(self.n_sensors(), self.spacing_wavelengths)
    }

    /// Same band, different data (residuals, reconstructions).
    pub fn with_data(&self, data: DMatrix<Complex64>) -> Self {
        Self {
            data,
            frequency: self.frequency,
            spacing_wavelengths: self.spacing_wavelengths,
        }
    }

    pub fn snapshot(&self, l: usize) -> &[Complex64] {
        let n = self.n_sensors();
        &self.data.as_slice()[l * n..(l + 1) * n]
    }
}

/// Checks that all blocks share `N` and `L`; returns `(N, L)`.
pub fn check_blocks(blocks: &[ObservationBlock]) -> Result<(usize, usize)> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::DimensionMismatch("no observation blocks".into()))?;
    let dims = (first.n_sensors(), first.snapshots());
    for b in blocks {
        if (b.n_sensors(), b.snapshots()) != dims {
            return Err(Error::DimensionMismatch(format!(
                "block {}x{} differs from {}x{}",
                b.n_sensors(),
                b.snapshots(),
                dims.0,
                dims.1
            )));
        }
    }
    if dims.0 == 0 || dims.1 == 0 {
        return Err(Error::DimensionMismatch("empty observation block".into()));
    }
    Ok(dims)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub sources: Vec<TrajectoryParams>,
    /// `amplitudes[f][k][l]`: amplitude of source `k` at snapshot `l` in band `f`.
    pub amplitudes: Vec<Vec<Vec<Complex64>>>,
    pub noise_variance: f64,
    pub signal_variance: f64,
}

/// Noise variance giving `snr_db` for the given signal variance.
pub fn noise_variance_for_snr(snr_db: f64, signal_variance: f64) -> f64 {
    signal_variance * 10f64.powf(-snr_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    pub signal_variance: f64,
    /// Skip the additive noise term.
    pub noiseless: bool,
    /// Force every source amplitude to 1.
    pub unit_amplitudes: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            signal_variance: 1.0,
            noiseless: false,
            unit_amplitudes: false,
        }
    }
}

/// Synthesizes one block per frequency from the given source trajectories.
///
/// Amplitudes and noise are circular complex Gaussian. Random draws happen in
/// a fixed order (per band: all source amplitudes, then noise column by
/// column), so the output is a pure function of the arguments and `seed`.
pub fn synthesize_block(
    sources: &[TrajectoryParams],
    array: &ArrayConfig,
    len: usize,
    snr_db: f64,
    frequencies: &[Frequency],
    seed: u64,
) -> Result<(Vec<ObservationBlock>, GroundTruth)> {
    synthesize_with(sources, array, len, snr_db, frequencies, seed, SynthesisOptions::default())
}

pub fn synthesize_with(
    sources: &[TrajectoryParams],
    array: &ArrayConfig,
    len: usize,
    snr_db: f64,
    frequencies: &[Frequency],
    seed: u64,
    options: SynthesisOptions,
) -> Result<(Vec<ObservationBlock>, GroundTruth)> {
    if len == 0 {
        return Err(Error::InvalidArgument("block length must be positive".into()));
    }
    if frequencies.is_empty() {
        return Err(Error::InvalidArgument("at least one frequency is required".into()));
    }
    for s in sources {
        s.model.validate()?;
        s.check_in_bounds(len)?;
    }
    let spacings = frequencies
        .iter()
        .map(|&f| array.spacing_in_wavelengths(f))
        .collect::<Result<Vec<_>>>()?;

    let signal_variance = options.signal_variance;
    let noise_variance = noise_variance_for_snr(snr_db, signal_variance);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = array.n_sensors;

    let mut blocks = Vec::with_capacity(frequencies.len());
    let mut amplitudes = Vec::with_capacity(frequencies.len());
    for (&frequency, &spacing_wavelengths) in frequencies.iter().zip(&spacings) {
        let manifold = Manifold::new(n, spacing_wavelengths);
        let mut data = DMatrix::<Complex64>::zeros(n, len);
        let mut band_amplitudes = Vec::with_capacity(sources.len());
        for source in sources {
            let x: Vec<Complex64> = (0..len)
                .map(|_| {
                    if options.unit_amplitudes {
                        Complex64::new(1.0, 0.0)
                    } else {
                        complex_gaussian(&mut rng, signal_variance)
                    }
                })
                .collect();
            for (l, &xl) in x.iter().enumerate() {
                let a = manifold.trajectory_column(source, l, len);
                let mut col = data.column_mut(l);
                col.axpy(xl, &a, Complex64::new(1.0, 0.0));
            }
            band_amplitudes.push(x);
        }
        if !options.noiseless {
            for z in data.iter_mut() {
                *z += complex_gaussian(&mut rng, noise_variance);
            }
        }
        blocks.push(ObservationBlock {
            data,
            frequency,
            spacing_wavelengths,
        });
        amplitudes.push(band_amplitudes);
    }

    Ok((
        blocks,
        GroundTruth {
            sources: sources.to_vec(),
            amplitudes,
            noise_variance: if options.noiseless { 0.0 } else { noise_variance },
            signal_variance,
        },
    ))
}

fn complex_gaussian<R: Rng>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn array() -> ArrayConfig {
        ArrayConfig::half_wavelength(10).unwrap()
    }

    #[test]
    fn pure_noise_has_unit_variance() {
        let (blocks, truth) = synthesize_block(&[], &array(), 10_000, 0.0, &[Frequency::Narrowband], 11).unwrap();
        assert_eq!(truth.noise_variance, 1.0);
        let data = &blocks[0].data;
        let var = data.iter().map(|z| z.norm_sqr()).sum::<f64>() / data.len() as f64;
        assert!((var - 1.0).abs() < 0.05, "sample variance {var}");
    }

    #[test]
    fn snr_sets_noise_variance() {
        let v = noise_variance_for_snr(5.0, 1.0);
        assert!((v - 10f64.powf(-0.5)).abs() < 1e-15);
        assert!((v - 0.316227766).abs() < 1e-9);
    }

    #[test]
    fn noiseless_unit_amplitude_columns_are_steering_vectors() {
        let p = TrajectoryParams::linear(20.0, 1.5);
        let options = SynthesisOptions {
            noiseless: true,
            unit_amplitudes: true,
            ..Default::default()
        };
        let (blocks, _) =
            synthesize_with(&[p.clone()], &array(), 30, 0.0, &[Frequency::Narrowband], 3, options).unwrap();
        for l in 0..30 {
            let a = array().steering_vector(p.doa(l, 30), 1.0).unwrap();
            assert!((blocks[0].data.column(l) - a).norm() < 1e-14);
        }
    }

    #[test]
    fn same_seed_same_data() {
        let p = TrajectoryParams::linear(-11.0, 3.5);
        let a = synthesize_block(&[p.clone()], &array(), 30, 5.0, &[Frequency::Narrowband], 42).unwrap();
        let b = synthesize_block(&[p.clone()], &array(), 30, 5.0, &[Frequency::Narrowband], 42).unwrap();
        let c = synthesize_block(&[p], &array(), 30, 5.0, &[Frequency::Narrowband], 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0[0].data, c.0[0].data);
    }

    #[test]
    fn synthesis_errors() {
        let far = TrajectoryParams::linear(88.0, 5.0);
        assert!(matches!(
            synthesize_block(&[far], &array(), 30, 5.0, &[Frequency::Narrowband], 1),
            Err(Error::TrajectoryOutOfBounds { .. })
        ));
        let wide = ArrayConfig::for_max_frequency(10, 1600.0, 343.0).unwrap();
        assert!(matches!(
            synthesize_block(&[], &wide, 30, 5.0, &[Frequency::Hz(2000.0)], 1),
            Err(Error::Aliasing { .. })
        ));
    }

    #[test]
    fn snapshot_slices_are_columns() {
        let (blocks, _) = synthesize_block(&[], &array(), 4, 0.0, &[Frequency::Narrowband], 5).unwrap();
        let b = &blocks[0];
        for l in 0..4 {
            assert_eq!(b.snapshot(l), b.data.column(l).as_slice());
        }
    }
}
