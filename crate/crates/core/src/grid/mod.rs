//! Grid-based trajectory localization: beamforming spectrum, peak picking,
//! greedy pursuit and sparse Bayesian learning over a [`ParamGrid`].

mod omp;
mod peaks;
mod sbl;

pub use omp::{tl_omp, OmpResult};
pub use peaks::{find_peaks, Peak, PeakSet};
pub use sbl::{tl_sbl, tl_sbl_with, SblOptions, SblResult};

use crate::dictionary::ParamGrid;
use crate::error::Result;
use crate::kernel;
use crate::observation::{check_blocks, ObservationBlock};

/// Non-negative values over every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: ParamGrid,
    pub values: Vec<f64>,
}

impl Spectrum {
    pub fn argmax(&self) -> Option<usize> {
        kernel::argmax(&self.values)
    }
}

/// Beamforming power `sum_f (1/L) sum_l |a_lf(omega)^H y_lf|^2` over the grid.
///
/// Multiple blocks are combined non-coherently by summing their spectra.
pub fn tl_cbf_spectrum(blocks: &[ObservationBlock], grid: &ParamGrid) -> Result<Spectrum> {
    check_blocks(blocks)?;
    Ok(Spectrum {
        grid: grid.clone(),
        values: kernel::scan(blocks, grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ArrayConfig, Frequency};
    use crate::observation::{synthesize_with, SynthesisOptions};
    use crate::trajectory::{TrajectoryModel, TrajectoryParams};

    fn grid() -> ParamGrid {
        ParamGrid::uniform((-85.0, 2.0, 85.0), (-5.0, 0.5, 5.0), TrajectoryModel::linear()).unwrap()
    }

    #[test]
    fn on_grid_peak_is_n_squared_and_global_max() {
        let p = TrajectoryParams::linear(-11.0, 3.5);
        let options = SynthesisOptions {
            noiseless: true,
            unit_amplitudes: true,
            ..Default::default()
        };
        let array = ArrayConfig::half_wavelength(10).unwrap();
        let (blocks, _) = synthesize_with(&[p.clone()], &array, 30, 0.0, &[Frequency::Narrowband], 0, options).unwrap();
        let s = tl_cbf_spectrum(&blocks, &grid()).unwrap();
        let idx = grid().index_of(&p).unwrap();
        assert!((s.values[idx] - 100.0).abs() < 1e-9);
        // brute force over every grid value
        let best = (0..s.values.len())
            .max_by(|&a, &b| s.values[a].partial_cmp(&s.values[b]).unwrap())
            .unwrap();
        assert_eq!(best, idx);
        assert_eq!(s.argmax(), Some(idx));
        assert!(s.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn zero_data_gives_zero_spectrum() {
        let array = ArrayConfig::half_wavelength(10).unwrap();
        let options = SynthesisOptions {
            noiseless: true,
            ..Default::default()
        };
        let (blocks, _) = synthesize_with(&[], &array, 30, 0.0, &[Frequency::Narrowband], 0, options).unwrap();
        let s = tl_cbf_spectrum(&blocks, &grid()).unwrap();
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mismatched_blocks_rejected() {
        let array = ArrayConfig::half_wavelength(10).unwrap();
        let (a, _) = synthesize_with(&[], &array, 30, 0.0, &[Frequency::Narrowband], 0, Default::default()).unwrap();
        let (b, _) = synthesize_with(&[], &array, 20, 0.0, &[Frequency::Narrowband], 0, Default::default()).unwrap();
        let both = vec![a[0].clone(), b[0].clone()];
        assert!(tl_cbf_spectrum(&both, &grid()).is_err());
    }
}
