use crate::dictionary::ParamGrid;
use crate::error::Result;
use crate::estimate::{estimates_from, SourceEstimate};
use crate::kernel;
use crate::observation::{check_blocks, ObservationBlock};
use crate::optim::amplitudes_ls;

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    pub estimates: Vec<SourceEstimate>,
    pub grid_indices: Vec<usize>,
    /// Frobenius norm of the stacked residual: initial, then after each iteration.
    pub residual_norms: Vec<f64>,
    /// Residual blocks after each iteration.
    pub residuals: Vec<Vec<ObservationBlock>>,
    /// Some snapshot's selected steering set was rank deficient.
    pub rank_deficient: bool,
}

fn frobenius(blocks: &[ObservationBlock]) -> f64 {
    blocks.iter().map(|b| b.data.norm_squared()).sum::<f64>().sqrt()
}

/// Greedy trajectory pursuit over the grid.
///
/// Each iteration picks the grid trajectory with the largest residual power
/// (summed over bands), then re-projects the data per snapshot onto the
/// orthogonal complement of every selected steering vector.
pub fn tl_omp(blocks: &[ObservationBlock], grid: &ParamGrid, k: usize) -> Result<OmpResult> {
    check_blocks(blocks)?;
    let mut residual = blocks.to_vec();
    let mut out = OmpResult {
        estimates: Vec::new(),
        grid_indices: Vec::new(),
        residual_norms: vec![frobenius(blocks)],
        residuals: Vec::new(),
        rank_deficient: false,
    };
    let mut selected = Vec::with_capacity(k);
    for _ in 0..k {
        let values = kernel::scan(&residual, grid);
        let index = kernel::argmax(&values).expect("grid is non-empty");
        out.grid_indices.push(index);
        selected.push(grid.grid_point(index)?);
        let sol = amplitudes_ls(&selected, blocks)?;
        out.rank_deficient |= sol.rank_deficient;
        residual = sol.residuals;
        out.residual_norms.push(frobenius(&residual));
        out.residuals.push(residual.clone());
        out.estimates = estimates_from(&selected, &sol.amplitudes);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{ArrayConfig, Frequency};
    use crate::observation::{synthesize_block, synthesize_with, SynthesisOptions};
    use crate::trajectory::{TrajectoryModel, TrajectoryParams};

    fn grid() -> ParamGrid {
        ParamGrid::uniform((-85.0, 2.0, 85.0), (-5.0, 0.5, 5.0), TrajectoryModel::linear()).unwrap()
    }

    fn noiseless(sources: &[TrajectoryParams]) -> Vec<ObservationBlock> {
        let options = SynthesisOptions {
            noiseless: true,
            ..Default::default()
        };
        let array = ArrayConfig::half_wavelength(10).unwrap();
        synthesize_with(sources, &array, 30, 0.0, &[Frequency::Narrowband], 21, options)
            .unwrap()
            .0
    }

    #[test]
    fn single_on_grid_source_in_one_iteration() {
        let p = TrajectoryParams::linear(-11.0, 3.5);
        let out = tl_omp(&noiseless(&[p.clone()]), &grid(), 1).unwrap();
        assert_eq!(out.estimates[0].params, p);
        assert!(out.residual_norms[1] < 1e-10 * out.residual_norms[0]);
    }

    #[test]
    fn two_on_grid_sources() {
        let truth = [TrajectoryParams::linear(-11.0, 3.5), TrajectoryParams::linear(61.0, -2.5)];
        let out = tl_omp(&noiseless(&truth), &grid(), 2).unwrap();
        let mut found: Vec<_> = out.estimates.iter().map(|e| e.params.clone()).collect();
        found.sort_by(|a, b| a.phi.total_cmp(&b.phi));
        // Projection leakage from the first atom can shift the second pick to a lattice neighbour.
        let g = grid();
        for (f, t) in found.iter().zip(&truth) {
            let fi = g.index_of(f).unwrap();
            let ti = g.index_of(t).unwrap();
            assert!(fi == ti || g.neighbors(ti).contains(&fi), "{f:?} vs {t:?}");
        }
        assert!(out.estimates.iter().any(|e| truth.contains(&e.params)));
    }

    #[test]
    fn residual_orthogonal_and_shrinking() {
        let truth = [
            TrajectoryParams::linear(-11.0, 3.5),
            TrajectoryParams::linear(20.0, 1.5),
            TrajectoryParams::linear(61.0, -2.25),
        ];
        let array = ArrayConfig::half_wavelength(10).unwrap();
        let (blocks, _) = synthesize_block(&truth, &array, 30, 5.0, &[Frequency::Narrowband], 77).unwrap();
        let out = tl_omp(&blocks, &grid(), 3).unwrap();
        assert!(out.residual_norms.windows(2).all(|w| w[1] <= w[0]));
        let m = blocks[0].manifold();
        for (it, residual) in out.residuals.iter().enumerate() {
            for l in 0..30 {
                let r = residual[0].snapshot(l);
                let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                for &idx in &out.grid_indices[..=it] {
                    let p = grid().grid_point(idx).unwrap();
                    let ip = m.correlate(p.doa(l, 30), r).norm();
                    assert!(ip <= 1e-9 * rn * 10f64.sqrt());
                }
            }
        }
    }

    #[test]
    fn zero_iterations() {
        let out = tl_omp(&noiseless(&[]), &grid(), 0).unwrap();
        assert!(out.estimates.is_empty());
    }
}
