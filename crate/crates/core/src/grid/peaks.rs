use crate::grid::Spectrum;
use crate::trajectory::TrajectoryParams;

#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub params: TrajectoryParams,
    pub value: f64,
}

/// Local maxima of a spectrum, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    pub entries: Vec<Peak>,
    /// Fewer local maxima than requested were found.
    pub shortfall: bool,
}

impl PeakSet {
    pub fn params(&self) -> Vec<TrajectoryParams> {
        self.entries.iter().map(|p| p.params.clone()).collect()
    }
}

/// Up to `count` grid points that are `>=` all their Chebyshev-1 lattice
/// neighbours, by descending value (ties by ascending index).
pub fn find_peaks(spectrum: &Spectrum, count: usize) -> PeakSet {
    let grid = &spectrum.grid;
    let v = &spectrum.values;
    let mut maxima: Vec<usize> = (0..v.len())
        .filter(|&i| grid.neighbors(i).into_iter().all(|j| v[i] >= v[j]))
        .collect();
    maxima.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let shortfall = maxima.len() < count;
    maxima.truncate(count);
    PeakSet {
        entries: maxima
            .into_iter()
            .map(|index| Peak {
                index,
                params: grid.grid_point(index).expect("index from grid"),
                value: v[index],
            })
            .collect(),
        shortfall,
    }
}
