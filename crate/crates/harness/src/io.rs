//! Observation files: one CSV per band, with a single JSON header line
//! followed by one row per sensor of `re,im` pairs per snapshot.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use trajloc::{Frequency, GroundTruth, ObservationBlock};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockHeader {
    pub n: usize,
    pub l: usize,
    pub frequency: Frequency,
    pub spacing_wavelengths: f64,
    pub seed: u64,
}

pub fn block_to_string(block: &ObservationBlock, seed: u64) -> String {
    let header = BlockHeader {
        n: block.n_sensors(),
        l: block.snapshots(),
        frequency: block.frequency,
        spacing_wavelengths: block.spacing_wavelengths,
        seed,
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for i in 0..header.n {
        let fields: Vec<String> = (0..header.l)
            .flat_map(|l| {
                let z = block.data[(i, l)];
                [format!("{:?}", z.re), format!("{:?}", z.im)]
            })
            .collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn block_from_str(text: &str) -> Result<(ObservationBlock, u64), HarnessError> {
    let mut lines = text.lines();
    let bad = |m: String| HarnessError::Data(m);
    let header: BlockHeader = serde_json::from_str(lines.next().ok_or_else(|| bad("empty file".into()))?)
        .map_err(|e| bad(format!("header: {e}")))?;
    let mut data = DMatrix::<Complex64>::zeros(header.n, header.l);
    for i in 0..header.n {
        let line = lines.next().ok_or_else(|| bad(format!("missing sensor row {i}")))?;
        let values = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad(format!("row {i}: bad number {s:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != 2 * header.l {
            return Err(bad(format!("row {i}: expected {} values, got {}", 2 * header.l, values.len())));
        }
        for l in 0..header.l {
            data[(i, l)] = Complex64::new(values[2 * l], values[2 * l + 1]);
        }
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(bad("trailing rows".into()));
    }
    Ok((
        ObservationBlock {
            data,
            frequency: header.frequency,
            spacing_wavelengths: header.spacing_wavelengths,
        },
        header.seed,
    ))
}

/// Writes `block_<f>.csv` per band and `truth.json`; returns the block paths.
pub fn write_observations(
    dir: &Path,
    blocks: &[ObservationBlock],
    truth: &GroundTruth,
    seed: u64,
) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut paths = Vec::new();
    for (f, block) in blocks.iter().enumerate() {
        let path = dir.join(format!("block_{f}.csv"));
        fs::write(&path, block_to_string(block, seed)).map_err(|e| HarnessError::io(&path, e))?;
        paths.push(path);
    }
    let truth_path = dir.join("truth.json");
    let json = serde_json::to_string_pretty(truth).expect("truth serializes");
    fs::write(&truth_path, json + "\n").map_err(|e| HarnessError::io(&truth_path, e))?;
    Ok(paths)
}

pub fn read_block(path: &Path) -> Result<(ObservationBlock, u64), HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    block_from_str(&text).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use trajloc::{synthesize_block, ArrayConfig, TrajectoryParams};

    #[test]
    fn bit_exact_round_trip() {
        let array = ArrayConfig::for_max_frequency(10, 1800.0, 343.0).unwrap();
        let (blocks, truth) = synthesize_block(
            &[TrajectoryParams::linear(12.3, -1.7)],
            &array,
            7,
            -3.0,
            &[Frequency::Hz(1400.0), Frequency::Hz(1800.0)],
            99,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = write_observations(dir.path(), &blocks, &truth, 99).unwrap();
        for (path, block) in paths.iter().zip(&blocks) {
            let (back, seed) = read_block(path).unwrap();
            assert_eq!(seed, 99);
            assert_eq!(&back, block);
            for (a, b) in back.data.iter().zip(block.data.iter()) {
                assert_eq!(a.re.to_bits(), b.re.to_bits());
                assert_eq!(a.im.to_bits(), b.im.to_bits());
            }
        }
        let text = std::fs::read_to_string(dir.path().join("truth.json")).unwrap();
        let back: GroundTruth = serde_json::from_str(&text).unwrap();
        assert_eq!(back, truth);
    }

    #[test]
    fn narrowband_header() {
        let array = ArrayConfig::half_wavelength(3).unwrap();
        let (blocks, _) = synthesize_block(&[], &array, 2, 0.0, &[Frequency::Narrowband], 1).unwrap();
        let text = block_to_string(&blocks[0], 1);
        assert!(text.starts_with(r#"{"n":3,"l":2,"frequency":"narrowband""#), "{text}");
        assert!(block_from_str("{}").is_err());
        assert!(block_from_str(&text.replacen(',', ";", 8)).is_err());
    }
}
