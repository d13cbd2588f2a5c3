//! Ready-to-run scenarios for the standard experiment suite.

use crate::config::{
    Algorithm, ArraySection, FrequencySpec, GridSection, ModelKind, ModelSection, OspaSection, ScenarioConfig,
    SourceSpec, SweepKind, SweepSection,
};
use trajloc::SPEED_OF_SOUND;

pub const NAMES: [&str; 8] = [
    "snr",
    "snapshots",
    "grid-step",
    "resolution",
    "nonlinear",
    "bandlimited",
    "wideband",
    "timing",
];

pub fn describe(name: &str) -> &'static str {
    match name {
        "snr" => "four linear sources, L=30, SNR -10..30 dB",
        "snapshots" => "four linear sources, 5 dB, L = 5..50",
        "grid-step" => "grid-placed linear sources, 5 dB, phi step 1..10",
        "resolution" => "third source sweeps phi from -15 to 15 past the first",
        "nonlinear" => "four quadratic sources, L=30, SNR -10..30 dB",
        "bandlimited" => "four bandlimited sources (nu = 0.1), L=40, SNR -10..30 dB",
        "wideband" => "four quadratic sources, 5 dB, F = 1, 3, 5, 7 bands",
        "timing" => "runtime versus L = 5..50 for every algorithm",
        _ => "",
    }
}

fn fixed(params: &[&[f64]]) -> Vec<SourceSpec> {
    params
        .iter()
        .map(|p| SourceSpec {
            params: Some(p.to_vec()),
            ..Default::default()
        })
        .collect()
}

fn linear_base(experiment: &str) -> ScenarioConfig {
    ScenarioConfig {
        experiment: experiment.into(),
        trials: 100,
        base_seed: 1,
        algorithms: Algorithm::ALL.to_vec(),
        snr_db: 5.0,
        snapshots: 30,
        frequencies: FrequencySpec::default(),
        detection_threshold: 5.0,
        peak_excess: 2,
        array: ArraySection {
            sensors: 10,
            spacing: 0.5,
            propagation_speed: SPEED_OF_SOUND,
        },
        model: ModelSection {
            kind: ModelKind::Polynomial,
            order: 1,
            nu: None,
        },
        grid: GridSection {
            phi: [-85.0, 2.0, 85.0],
            coeffs: [-5.0, 0.5, 5.0],
        },
        sources: fixed(&[&[-11.0, 3.5], &[20.0, 1.5], &[61.0, -2.25], &[-52.0, -4.75]]),
        ospa: OspaSection::default(),
        sweep: None,
    }
}

fn range(start: f64, step: f64, stop: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|i| start + step * i as f64).collect()
}

fn sweep(kind: SweepKind, values: Vec<f64>) -> Option<SweepSection> {
    Some(SweepSection {
        kind,
        values,
        frequency_sets: Vec::new(),
    })
}

const QUADRATIC: [&[f64]; 4] = [&[-60.0, 1.0, -3.0], &[-31.0, 0.4, 3.6], &[20.0, -3.0, 2.0], &[51.0, 4.0, -0.2]];

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    let cfg = match name {
        "snr" => ScenarioConfig {
            sweep: sweep(SweepKind::SnrDb, range(-10.0, 5.0, 30.0)),
            ..linear_base(name)
        },
        "snapshots" => ScenarioConfig {
            sweep: sweep(SweepKind::Snapshots, range(5.0, 5.0, 50.0)),
            ..linear_base(name)
        },
        "grid-step" => {
            let place = |fraction: f64, half_step_offset: bool, alpha: f64| SourceSpec {
                phi_fraction: Some(fraction),
                half_step_offset,
                coeffs: Some(vec![alpha]),
                ..Default::default()
            };
            ScenarioConfig {
                sources: vec![
                    place(0.2, false, 3.5),
                    place(0.45, true, 1.5),
                    place(0.65, false, -2.5),
                    place(0.9, true, -4.75),
                ],
                sweep: sweep(SweepKind::PhiStep, range(1.0, 1.0, 10.0)),
                ..linear_base(name)
            }
        }
        "resolution" => {
            let mut sources = fixed(&[&[0.0, 3.5], &[60.0, -4.5]]);
            sources.push(SourceSpec {
                phi_from_sweep: true,
                coeffs: Some(vec![2.5]),
                ..Default::default()
            });
            ScenarioConfig {
                sources,
                sweep: sweep(SweepKind::Zeta, range(-15.0, 1.0, 15.0)),
                ..linear_base(name)
            }
        }
        "nonlinear" => ScenarioConfig {
            algorithms: vec![Algorithm::Cbf, Algorithm::Omp, Algorithm::Sfw, Algorithm::Nomp],
            model: ModelSection {
                kind: ModelKind::Polynomial,
                order: 2,
                nu: None,
            },
            sources: fixed(&QUADRATIC),
            sweep: sweep(SweepKind::SnrDb, range(-10.0, 5.0, 30.0)),
            ..linear_base(name)
        },
        "bandlimited" => ScenarioConfig {
            algorithms: vec![Algorithm::Cbf, Algorithm::Omp, Algorithm::Sfw, Algorithm::Nomp],
            snapshots: 40,
            model: ModelSection {
                kind: ModelKind::Bandlimited,
                order: 1,
                nu: Some(0.1),
            },
            sources: fixed(&[&[-60.0, -3.2, -4.6], &[-19.0, 0.8, 3.0], &[24.0, -1.5, -3.7], &[61.0, 4.3, 4.0]]),
            sweep: sweep(SweepKind::SnrDb, range(-10.0, 5.0, 30.0)),
            ..linear_base(name)
        },
        "wideband" => ScenarioConfig {
            algorithms: vec![Algorithm::Cbf, Algorithm::Omp, Algorithm::Sfw, Algorithm::Nomp],
            model: ModelSection {
                kind: ModelKind::Polynomial,
                order: 2,
                nu: None,
            },
            sources: fixed(&QUADRATIC),
            sweep: Some(SweepSection {
                kind: SweepKind::Frequencies,
                values: Vec::new(),
                frequency_sets: vec![
                    vec![1600.0],
                    vec![1400.0, 1600.0, 1800.0],
                    vec![1000.0, 1200.0, 1400.0, 1600.0, 1800.0],
                    vec![1000.0, 1200.0, 1400.0, 1600.0, 1800.0, 2000.0, 2200.0],
                ],
            }),
            ..linear_base(name)
        },
        "timing" => ScenarioConfig {
            trials: 10,
            sweep: sweep(SweepKind::Snapshots, range(5.0, 5.0, 50.0)),
            ..linear_base(name)
        },
        _ => return None,
    };
    Some(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use trajloc::TrajectoryParams;

    #[test]
    fn every_builtin_validates() {
        for name in NAMES {
            let cfg = builtin(name).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(cfg.experiment, name);
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn snr_axes() {
        let cfg = builtin("snr").unwrap();
        assert_eq!(cfg.sweep_values(), vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.algorithms.len(), 5);
    }

    #[test]
    fn grid_step_two_has_two_half_step_offsets() {
        let cfg = builtin("grid-step").unwrap();
        let s = cfg.setting(2.0).unwrap();
        let expected = [(-53.0, 3.5), (-10.0, 1.5), (23.0, -2.5), (68.0, -4.75)];
        for (p, (phi, a)) in s.sources.iter().zip(expected) {
            assert_eq!(*p, TrajectoryParams::linear(phi, a));
        }
        let grid_phi = s.grid.axes()[0].values();
        let off = s.sources.iter().filter(|p| !grid_phi.contains(&p.phi)).count();
        assert_eq!(off, 2);
        for p in &s.sources {
            let nearest = grid_phi.iter().map(|g| (g - p.phi).abs()).fold(f64::INFINITY, f64::min);
            assert!(nearest == 0.0 || nearest == 1.0);
        }
    }

    #[test]
    fn wideband_sets() {
        let cfg = builtin("wideband").unwrap();
        let sizes: Vec<f64> = cfg.sweep_values().iter().map(|&v| cfg.setting(v).unwrap().sweep_value).collect();
        assert_eq!(sizes, vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(cfg.setting(1.0).unwrap().frequencies.len(), 3);
    }
}
