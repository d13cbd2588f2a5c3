//! Scenario files: TOML with every key documented in `configs/`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use trajloc::metrics::{DEFAULT_DETECTION_THRESHOLD, DEFAULT_OSPA_CUTOFF, DEFAULT_OSPA_ORDER};
use trajloc::{ArrayConfig, Frequency, GridAxis, ParamGrid, TrajectoryModel, TrajectoryParams, SPEED_OF_SOUND};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "tl-cbf")]
    Cbf,
    #[serde(rename = "tl-sbl")]
    Sbl,
    #[serde(rename = "tl-omp")]
    Omp,
    #[serde(rename = "tl-sfw")]
    Sfw,
    #[serde(rename = "tl-nomp")]
    Nomp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [Self::Cbf, Self::Sbl, Self::Omp, Self::Sfw, Self::Nomp];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cbf => "tl-cbf",
            Self::Sbl => "tl-sbl",
            Self::Omp => "tl-omp",
            Self::Sfw => "tl-sfw",
            Self::Nomp => "tl-nomp",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| HarnessError::Config(format!("unknown algorithm {s:?}")))
    }

    /// Returns a spectrum whose peaks are the estimates.
    pub fn is_spectral(self) -> bool {
        matches!(self, Self::Cbf | Self::Sbl)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub sensors: usize,
    /// Narrowband: spacing in wavelengths. Wideband: ignored in favour of
    /// half the wavelength of the highest frequency.
    #[serde(default = "half")]
    pub spacing: f64,
    #[serde(default = "speed")]
    pub propagation_speed: f64,
}

fn is_false(b: &bool) -> bool {
    !*b
}

fn half() -> f64 {
    0.5
}

fn speed() -> f64 {
    SPEED_OF_SOUND
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
pub enum ModelKind {
    Polynomial,
    Bandlimited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    pub order: usize,
    /// Bandlimited only, and required there.
    pub nu: Option<f64>,
}

impl ModelSection {
    pub fn model(&self) -> Result<TrajectoryModel, HarnessError> {
        let model = match (self.kind, self.nu) {
            (ModelKind::Polynomial, None) => TrajectoryModel::Polynomial { order: self.order },
            (ModelKind::Polynomial, Some(_)) => {
                return Err(HarnessError::Config("model.nu only applies to bandlimited models".into()))
            }
            (ModelKind::Bandlimited, Some(nu)) => TrajectoryModel::Bandlimited { order: self.order, nu },
            (ModelKind::Bandlimited, None) => {
                return Err(HarnessError::Config("bandlimited models need an explicit model.nu".into()))
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// `[start, step, stop]` for phi.
    pub phi: [f64; 3],
    /// `[start, step, stop]` shared by every coefficient axis.
    pub coeffs: [f64; 3],
}

/// One true source. Exactly one of `params`, `phi_fraction` or
/// `phi_from_sweep` fixes the initial DOA.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    /// Full parameter vector `[phi, c_1, ...]`.
    pub params: Option<Vec<f64>>,
    /// Picks the `floor(N_phi * fraction)`-th (1-based) phi grid value.
    pub phi_fraction: Option<f64>,
    /// Adds half a phi step to the grid-placed phi.
    #[serde(default, skip_serializing_if = "is_false")]
    pub half_step_offset: bool,
    /// phi equals the current sweep value.
    #[serde(default, skip_serializing_if = "is_false")]
    pub phi_from_sweep: bool,
    /// Coefficients when phi is not given in `params`.
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OspaSection {
    #[serde(default = "ospa_order")]
    pub order: f64,
    #[serde(default = "ospa_cutoff")]
    pub cutoff: f64,
}

fn ospa_order() -> f64 {
    DEFAULT_OSPA_ORDER
}

fn ospa_cutoff() -> f64 {
    DEFAULT_OSPA_CUTOFF
}

impl Default for OspaSection {
    fn default() -> Self {
        Self {
            order: DEFAULT_OSPA_ORDER,
            cutoff: DEFAULT_OSPA_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    SnrDb,
    Snapshots,
    PhiStep,
    Zeta,
    /// Index into `frequency_sets`; the reported value is the set size.
    Frequencies,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::SnrDb => "snr_db",
            Self::Snapshots => "snapshots",
            Self::PhiStep => "phi_step",
            Self::Zeta => "zeta",
            Self::Frequencies => "frequencies",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    /// Sweep values; for `frequencies`, leave empty and use `frequency_sets`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frequency_sets: Vec<Vec<f64>>,
}

/// `"narrowband"` or a list of frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrequencySpec {
    Named(String),
    Hz(Vec<f64>),
}

impl Default for FrequencySpec {
    fn default() -> Self {
        Self::Named("narrowband".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub experiment: String,
    pub trials: usize,
    pub base_seed: u64,
    pub algorithms: Vec<Algorithm>,
    pub snr_db: f64,
    pub snapshots: usize,
    #[serde(default)]
    pub frequencies: FrequencySpec,
    #[serde(default = "threshold")]
    pub detection_threshold: f64,
    #[serde(default = "excess")]
    pub peak_excess: usize,
    pub array: ArraySection,
    pub model: ModelSection,
    pub grid: GridSection,
    pub sources: Vec<SourceSpec>,
    #[serde(default)]
    pub ospa: OspaSection,
    pub sweep: Option<SweepSection>,
}

fn threshold() -> f64 {
    DEFAULT_DETECTION_THRESHOLD
}

fn excess() -> usize {
    2
}

/// Everything one trial needs at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub sweep_value: f64,
    pub snr_db: f64,
    pub snapshots: usize,
    pub frequencies: Vec<Frequency>,
    pub array: ArrayConfig,
    pub grid: ParamGrid,
    pub sources: Vec<TrajectoryParams>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    fn base_frequencies(&self) -> Result<Vec<f64>, HarnessError> {
        match &self.frequencies {
            FrequencySpec::Named(s) if s == "narrowband" => Ok(Vec::new()),
            FrequencySpec::Named(s) => Err(HarnessError::Config(format!(
                "frequencies must be \"narrowband\" or a list of Hz, got {s:?}"
            ))),
            FrequencySpec::Hz(list) if list.is_empty() => {
                Err(HarnessError::Config("frequency list is empty".into()))
            }
            FrequencySpec::Hz(list) => Ok(list.clone()),
        }
    }

    pub fn sweep_name(&self) -> &'static str {
        self.sweep.as_ref().map_or("none", |s| s.kind.name())
    }

    /// Sweep points; a scenario without a sweep has the single value 0.
    pub fn sweep_values(&self) -> Vec<f64> {
        match &self.sweep {
            None => vec![0.0],
            Some(s) if s.kind == SweepKind::Frequencies => (0..s.frequency_sets.len()).map(|i| i as f64).collect(),
            Some(s) => s.values.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg_err = |m: String| Err(HarnessError::Config(m));
        if self.trials == 0 {
            return cfg_err("trials must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return cfg_err("no algorithms selected".into());
        }
        if !(self.detection_threshold > 0.0) {
            return cfg_err("detection_threshold must be positive".into());
        }
        if let Some(s) = &self.sweep {
            let empty = match s.kind {
                SweepKind::Frequencies => s.frequency_sets.is_empty() || !s.values.is_empty(),
                _ => s.values.is_empty() || !s.frequency_sets.is_empty(),
            };
            if empty {
                return cfg_err(format!(
                    "sweep {} needs a non-empty {}",
                    s.kind.name(),
                    if s.kind == SweepKind::Frequencies { "frequency_sets (and no values)" } else { "values (and no frequency_sets)" }
                ));
            }
        }
        self.model.model()?;
        self.base_frequencies()?;
        for value in self.sweep_values() {
            let setting = self.setting(value)?;
            let wideband = setting.frequencies.iter().any(|f| matches!(f, Frequency::Hz(_)));
            if wideband && setting.frequencies.len() > 1 && self.algorithms.contains(&Algorithm::Sbl) {
                return cfg_err("tl-sbl is narrowband only".into());
            }
        }
        Ok(())
    }

    /// Resolves the scenario at one sweep value.
    pub fn setting(&self, sweep_value: f64) -> Result<Setting, HarnessError> {
        let kind = self.sweep.as_ref().map(|s| s.kind);
        let mut snr_db = self.snr_db;
        let mut snapshots = self.snapshots;
        let mut phi_axis = self.grid.phi;
        let mut hz = self.base_frequencies()?;
        let mut reported = sweep_value;
        match kind {
            Some(SweepKind::SnrDb) => snr_db = sweep_value,
            Some(SweepKind::Snapshots) => {
                if sweep_value < 1.0 || sweep_value.fract() != 0.0 {
                    return Err(HarnessError::Config(format!("invalid snapshot count {sweep_value}")));
                }
                snapshots = sweep_value as usize;
            }
            Some(SweepKind::PhiStep) => phi_axis[1] = sweep_value,
            Some(SweepKind::Frequencies) => {
                let sets = &self.sweep.as_ref().expect("kind from sweep").frequency_sets;
                hz = sets
                    .get(sweep_value as usize)
                    .ok_or_else(|| HarnessError::Config(format!("no frequency set {sweep_value}")))?
                    .clone();
                if hz.is_empty() {
                    return Err(HarnessError::Config("empty frequency set".into()));
                }
                reported = hz.len() as f64;
            }
            Some(SweepKind::Zeta) | None => {}
        }
        if snapshots == 0 {
            return Err(HarnessError::Config("snapshots must be positive".into()));
        }

        let model = self.model.model()?;
        let coeff_axes = (1..model.dim()).map(|i| {
            let [a, s, b] = self.grid.coeffs;
            GridAxis::new(format!("c{i}"), a, s, b)
        });
        let phi = GridAxis::new("phi", phi_axis[0], phi_axis[1], phi_axis[2]);
        let mut axes = vec![phi.clone()];
        axes.extend(coeff_axes);
        let grid = ParamGrid::build(axes, model)?;

        let (array, frequencies) = if hz.is_empty() {
            (
                ArrayConfig::new(self.array.sensors, self.array.spacing, self.array.propagation_speed)?,
                vec![Frequency::Narrowband],
            )
        } else {
            let fmax = hz.iter().cloned().fold(f64::MIN, f64::max);
            (
                ArrayConfig::for_max_frequency(self.array.sensors, fmax, self.array.propagation_speed)?,
                hz.iter().map(|&f| Frequency::Hz(f)).collect(),
            )
        };

        let sources = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| self.resolve_source(i, s, model, &phi, sweep_value, kind))
            .collect::<Result<Vec<_>, _>>()?;
        for s in &sources {
            s.check_in_bounds(snapshots)?;
        }
        Ok(Setting {
            sweep_value: reported,
            snr_db,
            snapshots,
            frequencies,
            array,
            grid,
            sources,
        })
    }

    fn resolve_source(
        &self,
        i: usize,
        s: &SourceSpec,
        model: TrajectoryModel,
        phi_axis: &GridAxis,
        sweep_value: f64,
        kind: Option<SweepKind>,
    ) -> Result<TrajectoryParams, HarnessError> {
        let bad = |m: &str| HarnessError::Config(format!("source {i}: {m}"));
        let chosen = [s.params.is_some(), s.phi_fraction.is_some(), s.phi_from_sweep];
        if chosen.iter().filter(|c| **c).count() != 1 {
            return Err(bad("set exactly one of params, phi_fraction, phi_from_sweep"));
        }
        if let Some(p) = &s.params {
            if s.coeffs.is_some() || s.half_step_offset {
                return Err(bad("params already fixes every parameter"));
            }
            return Ok(TrajectoryParams::from_slice(model, p)?);
        }
        let coeffs = s.coeffs.clone().ok_or_else(|| bad("coeffs required"))?;
        let phi = if let Some(fraction) = s.phi_fraction {
            let n = phi_axis.len();
            let one_based = (n as f64 * fraction).floor() as usize;
            if one_based == 0 || one_based > n {
                return Err(bad("phi_fraction selects no grid point"));
            }
            let offset = if s.half_step_offset { phi_axis.step / 2.0 } else { 0.0 };
            phi_axis.value(one_based - 1) + offset
        } else {
            if kind != Some(SweepKind::Zeta) || s.half_step_offset {
                return Err(bad("phi_from_sweep needs a zeta sweep and no offset"));
            }
            sweep_value
        };
        Ok(TrajectoryParams::new(model, phi, coeffs)?)
    }
}
