//! Declarative experiment configuration.
//!
//! A run is described by one TOML document plus command-line overrides
//! (overrides win). Every experiment has a complete default configuration,
//! so `qcrb <experiment>` works without a file. The resolved configuration
//! is re-serialized and hashed into the output header, making runs
//! self-describing and byte-reproducible.

use std::path::{Path, PathBuf};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use qcrb_core::interferometer::frame_to_x;
use qcrb_core::spin::Sector;
use qcrb_core::states::{
    classify_symmetry_default, coherent_spin_state, multi_sector_superposition, noon_state,
    oat_state, tact_state, twin_fock_probe, ReorientAngle, SectoredState, SymmetryTag,
};
use qcrb_core::fisher::Measurement;

use crate::error::{CliError, CliResult};

/// The experiments the runner knows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Table1,
    FisherScan,
    NoiseScan,
    GainVsN,
    BayesSim,
    Husimi,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::FisherScan => "fisher-scan",
            Experiment::NoiseScan => "noise-scan",
            Experiment::GainVsN => "gain-vs-n",
            Experiment::BayesSim => "bayes-sim",
            Experiment::Husimi => "husimi",
        }
    }

    pub fn from_name(name: &str) -> Option<Experiment> {
        Some(match name {
            "table1" => Experiment::Table1,
            "fisher-scan" => Experiment::FisherScan,
            "noise-scan" => Experiment::NoiseScan,
            "gain-vs-n" => Experiment::GainVsN,
            "bayes-sim" => Experiment::BayesSim,
            "husimi" => Experiment::Husimi,
            _ => return None,
        })
    }
}

/// `"auto"` or an explicit number.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AutoOrValue {
    Auto,
    Value(f64),
}

impl AutoOrValue {
    pub fn resolve(self, auto: f64) -> f64 {
        match self {
            AutoOrValue::Auto => auto,
            AutoOrValue::Value(v) => v,
        }
    }
}

impl Serialize for AutoOrValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            AutoOrValue::Auto => serializer.serialize_str("auto"),
            AutoOrValue::Value(v) => serializer.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for AutoOrValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Text(text) if text == "auto" => Ok(AutoOrValue::Auto),
            Raw::Text(text) => Err(D::Error::custom(format!(
                "expected \"auto\" or a number, got \"{text}\""
            ))),
            Raw::Number(v) => Ok(AutoOrValue::Value(v)),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpec {
    pub twice_j: u32,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    /// tact | oat | coherent | noon | twin-fock | multi-sector | json
    pub constructor: String,
    /// Total particle count for the single-sector constructors.
    pub n: u32,
    /// Twisting time; "auto" picks ln(2 pi N)/2N for tact and 1/sqrt(N) for oat.
    pub chi_t: AutoOrValue,
    /// Reorientation angle for oat; "auto" maximizes the transverse variance.
    pub phi: AutoOrValue,
    /// Polar/azimuth angles for the coherent constructor.
    pub polar: f64,
    pub azimuth: f64,
    /// Frame handed to the information engines: "x" converts the constructed
    /// z-frame state into the probe, "z" leaves it as built. Defaults to "x"
    /// for tact/oat and "z" for the rest.
    pub frame: Option<String>,
    /// State file for the json constructor.
    pub path: Option<PathBuf>,
    /// Sector list for the multi-sector constructor.
    #[serde(default)]
    pub sectors: Vec<SectorSpec>,
}

impl Default for StateSpec {
    fn default() -> Self {
        StateSpec {
            constructor: "tact".into(),
            n: 10,
            chi_t: AutoOrValue::Auto,
            phi: AutoOrValue::Auto,
            polar: std::f64::consts::FRAC_PI_2,
            azimuth: 0.0,
            frame: None,
            path: None,
            sectors: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    /// top | sop | pd | noisy-pd
    pub kind: String,
    pub sigma: f64,
}

impl Default for MeasurementSpec {
    fn default() -> Self {
        MeasurementSpec {
            kind: "pd".into(),
            sigma: 0.7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub points: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 181,
            lo: 0.0,
            hi: std::f64::consts::PI,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub n_list: Vec<u32>,
    pub sigma_list: Vec<f64>,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            n_list: vec![20, 60, 100, 200],
            sigma_list: vec![0.0, 0.3, 0.7, 1.5],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BayesSpec {
    pub nu: usize,
    pub sequences: usize,
    /// True phases; empty means the nine defaults k pi/20, k = 1..9.
    #[serde(default)]
    pub theta_list: Vec<f64>,
}

impl Default for BayesSpec {
    fn default() -> Self {
        BayesSpec {
            nu: 100,
            sequences: 50,
            theta_list: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiSpec {
    pub polar_points: usize,
    pub azimuth_points: usize,
    /// Interferometer rotation angle for the "rotated" stage.
    pub theta: f64,
}

impl Default for HusimiSpec {
    fn default() -> Self {
        HusimiSpec {
            polar_points: 61,
            azimuth_points: 121,
            theta: std::f64::consts::FRAC_PI_2,
        }
    }
}

fn default_seed() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the chosen subcommand.
    pub experiment: Option<String>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub state: StateSpec,
    #[serde(default)]
    pub measurement: MeasurementSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub scan: ScanSpec,
    #[serde(default)]
    pub bayes: BayesSpec,
    #[serde(default)]
    pub husimi: HusimiSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            seed: 1,
            out: None,
            state: StateSpec::default(),
            measurement: MeasurementSpec::default(),
            grid: GridSpec::default(),
            scan: ScanSpec::default(),
            bayes: BayesSpec::default(),
            husimi: HusimiSpec::default(),
        }
    }
}

impl ExperimentConfig {
    /// Baseline configuration for one experiment.
    pub fn default_for(experiment: Experiment) -> ExperimentConfig {
        let mut config = ExperimentConfig::default();
        match experiment {
            Experiment::Husimi => {
                config.state.n = 60;
            }
            Experiment::FisherScan => {
                config.measurement.kind = "top".into();
            }
            _ => {}
        }
        config
    }

    pub fn load(path: &Path) -> CliResult<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|err| CliError::Config(format!("{}: {err}", path.display())))?;
        toml::from_str(&text)
            .map_err(|err| CliError::Config(format!("{}: {err}", path.display())))
    }

    /// Validates the experiment tag and numeric ranges.
    pub fn validate(&self, experiment: Experiment) -> CliResult<()> {
        if let Some(tag) = &self.experiment {
            if tag != experiment.name() {
                return Err(CliError::Config(format!(
                    "config is for experiment \"{tag}\" but \"{}\" was requested",
                    experiment.name()
                )));
            }
        }
        if self.grid.points < 3 {
            return Err(CliError::Config("grid.points must be at least 3".into()));
        }
        if !(self.grid.lo >= 0.0
            && self.grid.hi <= std::f64::consts::PI + 1e-12
            && self.grid.lo < self.grid.hi)
        {
            return Err(CliError::Config(
                "grid bounds must satisfy 0 <= lo < hi <= pi".into(),
            ));
        }
        if self.scan.n_list.is_empty() || self.scan.sigma_list.is_empty() {
            return Err(CliError::Config("scan lists must not be empty".into()));
        }
        if self.scan.sigma_list.iter().any(|s| *s < 0.0) {
            return Err(CliError::Config("scan sigma values must be >= 0".into()));
        }
        if self.bayes.nu < 1 || self.bayes.sequences < 1 {
            return Err(CliError::Config(
                "bayes.nu and bayes.sequences must be at least 1".into(),
            ));
        }
        if self.husimi.polar_points < 2 || self.husimi.azimuth_points < 1 {
            return Err(CliError::Config("husimi lattice too small".into()));
        }
        Ok(())
    }

    /// Canonical serialized form used for the output hash. The output path
    /// is not part of the scientific configuration and is excluded, so runs
    /// differing only in destination hash identically.
    pub fn canonical_text(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        toml::to_string(&canonical).expect("config serialization cannot fail")
    }

    pub fn theta_grid(&self) -> Vec<f64> {
        let step = (self.grid.hi - self.grid.lo) / (self.grid.points - 1) as f64;
        (0..self.grid.points)
            .map(|i| self.grid.lo + step * i as f64)
            .collect()
    }

    pub fn bayes_thetas(&self) -> Vec<f64> {
        if self.bayes.theta_list.is_empty() {
            (1..=9)
                .map(|k| std::f64::consts::PI * k as f64 / 20.0)
                .collect()
        } else {
            self.bayes.theta_list.clone()
        }
    }

    pub fn measurement(&self) -> CliResult<Measurement> {
        match self.measurement.kind.as_str() {
            "top" => Ok(Measurement::Top),
            "sop" => Ok(Measurement::Sop),
            "pd" => Ok(Measurement::Pd),
            "noisy-pd" => Measurement::noisy_pd(self.measurement.sigma)
                .map_err(|err| CliError::Config(err.to_string())),
            other => Err(CliError::Config(format!(
                "unknown measurement kind \"{other}\" (expected top|sop|pd|noisy-pd)"
            ))),
        }
    }
}

/// Automatic twisting time: the near-Heisenberg choice for two-axis
/// counter-twisting and the plateau time for one-axis twisting.
pub fn auto_chi_t(constructor: &str, n: u32) -> f64 {
    match constructor {
        "oat" => 1.0 / (n as f64).sqrt(),
        _ => (2.0 * std::f64::consts::PI * n as f64).ln() / (2.0 * n as f64),
    }
}

/// Builds the state described by the spec and applies the frame choice.
pub fn resolve_state(spec: &StateSpec) -> CliResult<SectoredState> {
    let n = spec.n;
    if n < 1 {
        return Err(CliError::Config("state.n must be at least 1".into()));
    }
    let constructed = match spec.constructor.as_str() {
        "tact" => tact_state(n, spec.chi_t.resolve(auto_chi_t("tact", n))),
        "oat" => {
            let phi = match spec.phi {
                AutoOrValue::Auto => ReorientAngle::Auto,
                AutoOrValue::Value(v) => ReorientAngle::Fixed(v),
            };
            oat_state(n, spec.chi_t.resolve(auto_chi_t("oat", n)), phi)
        }
        "coherent" => Ok(coherent_spin_state(Sector::new(n), spec.polar, spec.azimuth)),
        "noon" => noon_state(n),
        "twin-fock" => twin_fock_probe(n),
        "multi-sector" => {
            if spec.sectors.is_empty() {
                return Err(CliError::Config(
                    "multi-sector constructor needs [[state.sectors]] entries".into(),
                ));
            }
            let mut parts = Vec::new();
            let mut weights = Vec::new();
            for sector in &spec.sectors {
                let dim = sector.twice_j as usize + 1;
                if sector.re.len() != dim || (!sector.im.is_empty() && sector.im.len() != dim) {
                    return Err(CliError::Config(format!(
                        "sector 2j={} expects {dim} amplitudes",
                        sector.twice_j
                    )));
                }
                let amps = (0..dim)
                    .map(|i| {
                        num_complex::Complex64::new(
                            sector.re[i],
                            sector.im.get(i).copied().unwrap_or(0.0),
                        )
                    })
                    .collect();
                parts.push((sector.twice_j, amps));
                weights.push(sector.weight);
            }
            multi_sector_superposition(parts, weights)
        }
        "json" => {
            let path = spec.path.as_ref().ok_or_else(|| {
                CliError::Config("json constructor needs state.path".into())
            })?;
            let text = std::fs::read_to_string(path)?;
            SectoredState::from_json(&text)
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown state constructor \"{other}\" \
                 (expected tact|oat|coherent|noon|twin-fock|multi-sector|json)"
            )))
        }
    }
    .map_err(|err| CliError::Config(format!("state construction: {err}")))?;

    let default_frame = match spec.constructor.as_str() {
        "tact" | "oat" => "x",
        _ => "z",
    };
    match spec.frame.as_deref().unwrap_or(default_frame) {
        "z" => Ok(constructed),
        "x" => frame_to_x(&constructed)
            .map_err(|err| CliError::Config(format!("frame conversion: {err}"))),
        other => Err(CliError::Config(format!(
            "unknown frame \"{other}\" (expected \"z\" or \"x\")"
        ))),
    }
}

/// Resolves the state and insists on a symmetric amplitude pattern.
pub fn resolve_symmetric_state(spec: &StateSpec) -> CliResult<SectoredState> {
    let state = resolve_state(spec)?;
    if classify_symmetry_default(&state).tag == SymmetryTag::Asymmetric {
        return Err(CliError::Config(
            "the configured state is asymmetric (C(j,m) != C(j,-m)); \
             this experiment requires a symmetric probe"
                .into(),
        ));
    }
    Ok(state)
}

/// FNV-1a hash of the experiment name plus the canonical configuration text.
pub fn config_hash(experiment: Experiment, config: &ExperimentConfig) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut eat = |bytes: &[u8]| {
        for &byte in bytes {
            hash ^= byte as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    eat(experiment.name().as_bytes());
    eat(b"\n");
    eat(config.canonical_text().as_bytes());
    hash
}
