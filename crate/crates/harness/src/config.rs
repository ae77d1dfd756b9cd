//! Experiment configuration files.
//!
//! One TOML file describes one experiment. Any field can be overridden from
//! the command line with `--set section.key=value`, where the value is parsed
//! as a TOML value and falls back to a plain string.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rfm_core::burgers::{BurgersDataSpec, FourierFeatureSpec};
use rfm_core::darcy::{DarcyDataSpec, PredictorCorrectorSpec};
use rfm_core::field::{Boundary, Grid};
use rfm_core::kernel_lab::DEFAULT_MODES;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Burgers,
    Darcy,
    BrownianBridge,
}

impl Problem {
    /// Grid with `points` nodes per axis on this problem's domain.
    pub fn grid(self, points: usize) -> rfm_core::Result<Grid> {
        match self {
            Problem::Burgers => Grid::periodic(points),
            Problem::Darcy => Grid::square(points, Boundary::Dirichlet),
            Problem::BrownianBridge => Grid::line(points, Boundary::Dirichlet),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::Burgers => "burgers",
            Problem::Darcy => "darcy",
            Problem::BrownianBridge => "brownian-bridge",
        }
    }

    pub fn default_lambda(self) -> f64 {
        match self {
            Problem::Darcy => 1e-8,
            Problem::Burgers | Problem::BrownianBridge => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub train: u64,
    pub test: u64,
    pub features: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self {
            train: 1,
            test: 2,
            features: 99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub n_train: usize,
    pub n_test: usize,
    /// Resolution the data is generated at.
    pub master: usize,
    /// Additional nested resolutions written next to the master data.
    #[serde(default)]
    pub resolutions: Vec<usize>,
    /// Number of test horizons `T, 2T, ..` (Burgers only).
    #[serde(default = "one")]
    pub horizons: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub resolution: usize,
    pub m: usize,
    /// Ridge parameter; the problem default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub m_values: Vec<usize>,
    #[serde(default)]
    pub transfer: Vec<usize>,
    #[serde(default = "one")]
    pub j_max: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m_values: Vec::new(),
            transfer: Vec::new(),
            j_max: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BurgersConfig {
    pub data: BurgersDataSpec,
    pub features: FourierFeatureSpec,
}

impl Default for BurgersConfig {
    fn default() -> Self {
        Self {
            data: BurgersDataSpec::defaults(1.0),
            features: FourierFeatureSpec::burgers_defaults(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarcyConfig {
    pub data: DarcyDataSpec,
    pub features: PredictorCorrectorSpec,
}

impl Default for DarcyConfig {
    fn default() -> Self {
        Self {
            data: DarcyDataSpec::default(),
            features: PredictorCorrectorSpec::darcy_defaults(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrownianBridgeConfig {
    /// Sine modes per feature path.
    pub modes: usize,
}

impl Default for BrownianBridgeConfig {
    fn default() -> Self {
        Self { modes: DEFAULT_MODES }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub problem: Problem,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seeds: Seeds,
    pub data: DataConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub burgers: BurgersConfig,
    #[serde(default)]
    pub darcy: DarcyConfig,
    #[serde(default)]
    pub brownian_bridge: BrownianBridgeConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, overrides).with_context(|| format!("in config {}", path.display()))
    }

    /// Parses a config; sections that may be omitted are filled in key by
    /// key from their defaults, so a file or override can set one nested
    /// field alone.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        #[derive(Serialize)]
        struct Defaults {
            seeds: Seeds,
            sweep: SweepConfig,
            burgers: BurgersConfig,
            darcy: DarcyConfig,
            brownian_bridge: BrownianBridgeConfig,
        }
        let mut table = toml::Table::try_from(Defaults {
            seeds: Seeds::default(),
            sweep: SweepConfig::default(),
            burgers: BurgersConfig::default(),
            darcy: DarcyConfig::default(),
            brownian_bridge: BrownianBridgeConfig::default(),
        })?;
        merge(&mut table, text.parse()?);
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let config: Self = table.try_into()?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(',') {
            bail!("experiment id must be non-empty and free of commas");
        }
        if self.data.horizons == 0 {
            bail!("data.horizons must be at least 1");
        }
        if self.train.m == 0 {
            bail!("train.m must be positive");
        }
        if let Some(l) = self.train.lambda {
            if !(l.is_finite() && l >= 0.0) {
                bail!("train.lambda must be finite and non-negative, got {l}");
            }
        }
        for &r in self.data.resolutions.iter().chain([&self.train.resolution]) {
            check_nested(self.data.master, r)?;
        }
        match self.problem {
            Problem::Burgers => {
                self.burgers.data.problem.validate()?;
                self.burgers.data.prior.validate()?;
                self.burgers.features.validate()?;
            }
            Problem::Darcy => {
                self.darcy.data.prior.validate()?;
                self.darcy.features.validate()?;
            }
            Problem::BrownianBridge => {
                if self.brownian_bridge.modes == 0 {
                    bail!("brownian_bridge.modes must be positive");
                }
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> f64 {
        self.train.lambda.unwrap_or(self.problem.default_lambda())
    }

    /// Every resolution data is written at, master first.
    pub fn data_resolutions(&self) -> Vec<usize> {
        let mut out = vec![self.data.master];
        for &r in self.data.resolutions.iter().chain([&self.train.resolution]) {
            if !out.contains(&r) {
                out.push(r);
            }
        }
        out
    }

    /// Hash of everything that affects outputs; `output_dir` is excluded so
    /// a run can be moved or repeated elsewhere.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        digest(&toml::to_string(&c).expect("config serializes"))
    }

    /// Hash of the settings that determine the generated datasets.
    pub fn data_hash(&self) -> String {
        #[derive(Serialize)]
        struct DataView<'a> {
            problem: Problem,
            train_seed: u64,
            test_seed: u64,
            data: &'a DataConfig,
            burgers: Option<&'a BurgersDataSpec>,
            darcy: Option<&'a DarcyDataSpec>,
        }
        let view = DataView {
            problem: self.problem,
            train_seed: self.seeds.train,
            test_seed: self.seeds.test,
            data: &self.data,
            burgers: (self.problem == Problem::Burgers).then_some(&self.burgers.data),
            darcy: (self.problem == Problem::Darcy).then_some(&self.darcy.data),
        };
        digest(&toml::to_string(&view).expect("config serializes"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn digest(text: &str) -> String {
    let bytes = Sha256::digest(text.as_bytes());
    bytes[..8].iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Grids with `coarse` points per axis are nested in grids with `fine`
/// points when `(fine - 1) / (coarse - 1)` is an integer.
pub fn check_nested(fine: usize, coarse: usize) -> Result<()> {
    if coarse < 2 || coarse > fine || (fine - 1) % (coarse - 1) != 0 {
        bail!("resolution {coarse} is not nested in master resolution {fine}");
    }
    Ok(())
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let Some((path, raw)) = spec.split_once('=') else {
        bail!("override {spec:?} is not of the form key=value");
    };
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut node = table;
    for k in parents {
        let entry = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match entry {
            toml::Value::Table(t) => t,
            _ => bail!("override {spec:?}: {k} is not a table"),
        };
    }
    node.insert(last.to_string(), value);
    Ok(())
}
