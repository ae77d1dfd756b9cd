//! Experiment operations behind the CLI subcommands.
//!
//! Output directory layout:
//!
//! ```text
//! <output_dir>/config.toml                     resolved configuration
//! <output_dir>/data/{train,test}_r<K>_inputs.rfd
//! <output_dir>/data/{train,test}_r<K>_outputs.rfd
//! <output_dir>/data/test_r<K>_outputs_h<j>.rfd test outputs at time jT, j >= 2
//! <output_dir>/model.rfm
//! <output_dir>/results.csv
//! ```
//!
//! Every file carries the hash of the configuration that produced it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use rand::Rng;
use rfm_core::burgers::{generate_burgers, semigroup_errors, FourierFeatures};
use rfm_core::darcy::{generate_darcy, PredictorCorrectorFeatures};
use rfm_core::engine::{expected_relative_test_error, train, Dataset, FeatureFamily, TrainedModel};
use rfm_core::field::io::FieldSet;
use rfm_core::field::{Field, Grid};
use rfm_core::kernel_lab::BrownianBridgeFeatures;
use rfm_core::rng::stream;

use crate::config::{check_nested, ExperimentConfig, Problem};
use crate::table::{ResultRow, ResultTable, RowKind};

/// Test resolutions at or below this are dominated by discretization error.
pub const LOW_RESOLUTION: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

pub fn data_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("data")
}

pub fn inputs_path(cfg: &ExperimentConfig, split: Split, k: usize) -> PathBuf {
    data_dir(cfg).join(format!("{}_r{k}_inputs.rfd", split.name()))
}

/// Outputs at horizon `h` (1-based); `h = 1` is the plain output file.
pub fn outputs_path(cfg: &ExperimentConfig, split: Split, k: usize, h: usize) -> PathBuf {
    let suffix = if h == 1 { String::new() } else { format!("_h{h}") };
    data_dir(cfg).join(format!("{}_r{k}_outputs{suffix}.rfd", split.name()))
}

pub fn model_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("model.rfm")
}

pub fn table(cfg: &ExperimentConfig) -> ResultTable {
    ResultTable::new(cfg.output_dir.join("results.csv"))
}

/// Inputs and the outputs at each horizon.
struct Generated {
    inputs: Vec<Field>,
    outputs: Vec<Vec<Field>>,
}

fn generate_split(cfg: &ExperimentConfig, split: Split) -> Result<Generated> {
    let (seed, n, horizons) = match split {
        Split::Train => (cfg.seeds.train, cfg.data.n_train, 1),
        Split::Test => (cfg.seeds.test, cfg.data.n_test, cfg.data.horizons),
    };
    let grid = cfg.problem.grid(cfg.data.master)?;
    let g = match cfg.problem {
        Problem::Burgers => {
            let s = generate_burgers(&cfg.burgers.data, &grid, seed, 0, n, horizons)?;
            Generated {
                inputs: s.inputs,
                outputs: s.outputs,
            }
        }
        Problem::Darcy => {
            let d = generate_darcy(&cfg.darcy.data, &grid, seed, 0, n)?;
            Generated {
                inputs: d.inputs().to_vec(),
                outputs: vec![d.outputs().to_vec()],
            }
        }
        Problem::BrownianBridge => {
            let inputs = bridge_inputs(&grid, seed, n)?;
            let outputs = inputs.iter().map(bridge_target).collect::<rfm_core::Result<_>>()?;
            Generated {
                inputs,
                outputs: vec![outputs],
            }
        }
    };
    Ok(g)
}

/// Inputs `c + s sin(2 pi x)` with `c ~ U(0.2, 0.8)`, `s ~ U(-0.15, 0.15)`,
/// so every value lies inside the unit interval where the bridge features
/// are defined.
pub(crate) fn bridge_inputs(grid: &Grid, seed: u64, n: usize) -> rfm_core::Result<Vec<Field>> {
    (0..n)
        .map(|i| {
            let mut rng = stream(seed, i as u64);
            let (c, s) = (rng.random_range(0.2..0.8), rng.random_range(-0.15..0.15));
            Field::from_fn_1d(*grid, |x| c + s * (2.0 * std::f64::consts::PI * x).sin())
        })
        .collect()
}

/// Synthetic target `sin(3 a(x))` for the bridge instance.
pub(crate) fn bridge_target(a: &Field) -> rfm_core::Result<Field> {
    a.map(|v| (3.0 * v).sin())
}

fn write_set(cfg: &ExperimentConfig, path: &Path, grid: Grid, fields: Vec<Field>) -> Result<()> {
    FieldSet::new(grid, fields)?
        .with_meta("experiment", &cfg.id)
        .with_meta("problem", cfg.problem.name())
        .with_meta("config_hash", cfg.hash())
        .with_meta("data_hash", cfg.data_hash())
        .write(path)
        .with_context(|| format!("writing {}", path.display()))
}

fn restrict(fields: &[Field], grid: &Grid) -> rfm_core::Result<Vec<Field>> {
    fields.iter().map(|f| rfm_core::field::subsample(f, grid)).collect()
}

/// Generates the train and test splits at the master resolution and writes
/// them at every configured resolution. Returns the files written.
pub fn generate_dataset(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    for &r in &cfg.data_resolutions() {
        check_nested(cfg.data.master, r)?;
    }
    std::fs::create_dir_all(data_dir(cfg)).with_context(|| format!("creating {}", data_dir(cfg).display()))?;
    std::fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml())?;
    let mut written = Vec::new();
    for split in [Split::Train, Split::Test] {
        let start = Instant::now();
        let g = generate_split(cfg, split)?;
        log::info!(
            "generated {} {} samples in {:.1}s",
            g.inputs.len(),
            split.name(),
            start.elapsed().as_secs_f64()
        );
        for k in cfg.data_resolutions() {
            let grid = cfg.problem.grid(k)?;
            let p = inputs_path(cfg, split, k);
            write_set(cfg, &p, grid, restrict(&g.inputs, &grid)?)?;
            written.push(p);
            for (h, outs) in g.outputs.iter().enumerate() {
                let p = outputs_path(cfg, split, k, h + 1);
                write_set(cfg, &p, grid, restrict(outs, &grid)?)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

fn read_set(cfg: &ExperimentConfig, path: &Path) -> Result<FieldSet> {
    let set = FieldSet::read(path).with_context(|| format!("reading {} (run `generate` first?)", path.display()))?;
    let found = set.meta.get("data_hash").map(String::as_str).unwrap_or("<none>");
    ensure!(
        found == cfg.data_hash(),
        "{} was generated with different data settings (data hash {found}, expected {})",
        path.display(),
        cfg.data_hash()
    );
    Ok(set)
}

/// Dataset at resolution `k` whose outputs are taken at horizon `h`.
pub fn load_dataset(cfg: &ExperimentConfig, split: Split, k: usize, h: usize) -> Result<Dataset> {
    let inputs = read_set(cfg, &inputs_path(cfg, split, k))?;
    let outputs = read_set(cfg, &outputs_path(cfg, split, k, h))?;
    Ok(Dataset::new(inputs.fields, outputs.fields)?)
}

/// The first `m` features of the configured family.
pub fn sample_family(cfg: &ExperimentConfig, m: usize) -> Result<FeatureFamily> {
    let seed = cfg.seeds.features;
    Ok(match cfg.problem {
        Problem::Burgers => FeatureFamily::new(FourierFeatures::sample(&cfg.burgers.features, m, seed)?),
        Problem::Darcy => FeatureFamily::new(PredictorCorrectorFeatures::sample(&cfg.darcy.features, m, seed)?),
        Problem::BrownianBridge => FeatureFamily::new(BrownianBridgeFeatures::sample(
            m,
            cfg.brownian_bridge.modes,
            &mut stream(seed, 0),
        )?),
    })
}

fn row(cfg: &ExperimentConfig, kind: RowKind, model: &TrainedModel, k_test: usize) -> ResultRow {
    ResultRow {
        experiment: cfg.id.clone(),
        config_hash: cfg.hash(),
        kind,
        k_train: model.train_grid().points(),
        k_test,
        m: model.m(),
        n: model.info.n,
        lambda: model.ridge(),
        horizon: 1,
        error: None,
        wall_time_s: 0.0,
        note: if k_test <= LOW_RESOLUTION {
            "low-resolution".into()
        } else {
            String::new()
        },
    }
}

fn evaluate(model: &TrainedModel, test: &Dataset) -> Result<Option<f64>> {
    if test.is_empty() {
        return Ok(None);
    }
    Ok(Some(expected_relative_test_error(model, test)?))
}

fn fit(cfg: &ExperimentConfig, family: &FeatureFamily, data: &Dataset) -> Result<TrainedModel> {
    let mut model = train(family, data, cfg.lambda())?;
    model.info.seed = Some(cfg.seeds.features);
    model.info.meta.insert("experiment".into(), cfg.id.clone());
    model.info.meta.insert("config_hash".into(), cfg.hash());
    model.info.meta.insert("data_hash".into(), cfg.data_hash());
    Ok(model)
}

/// Trains at the configured resolution, saves the model and records its test
/// error at the training resolution.
pub fn run_training(cfg: &ExperimentConfig) -> Result<(PathBuf, ResultRow)> {
    let k = cfg.train.resolution;
    let start = Instant::now();
    let data = load_dataset(cfg, Split::Train, k, 1)?;
    let family = sample_family(cfg, cfg.train.m)?;
    let model = fit(cfg, &family, &data)?;
    let path = model_path(cfg);
    model.save(&path).with_context(|| format!("writing {}", path.display()))?;
    let test = load_dataset(cfg, Split::Test, k, 1)?;
    let mut r = row(cfg, RowKind::Train, &model, k);
    r.error = evaluate(&model, &test)?;
    r.wall_time_s = start.elapsed().as_secs_f64();
    table(cfg).append(std::slice::from_ref(&r))?;
    Ok((path, r))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    TrainedModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

fn eval_rows(cfg: &ExperimentConfig, model: &TrainedModel, kind: RowKind, ks: &[usize]) -> Result<Vec<ResultRow>> {
    let mut rows = Vec::new();
    for &k in ks {
        let start = Instant::now();
        let test = load_dataset(cfg, Split::Test, k, 1)?;
        let mut r = row(cfg, kind, model, k);
        r.error = evaluate(model, &test)?;
        r.wall_time_s = start.elapsed().as_secs_f64();
        rows.push(r);
    }
    table(cfg).append(&rows)?;
    Ok(rows)
}

pub fn run_eval(cfg: &ExperimentConfig, model_file: &Path, k: usize) -> Result<ResultRow> {
    let model = load_model(model_file)?;
    Ok(eval_rows(cfg, &model, RowKind::Eval, &[k])?.remove(0))
}

/// One row per test resolution; the model is never retrained.
pub fn run_mesh_transfer(cfg: &ExperimentConfig, model_file: &Path, ks: &[usize]) -> Result<Vec<ResultRow>> {
    ensure!(!ks.is_empty(), "no transfer resolutions given");
    let model = load_model(model_file)?;
    eval_rows(cfg, &model, RowKind::Transfer, ks)
}

/// Errors of the model composed `j` times against the test outputs at time
/// `jT`, for `j = 1..=j_max`.
pub fn run_semigroup_experiment(
    cfg: &ExperimentConfig,
    model_file: &Path,
    k: usize,
    j_max: usize,
) -> Result<Vec<ResultRow>> {
    ensure!(cfg.problem == Problem::Burgers, "semigroup experiments need a time-evolution problem");
    ensure!(j_max >= 1, "j_max must be at least 1");
    ensure!(
        j_max <= cfg.data.horizons,
        "test outputs exist for {} horizons, {j_max} requested",
        cfg.data.horizons
    );
    let start = Instant::now();
    let model = load_model(model_file)?;
    let inputs = read_set(cfg, &inputs_path(cfg, Split::Test, k))?.fields;
    let targets = (1..=j_max)
        .map(|h| Ok(read_set(cfg, &outputs_path(cfg, Split::Test, k, h))?.fields))
        .collect::<Result<Vec<_>>>()?;
    let errors = if inputs.is_empty() {
        vec![None; j_max]
    } else {
        semigroup_errors(&model, &inputs, &targets)?.into_iter().map(Some).collect()
    };
    let elapsed = start.elapsed().as_secs_f64();
    let rows: Vec<ResultRow> = errors
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let mut r = row(cfg, RowKind::Semigroup, &model, k);
            r.horizon = j + 1;
            r.error = e;
            r.wall_time_s = elapsed;
            r
        })
        .collect();
    let errs: Vec<f64> = errors.iter().flatten().copied().collect();
    if errs.windows(2).any(|w| w[1] < w[0]) {
        log::warn!("semigroup errors decrease with the horizon: {errs:?}");
    }
    table(cfg).append(&rows)?;
    Ok(rows)
}

/// Trains nested models on the leading `m` features of one draw.
pub fn run_sweep_m(cfg: &ExperimentConfig, m_values: &[usize]) -> Result<Vec<ResultRow>> {
    let Some(&m_max) = m_values.iter().max() else {
        bail!("no feature counts given");
    };
    ensure!(!m_values.contains(&0), "feature counts must be positive");
    let k = cfg.train.resolution;
    let data = load_dataset(cfg, Split::Train, k, 1)?;
    let test = load_dataset(cfg, Split::Test, k, 1)?;
    let family = sample_family(cfg, m_max)?;
    let mut rows = Vec::new();
    for &m in m_values {
        let start = Instant::now();
        let model = fit(cfg, &family.truncate(m)?, &data)?;
        let mut r = row(cfg, RowKind::SweepM, &model, k);
        r.error = evaluate(&model, &test)?;
        r.wall_time_s = start.elapsed().as_secs_f64();
        log::info!("m = {m}: error {:?}", r.error);
        rows.push(r);
    }
    table(cfg).append(&rows)?;
    Ok(rows)
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Checks that datasets carry the data hash of `cfg` and the model its full
/// hash. Result rows of this experiment only need a well-formed hash, since
/// runs with overridden settings append to the same table.
pub fn verify_provenance(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut push = |name: String, found: Option<&str>, expected: &str| {
        let found = found.unwrap_or("<none>");
        checks.push(Check {
            name,
            pass: found == expected,
            detail: format!("hash {found}, expected {expected}"),
        });
    };
    let dir = data_dir(cfg);
    if dir.exists() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(&dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        entries.retain(|p| p.extension().is_some_and(|e| e == "rfd"));
        entries.sort();
        for p in entries {
            let set = FieldSet::read(&p).with_context(|| format!("reading {}", p.display()))?;
            push(p.display().to_string(), set.meta.get("data_hash").map(String::as_str), &cfg.data_hash());
        }
    }
    let mp = model_path(cfg);
    if mp.exists() {
        let model = load_model(&mp)?;
        push(mp.display().to_string(), model.info.meta.get("config_hash").map(String::as_str), &cfg.hash());
    }
    let t = table(cfg);
    for (i, r) in t.read()?.iter().enumerate() {
        if r.experiment == cfg.id {
            let ok = r.config_hash.len() == 16 && r.config_hash.bytes().all(|b| b.is_ascii_hexdigit());
            let current = if r.config_hash == cfg.hash() { " (current config)" } else { "" };
            checks.push(Check {
                name: format!("{} row {}", t.path().display(), i + 1),
                pass: ok,
                detail: format!("hash {}{current}", r.config_hash),
            });
        }
    }
    Ok(checks)
}
