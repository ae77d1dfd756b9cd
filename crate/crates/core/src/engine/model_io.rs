//! Model files: a text header followed by little-endian `f64` blocks.
//!
//! ```text
//! RFMMODEL/1
//! kind = "fourier-burgers"
//! m = 1024
//! lambda = 0.0
//! parameter_len = 1048576
//! ...
//! [train_grid]
//! [hyperparameters]
//! ---
//! <parameter_len f64: feature parameters> <m f64: coefficients>
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FeatureFamily, SolveMethod, TrainedModel, TrainingInfo};
use crate::field::{Boundary, Grid};
use crate::{burgers, darcy, kernel_lab, Error, Result};

const MAGIC: &str = "RFMMODEL/1";
const SEPARATOR: &str = "---";

#[derive(Debug, Serialize, Deserialize)]
struct GridRecord {
    dim: usize,
    points: usize,
    boundary: Boundary,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: String,
    m: usize,
    lambda: f64,
    n: usize,
    method: SolveMethod,
    rank: usize,
    residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    parameter_len: usize,
    train_grid: GridRecord,
    hyperparameters: toml::Table,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

/// Rebuilds a built-in feature family from its serialized form.
pub fn family_from_parts(kind: &str, hyperparameters: &toml::Table, parameters: Vec<f64>) -> Result<FeatureFamily> {
    match kind {
        burgers::FOURIER_KIND => Ok(FeatureFamily::new(burgers::FourierFeatures::from_parts(
            hyperparameters,
            parameters,
        )?)),
        darcy::PREDICTOR_CORRECTOR_KIND => Ok(FeatureFamily::new(
            darcy::PredictorCorrectorFeatures::from_parts(hyperparameters, parameters)?,
        )),
        kernel_lab::BROWNIAN_BRIDGE_KIND => Ok(FeatureFamily::new(
            kernel_lab::BrownianBridgeFeatures::from_parts(hyperparameters, parameters)?,
        )),
        other => Err(Error::Unsupported(format!("cannot load features of kind {other:?}"))),
    }
}

impl TrainedModel {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let map = self.family().map();
        let params = map.parameter_block()?;
        let g = self.train_grid();
        let header = Header {
            kind: self.family().kind().to_string(),
            m: self.m(),
            lambda: self.ridge(),
            n: self.info.n,
            method: self.info.method,
            rank: self.info.rank,
            residual: self.info.residual,
            seed: self.info.seed,
            parameter_len: params.len(),
            train_grid: GridRecord {
                dim: g.dim(),
                points: g.points(),
                boundary: g.boundary(),
            },
            hyperparameters: map.hyperparameters()?,
            meta: self.info.meta.clone(),
        };
        let text = toml::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{MAGIC}")?;
        w.write_all(text.as_bytes())?;
        writeln!(w, "{SEPARATOR}")?;
        let mut buf = Vec::with_capacity(8 * (params.len() + self.m()));
        for v in params.iter().chain(self.coeffs()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim_end() != MAGIC {
            return Err(Error::Format(format!("bad magic line {:?}", line.trim_end())));
        }
        let mut text = String::new();
        loop {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Format("header not terminated".into()));
            }
            if line.trim_end() == SEPARATOR {
                break;
            }
            text.push_str(&line);
        }
        let h: Header = toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * (h.parameter_len + h.m) {
            return Err(Error::Format(format!(
                "expected {} data bytes, found {}",
                8 * (h.parameter_len + h.m),
                bytes.len()
            )));
        }
        let mut values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let coeffs = values.split_off(h.parameter_len);
        let family = family_from_parts(&h.kind, &h.hyperparameters, values)?;
        if family.count() != h.m {
            return Err(Error::Format(format!(
                "header says m = {} but the parameters describe {} features",
                h.m,
                family.count()
            )));
        }
        let grid = Grid::new(h.train_grid.dim, h.train_grid.points, h.train_grid.boundary)?;
        let info = TrainingInfo {
            n: h.n,
            method: h.method,
            rank: h.rank,
            residual: h.residual,
            seed: h.seed,
            meta: h.meta,
        };
        TrainedModel::from_parts(family, coeffs, h.lambda, grid, info)
    }
}

/// Reads a table entry as `f64`, accepting integers.
pub(crate) fn get_f64(t: &toml::Table, key: &str) -> Result<f64> {
    match t.get(key) {
        Some(toml::Value::Float(v)) => Ok(*v),
        Some(toml::Value::Integer(v)) => Ok(*v as f64),
        _ => Err(Error::Format(format!("missing or non-numeric hyperparameter {key:?}"))),
    }
}

pub(crate) fn get_usize(t: &toml::Table, key: &str) -> Result<usize> {
    match t.get(key) {
        Some(toml::Value::Integer(v)) if *v >= 0 => Ok(*v as usize),
        _ => Err(Error::Format(format!("missing or invalid integer hyperparameter {key:?}"))),
    }
}
