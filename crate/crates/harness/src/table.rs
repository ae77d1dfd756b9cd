//! Result tables and plot-data export.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// What produced a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    Train,
    Eval,
    Transfer,
    Semigroup,
    SweepM,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Train => "train",
            RowKind::Eval => "eval",
            RowKind::Transfer => "transfer",
            RowKind::Semigroup => "semigroup",
            RowKind::SweepM => "sweep-m",
        }
    }
}

/// One measured test error. `error` is empty when there was no test data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub config_hash: String,
    pub kind: RowKind,
    pub k_train: usize,
    pub k_test: usize,
    pub m: usize,
    pub n: usize,
    pub lambda: f64,
    /// Number of composed applications (1 except for semigroup rows).
    pub horizon: usize,
    pub error: Option<f64>,
    pub wall_time_s: f64,
    pub note: String,
}

/// Append-only CSV table of [`ResultRow`]s.
#[derive(Debug, Clone)]
pub struct ResultTable {
    path: PathBuf,
}

impl ResultTable {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends rows, writing the header first if the file is new or empty.
    pub fn append(&self, rows: &[ResultRow]) -> Result<()> {
        let fresh = std::fs::metadata(&self.path).map(|m| m.len() == 0).unwrap_or(true);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .with_context(|| format!("opening {}", self.path.display()))?;
        let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// All rows, or none when the file does not exist yet.
    pub fn read(&self) -> Result<Vec<ResultRow>> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        read_rows(&self.path)
    }
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_serialized(file, rows, &RESULT_HEADER)
}

const RESULT_HEADER: [&str; 12] = [
    "experiment",
    "config_hash",
    "kind",
    "k_train",
    "k_test",
    "m",
    "n",
    "lambda",
    "horizon",
    "error",
    "wall_time_s",
    "note",
];

/// Writes records with an explicit header, so an empty slice still
/// produces a header line.
fn write_serialized<T: Serialize>(out: impl Write, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ErrorVsK<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    k_train: usize,
    k_test: usize,
    m: usize,
    error: f64,
    note: &'a str,
}

#[derive(Debug, Serialize)]
struct ErrorVsM<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    k_train: usize,
    m: usize,
    error: f64,
    /// `c / sqrt(m)` with `c` fitted to the largest `m` of the experiment.
    reference: f64,
}

#[derive(Debug, Serialize)]
struct ErrorVsHorizon<'a> {
    experiment: &'a str,
    config_hash: &'a str,
    k_test: usize,
    horizon: usize,
    error: f64,
}

/// Writes `results.csv` plus the plot-data files `error_vs_k.csv`,
/// `error_vs_m.csv` and `error_vs_horizon.csv` into `dir`. Returns the paths
/// written.
pub fn export_results(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = |name: &str| dir.join(name);
    let mut written = Vec::new();

    write_rows(&path("results.csv"), rows)?;
    written.push(path("results.csv"));

    let vs_k: Vec<ErrorVsK> = rows
        .iter()
        .filter(|r| matches!(r.kind, RowKind::Train | RowKind::Eval | RowKind::Transfer))
        .filter_map(|r| {
            Some(ErrorVsK {
                experiment: &r.experiment,
                config_hash: &r.config_hash,
                k_train: r.k_train,
                k_test: r.k_test,
                m: r.m,
                error: r.error?,
                note: &r.note,
            })
        })
        .collect();
    let f = File::create(path("error_vs_k.csv"))?;
    write_serialized(f, &vs_k, &["experiment", "config_hash", "k_train", "k_test", "m", "error", "note"])?;
    written.push(path("error_vs_k.csv"));

    let sweep: Vec<&ResultRow> = rows
        .iter()
        .filter(|r| r.kind == RowKind::SweepM && r.error.is_some())
        .collect();
    let vs_m: Vec<ErrorVsM> = sweep
        .iter()
        .map(|r| {
            let last = sweep
                .iter()
                .filter(|s| s.experiment == r.experiment && s.config_hash == r.config_hash)
                .max_by_key(|s| s.m)
                .expect("row belongs to its own group");
            let c = last.error.expect("filtered") * (last.m as f64).sqrt();
            ErrorVsM {
                experiment: &r.experiment,
                config_hash: &r.config_hash,
                k_train: r.k_train,
                m: r.m,
                error: r.error.expect("filtered"),
                reference: c / (r.m as f64).sqrt(),
            }
        })
        .collect();
    let f = File::create(path("error_vs_m.csv"))?;
    write_serialized(f, &vs_m, &["experiment", "config_hash", "k_train", "m", "error", "reference"])?;
    written.push(path("error_vs_m.csv"));

    let vs_h: Vec<ErrorVsHorizon> = rows
        .iter()
        .filter(|r| r.kind == RowKind::Semigroup)
        .filter_map(|r| {
            Some(ErrorVsHorizon {
                experiment: &r.experiment,
                config_hash: &r.config_hash,
                k_test: r.k_test,
                horizon: r.horizon,
                error: r.error?,
            })
        })
        .collect();
    let f = File::create(path("error_vs_horizon.csv"))?;
    write_serialized(f, &vs_h, &["experiment", "config_hash", "k_test", "horizon", "error"])?;
    written.push(path("error_vs_horizon.csv"));

    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(kind: RowKind, m: usize, error: Option<f64>) -> ResultRow {
        ResultRow {
            experiment: "x".into(),
            config_hash: "abc".into(),
            kind,
            k_train: 129,
            k_test: 129,
            m,
            n: 512,
            lambda: 0.0,
            horizon: 1,
            error,
            wall_time_s: 0.25,
            note: String::new(),
        }
    }

    #[test]
    fn append_then_read_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let table = ResultTable::new(dir.path().join("r.csv"));
        assert!(table.read().unwrap().is_empty());
        let mut a = row(RowKind::Train, 8, Some(0.1 + 0.2));
        a.lambda = 1e-8;
        a.note = "with \"quotes\", and commas".into();
        let b = row(RowKind::Eval, 8, None);
        table.append(&[a.clone()]).unwrap();
        table.append(&[b.clone()]).unwrap();
        assert_eq!(table.read().unwrap(), vec![a, b]);
        let text = std::fs::read_to_string(table.path()).unwrap();
        assert_eq!(text.matches("experiment").count(), 1);
    }

    #[test]
    fn empty_export_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let files = export_results(&[], dir.path()).unwrap();
        assert_eq!(files.len(), 4);
        for f in files {
            let text = std::fs::read_to_string(&f).unwrap();
            assert_eq!(text.lines().count(), 1, "{}", f.display());
        }
        assert!(read_rows(&dir.path().join("results.csv")).unwrap().is_empty());
    }

    #[test]
    fn sweep_reference_matches_last_point() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            row(RowKind::SweepM, 256, Some(0.064)),
            row(RowKind::SweepM, 1024, Some(0.03)),
            row(RowKind::SweepM, 512, Some(0.045)),
        ];
        export_results(&rows, dir.path()).unwrap();
        let mut r = csv::Reader::from_path(dir.path().join("error_vs_m.csv")).unwrap();
        let recs: Vec<(usize, f64, f64)> = r
            .records()
            .map(|rec| {
                let rec = rec.unwrap();
                (rec[3].parse().unwrap(), rec[4].parse().unwrap(), rec[5].parse().unwrap())
            })
            .collect();
        assert_eq!(recs.len(), 3);
        for (m, e, reference) in recs {
            let expected = 0.03 * (1024.0f64 / m as f64).sqrt();
            assert!((reference - expected).abs() < 1e-15);
            if m == 1024 {
                assert_eq!(reference, e);
            }
        }
    }

    #[test]
    fn export_round_trips_rows() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            row(RowKind::Transfer, 4, Some(1.0 / 3.0)),
            row(RowKind::Semigroup, 4, Some(std::f64::consts::PI)),
            row(RowKind::Train, 4, None),
        ];
        export_results(&rows, dir.path()).unwrap();
        assert_eq!(read_rows(&dir.path().join("results.csv")).unwrap(), rows);
        let k = std::fs::read_to_string(dir.path().join("error_vs_k.csv")).unwrap();
        assert_eq!(k.lines().count(), 2);
        let h = std::fs::read_to_string(dir.path().join("error_vs_horizon.csv")).unwrap();
        assert_eq!(h.lines().count(), 2);
    }

    #[test]
    fn unwritable_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        std::fs::write(&file, "x").unwrap();
        assert!(export_results(&[], &file.join("sub")).is_err());
    }
}
