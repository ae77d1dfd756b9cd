//! Field container files and CSV export.
//!
//! A container is a text header followed by raw little-endian `f64` data:
//!
//! ```text
//! RFMFIELDS/1
//! dim = 1
//! points_per_axis = 129
//! boundary = "periodic"
//! count = 512
//! values_per_field = 129
//!
//! [meta]
//! seed = "7"
//! ---
//! <count * values_per_field little-endian f64>
//! ```
//!
//! Periodic fields are written with the duplicate endpoint, so
//! `values_per_field` is always `points_per_axis^dim`. Reading drops it again.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Boundary, Field, Grid};
use crate::{Error, Result};

const MAGIC: &str = "RFMFIELDS/1";
const SEPARATOR: &str = "---";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    dim: usize,
    points_per_axis: usize,
    boundary: Boundary,
    count: usize,
    values_per_field: usize,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

/// Fields sharing one grid, with free-form provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSet {
    pub grid: Grid,
    pub fields: Vec<Field>,
    pub meta: BTreeMap<String, String>,
}

impl FieldSet {
    pub fn new(grid: Grid, fields: Vec<Field>) -> Result<Self> {
        for f in &fields {
            grid.ensure_same(f.grid())?;
        }
        Ok(Self {
            grid,
            fields,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.meta.insert(key.into(), value.to_string());
        self
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let header = Header {
            dim: self.grid.dim(),
            points_per_axis: self.grid.points(),
            boundary: self.grid.boundary(),
            count: self.fields.len(),
            values_per_field: self.grid.points().pow(self.grid.dim() as u32),
            meta: self.meta.clone(),
        };
        let text = toml::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(w, "{MAGIC}")?;
        w.write_all(text.as_bytes())?;
        writeln!(w, "{SEPARATOR}")?;
        let mut buf = Vec::with_capacity(8 * header.values_per_field);
        for f in &self.fields {
            buf.clear();
            for v in with_endpoint(f) {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
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
        let header: Header = toml::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        let grid = Grid::new(header.dim, header.points_per_axis, header.boundary)?;
        let per = grid.points().pow(grid.dim() as u32);
        if header.values_per_field != per {
            return Err(Error::Format(format!(
                "values_per_field = {} but the grid has {per} nodes",
                header.values_per_field
            )));
        }
        let mut bytes = vec![0u8; 8 * per];
        let mut fields = Vec::with_capacity(header.count);
        for _ in 0..header.count {
            r.read_exact(&mut bytes).map_err(|e| match e.kind() {
                std::io::ErrorKind::UnexpectedEof => Error::Format("truncated data block".into()),
                _ => Error::Io(e),
            })?;
            let mut vals: Vec<f64> = bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if grid.is_periodic() {
                vals.pop();
            }
            fields.push(Field::new(grid, vals)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after data".into()));
        }
        Ok(Self {
            grid,
            fields,
            meta: header.meta,
        })
    }

    /// Writes one field per column with leading coordinate columns.
    ///
    /// The first line is `# key = value` comments for each metadata entry.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_csv_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_to(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k} = {v}")?;
        }
        let coords: Vec<&str> = if self.grid.dim() == 1 { vec!["x"] } else { vec!["x1", "x2"] };
        let mut cols: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        cols.extend((0..self.fields.len()).map(|i| format!("field_{i}")));
        writeln!(w, "{}", cols.join(","))?;
        let columns: Vec<Vec<f64>> = self.fields.iter().map(with_endpoint).collect();
        let p = self.grid.points();
        let rows = p.pow(self.grid.dim() as u32);
        for idx in 0..rows {
            let mut line = if self.grid.dim() == 1 {
                format!("{}", self.grid.coordinate(idx))
            } else {
                format!(
                    "{},{}",
                    self.grid.coordinate(idx % p),
                    self.grid.coordinate(idx / p)
                )
            };
            for c in &columns {
                line.push(',');
                line.push_str(&c[idx].to_string());
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

fn with_endpoint(f: &Field) -> Vec<f64> {
    let mut v = f.values().to_vec();
    if f.grid().is_periodic() {
        v.push(v[0]);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> FieldSet {
        let g = Grid::periodic(17).unwrap();
        let fields = (0..3)
            .map(|k| Field::from_fn_1d(g, |x| (x * (k + 1) as f64 * 6.0).sin() / 3.0).unwrap())
            .collect();
        FieldSet::new(g, fields).unwrap().with_meta("seed", 7)
    }

    #[test]
    fn container_round_trip_is_exact() {
        let set = sample_set();
        let mut bytes = Vec::new();
        set.write_to(&mut bytes).unwrap();
        let back = FieldSet::read_from(&mut bytes.as_slice()).unwrap();
        assert_eq!(back, set);

        let g = Grid::square(9, Boundary::Neumann).unwrap();
        let f = Field::from_fn_2d(g, |x, y| x * 0.1 + y.exp()).unwrap();
        let set = FieldSet::new(g, vec![f]).unwrap();
        let mut bytes = Vec::new();
        set.write_to(&mut bytes).unwrap();
        assert_eq!(FieldSet::read_from(&mut bytes.as_slice()).unwrap(), set);
    }

    #[test]
    fn periodic_files_carry_the_duplicate_endpoint() {
        let set = sample_set();
        let mut bytes = Vec::new();
        set.write_to(&mut bytes).unwrap();
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.contains("points_per_axis = 17"));
        assert!(text.contains("values_per_field = 17"));
        let header_end = text.find("---\n").unwrap() + 4;
        assert_eq!(bytes.len() - header_end, 3 * 17 * 8);
    }

    #[test]
    fn corrupt_files_rejected() {
        let set = sample_set();
        let mut bytes = Vec::new();
        set.write_to(&mut bytes).unwrap();
        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(
            FieldSet::read_from(&mut &truncated[..]),
            Err(Error::Format(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(FieldSet::read_from(&mut bad.as_slice()).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(FieldSet::read_from(&mut long.as_slice()).is_err());
    }

    #[test]
    fn csv_has_one_column_per_field() {
        let set = sample_set();
        let mut out = Vec::new();
        set.write_csv_to(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# seed = 7");
        assert_eq!(lines[1], "x,field_0,field_1,field_2");
        assert_eq!(lines.len(), 2 + 17);
        let last: Vec<f64> = lines[18].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(last[0], 1.0);
        assert_eq!(last[1], set.fields[0].values()[0]);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bin");
        let set = sample_set();
        set.write(&path).unwrap();
        assert_eq!(FieldSet::read(&path).unwrap(), set);
    }
}
