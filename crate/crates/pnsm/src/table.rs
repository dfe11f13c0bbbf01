//! CSV files with a header row.
//!
//! Every column is numeric. `label` holds integers; `t`, `phi` and `psi` are
//! reserved for the curve parameter and angle pairs, and every other column
//! is a coordinate.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pnsm_core::{EmbeddingSpec, PointCloud};

use crate::error::{CliError, Result};

pub const RESERVED: [&str; 4] = ["t", "label", "phi", "psi"];

#[derive(Debug, Clone)]
pub struct Table {
    pub headers: Vec<String>,
    /// Raw fields, kept so filtered rows are written back verbatim.
    pub records: Vec<csv::StringRecord>,
    values: Vec<Vec<f64>>,
    labels: Option<Vec<i64>>,
    source: String,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let csv_err = |source| CliError::Csv { path: path.to_path_buf(), source };
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
        if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
            return Err(CliError::format(path, "missing header row"));
        }
        for (i, h) in headers.iter().enumerate() {
            if headers[..i].contains(h) {
                return Err(CliError::format(path, format!("duplicate column `{h}`")));
            }
        }
        let label_col = headers.iter().position(|h| h == "label");

        let mut records = Vec::new();
        let mut values = Vec::new();
        let mut labels = label_col.map(|_| Vec::new());
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            let mut row = Vec::with_capacity(headers.len());
            for (j, field) in rec.iter().enumerate() {
                if Some(j) == label_col {
                    let l = field.parse::<i64>().map_err(|_| {
                        CliError::format(path, format!("row {}: label `{field}` is not an integer", line + 1))
                    })?;
                    labels.as_mut().unwrap().push(l);
                    row.push(l as f64);
                } else {
                    let v = field.parse::<f64>().map_err(|_| {
                        CliError::format(path, format!("row {}, column `{}`: `{field}` is not a number", line + 1, headers[j]))
                    })?;
                    row.push(v);
                }
            }
            values.push(row);
            records.push(rec);
        }
        Ok(Self {
            headers,
            records,
            values,
            labels,
            source: path.display().to_string(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.position(name)?;
        Some(self.values.iter().map(|r| r[j]).collect())
    }

    pub fn coordinate_columns(&self) -> Vec<usize> {
        (0..self.headers.len())
            .filter(|&j| !RESERVED.contains(&self.headers[j].as_str()))
            .collect()
    }

    /// Rows as the embedding expects them: `(phi, psi)` pairs for sphere and
    /// torus, coordinate columns otherwise. Labels are attached when present.
    pub fn input_cloud(&self, embedding: EmbeddingSpec) -> Result<PointCloud> {
        let cols = if embedding.has_angles() {
            match (self.position("phi"), self.position("psi")) {
                (Some(a), Some(b)) => vec![a, b],
                _ => {
                    return Err(CliError::Usage(format!(
                        "{}: {} embedding needs `phi` and `psi` columns",
                        self.source,
                        embedding.name()
                    )))
                }
            }
        } else {
            self.coordinate_columns()
        };
        if cols.is_empty() {
            return Err(CliError::Usage(format!("{}: no coordinate columns", self.source)));
        }
        if let EmbeddingSpec::Euclidean { dim } = embedding {
            if dim != cols.len() {
                return Err(CliError::Usage(format!(
                    "{}: expected {dim} coordinate columns, found {}",
                    self.source,
                    cols.len()
                )));
            }
        }
        self.cloud_from(&cols)
    }

    /// Coordinate columns only, regardless of any angle columns.
    pub fn coordinates(&self) -> Result<PointCloud> {
        let cols = self.coordinate_columns();
        if cols.is_empty() {
            return Err(CliError::Usage(format!("{}: no coordinate columns", self.source)));
        }
        self.cloud_from(&cols)
    }

    fn cloud_from(&self, cols: &[usize]) -> Result<PointCloud> {
        let coords: Vec<f64> = self.values.iter().flat_map(|r| cols.iter().map(move |&j| r[j])).collect();
        let mut cloud = PointCloud::new(coords, cols.len())?.with_source(self.source.clone());
        if let Some(l) = &self.labels {
            cloud = cloud.with_labels(l.clone())?;
        }
        Ok(cloud)
    }

    /// Columns carried through to derived outputs.
    pub fn passthrough(&self) -> Vec<(String, Vec<String>)> {
        ["t", "label"]
            .iter()
            .filter_map(|name| {
                let j = self.position(name)?;
                Some((name.to_string(), self.records.iter().map(|r| r[j].to_string()).collect()))
            })
            .collect()
    }

    pub fn write_subset(&self, path: &Path, rows: &[usize]) -> Result<()> {
        let mut w = CsvOut::create(path, &self.headers)?;
        for &i in rows {
            w.raw(self.records[i].iter())?;
        }
        w.finish()
    }
}

/// Line-oriented CSV writer; floats use the shortest decimal that reads
/// back to the same value.
pub struct CsvOut {
    path: std::path::PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create<S: AsRef<str>>(path: &Path, headers: &[S]) -> Result<Self> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut inner = csv::WriterBuilder::new().from_writer(BufWriter::new(file));
        inner
            .write_record(headers.iter().map(|h| h.as_ref()))
            .map_err(|e| CliError::Csv { path: path.to_path_buf(), source: e })?;
        Ok(Self { path: path.to_path_buf(), inner })
    }

    pub fn raw<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .map_err(|e| CliError::Csv { path: self.path.clone(), source: e })
    }

    pub fn floats(&mut self, values: &[f64], extra: &[&str]) -> Result<()> {
        let fields: Vec<String> = values.iter().map(|v| fmt_f64(*v)).chain(extra.iter().map(|s| s.to_string())).collect();
        self.raw(&fields)
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| CliError::io(&self.path, e))?;
        let buf = self.inner.into_inner().map_err(|e| CliError::io(&self.path, e.into_error()))?;
        buf.into_inner()
            .map_err(|e| CliError::io(&self.path, e.into_error()))?
            .flush()
            .map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// `x1, ..., x{dim}`.
pub fn coordinate_headers(dim: usize) -> Vec<String> {
    (1..=dim).map(|i| format!("x{i}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e22, f64::MIN_POSITIVE, 123456789.123456789, -0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn reads_coordinates_and_reserved_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.csv");
        std::fs::write(&path, "x,y,t,label\n1,2,0.5,3\n4,5.5,0.25,-1\n").unwrap();
        let table = Table::read(&path).unwrap();
        assert_eq!(table.coordinate_columns(), vec![0, 1]);
        let cloud = table.input_cloud(EmbeddingSpec::Euclidean { dim: 2 }).unwrap();
        assert_eq!(cloud.point(1), &[4.0, 5.5]);
        assert_eq!(cloud.labels(), Some(&[3, -1][..]));
        assert_eq!(table.column("t").unwrap(), vec![0.5, 0.25]);
        assert!(matches!(table.input_cloud(EmbeddingSpec::Sphere2), Err(CliError::Usage(_))));
        assert!(matches!(table.input_cloud(EmbeddingSpec::Euclidean { dim: 3 }), Err(CliError::Usage(_))));
    }

    #[test]
    fn rejects_bad_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,x2\n1,oops\n").unwrap();
        let err = Table::read(&path).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        assert!(err.to_string().contains("oops"));
        let missing = Table::read(&dir.path().join("nope.csv")).unwrap_err();
        assert!(matches!(missing, CliError::Io { .. }));
    }

    #[test]
    fn subset_keeps_original_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.csv");
        std::fs::write(&path, "x1,x2\n1.50,2\n3,4\n5,6e0\n").unwrap();
        let table = Table::read(&path).unwrap();
        let out = dir.path().join("out.csv");
        table.write_subset(&out, &[0, 2]).unwrap();
        assert_eq!(std::fs::read_to_string(&out).unwrap(), "x1,x2\n1.50,2\n5,6e0\n");
    }
}
