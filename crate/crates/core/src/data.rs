//! Observational datasets: an `n x d` matrix of samples plus optional generation metadata.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::dag::{csv_error, Dag, WeightedGraph};
use crate::error::{Error, Result};

/// How a synthetic dataset was produced. Absent for data read from disk.
#[derive(Clone, Debug, Default)]
pub struct GenerationRecord {
    pub graph: Option<Dag>,
    pub weights: Option<WeightedGraph>,
    pub mechanism: Option<String>,
    pub noise: Option<String>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    x: DMatrix<f64>,
    pub meta: Option<GenerationRecord>,
}

impl Dataset {
    /// Wraps an `n x d` matrix; requires `n >= 2`, `d >= 1` and finite entries.
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() < 2 || x.ncols() < 1 {
            return Err(Error::Shape(format!(
                "dataset needs at least 2 samples and 1 variable, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { x, meta: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]))
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Result<Self> {
        let d = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|c| c.len() != n) {
            return Err(Error::Shape("columns differ in length".into()));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| cols[j][i]))
    }

    pub fn with_meta(mut self, meta: GenerationRecord) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column(&self, j: usize) -> DVector<f64> {
        self.x.column(j).into_owned()
    }

    /// Population (divide-by-n) variance of each column.
    pub fn variances(&self) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.d())
            .map(|j| {
                let col = self.x.column(j);
                let mean = col.sum() / n;
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
            })
            .collect()
    }

    /// Column-wise shift to zero mean and scale to unit population variance.
    /// Constant columns are only centered.
    pub fn standardized(&self) -> Dataset {
        let n = self.n() as f64;
        let mut x = self.x.clone();
        for mut col in x.column_iter_mut() {
            let mean = col.sum() / n;
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / n).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
        Dataset {
            x,
            meta: self.meta.clone(),
        }
    }

    /// Keeps the given columns in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> Dataset {
        let x = DMatrix::from_fn(self.n(), keep.len(), |i, j| self.x[(i, keep[j])]);
        Dataset { x, meta: None }
    }

    pub(crate) fn x_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.x
    }

    /// Reads comma-separated samples, one per row. A first row that does not parse
    /// as numbers is taken to be a header and skipped.
    pub fn read_csv<R: Read>(input: R) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(csv_error)?;
            let line = record.position().map_or(idx as u64 + 1, |p| p.line());
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(row) => {
                    if let Some(first) = rows.first() {
                        if first.len() != row.len() {
                            return Err(Error::Csv {
                                line,
                                msg: format!(
                                    "row has {} fields, expected {}",
                                    row.len(),
                                    first.len()
                                ),
                            });
                        }
                    }
                    if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
                        return Err(Error::Csv {
                            line,
                            msg: format!("non-finite value in column {}", bad + 1),
                        });
                    }
                    rows.push(row);
                }
                // non-numeric first row: header
                Err(_) if idx == 0 => {}
                Err(e) => {
                    return Err(Error::Csv {
                        line,
                        msg: format!("unparseable number: {e}"),
                    })
                }
            }
        }
        Dataset::from_rows(&rows)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
        Dataset::read_csv(std::fs::File::open(path)?)
    }

    /// Writes samples without a header using the shortest round-trip float format.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = std::io::BufWriter::new(out);
        let mut line = String::new();
        for i in 0..self.n() {
            line.clear();
            for j in 0..self.d() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{:?}", self.x[(i, j)]));
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
