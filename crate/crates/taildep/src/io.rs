//! File formats: numeric CSV ingestion, TPDM envelopes, model and
//! decomposition JSON, and region specifications.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decomp::DecompositionResult;
use crate::error::{Error, Result};
use crate::maxlin::MaxLinearModel;
use crate::regions::FailureRegion;
use crate::tpdm::{MassEstimate, TailMatrix};

/// Parsed numeric CSV: header row of column names, one observation per
/// row. Rows with any missing (empty) field are dropped and counted;
/// non-numeric content is an error.
#[derive(Debug, Clone)]
pub struct CsvData {
    pub headers: Vec<String>,
    pub data: DMatrix<f64>,
    pub dropped_rows: usize,
}

pub fn read_numeric_csv(path: &Path) -> Result<CsvData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let d = headers.len();
    if d == 0 {
        return Err(Error::Parse(format!("{}: no columns", path.display())));
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut dropped = 0usize;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if record.len() != d {
            return Err(Error::Parse(format!(
                "{}: row {} has {} fields, expected {d}",
                path.display(),
                line + 2,
                record.len()
            )));
        }
        if record.iter().any(|f| f.trim().is_empty()) {
            dropped += 1;
            continue;
        }
        for field in record.iter() {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::Parse(format!(
                    "{}: row {}: non-numeric cell {:?}",
                    path.display(),
                    line + 2,
                    field
                ))
            })?;
            rows.push(value);
        }
    }
    let n = rows.len() / d;
    Ok(CsvData {
        headers,
        data: DMatrix::from_row_slice(n, d, &rows),
        dropped_rows: dropped,
    })
}

/// Full matrix as CSV, one row per line, no header.
pub fn write_matrix_csv(path: &Path, matrix: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for i in 0..matrix.nrows() {
        let row: Vec<String> = (0..matrix.ncols())
            .map(|j| format!("{}", matrix[(i, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Headerless square matrix CSV (e.g. a TPDM stored without its envelope).
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|c| {
                c.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("{}: line {}: bad cell", path.display(), i + 1)))
            })
            .collect::<Result<_>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: empty matrix", path.display())));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("{}: ragged matrix", path.display())));
    }
    Ok(DMatrix::from_row_slice(rows.len(), cols, &rows.concat()))
}

/// Simulation output: header y0..y{d-1}, one row per draw.
pub fn write_sample_csv(path: &Path, data: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..data.ncols()).map(|j| format!("y{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..data.nrows() {
        let row: Vec<String> = (0..data.ncols())
            .map(|j| format!("{}", data[(i, j)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix".into()));
    }
    Ok(DMatrix::from_row_slice(rows.len(), cols, &rows.concat()))
}

/// TPDM JSON envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TpdmEnvelope {
    pub alpha: f64,
    pub r0: f64,
    pub quantile_level: f64,
    pub m_hat: f64,
    pub n_exc: usize,
    pub sigma: Vec<Vec<f64>>,
}

impl TpdmEnvelope {
    pub fn new(tail: &TailMatrix, mass: &MassEstimate) -> Self {
        TpdmEnvelope {
            alpha: tail.alpha(),
            r0: mass.r0,
            quantile_level: mass.quantile_level,
            m_hat: mass.m_hat,
            n_exc: mass.n_exc,
            sigma: matrix_to_rows(tail.sigma()),
        }
    }

    pub fn tail_matrix(&self) -> Result<TailMatrix> {
        Ok(TailMatrix::new_unchecked(rows_to_matrix(&self.sigma)?, self.alpha))
    }
}

/// Max-linear model file: {alpha, A row-major, d, q}.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelJson {
    pub alpha: f64,
    pub a: Vec<f64>,
    pub d: usize,
    pub q: usize,
}

impl ModelJson {
    pub fn new(model: &MaxLinearModel) -> Self {
        let a = model.coefficients();
        ModelJson {
            alpha: model.alpha(),
            a: (0..a.nrows())
                .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)])
                .collect(),
            d: a.nrows(),
            q: a.ncols(),
        }
    }

    pub fn model(&self) -> Result<MaxLinearModel> {
        if self.a.len() != self.d * self.q {
            return Err(Error::Parse(format!(
                "model file: {} coefficients for d = {}, q = {}",
                self.a.len(),
                self.d,
                self.q
            )));
        }
        MaxLinearModel::new(DMatrix::from_row_slice(self.d, self.q, &self.a), self.alpha)
    }
}

/// One decomposition: {path, A_star row-major, A, D_values, frobenius_gap,
/// exact, degenerate}. Paths are 0-based column indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub path: Vec<usize>,
    pub alpha: f64,
    pub d: usize,
    pub a_star: Vec<f64>,
    pub a: Vec<f64>,
    pub d_values: Vec<f64>,
    pub frobenius_gap: f64,
    pub exact: bool,
    pub degenerate: bool,
    pub unpeelable: bool,
}

impl DecompositionJson {
    pub fn new(r: &DecompositionResult) -> Self {
        let flat = |m: &DMatrix<f64>| -> Vec<f64> {
            (0..m.nrows())
                .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)])
                .collect()
        };
        DecompositionJson {
            path: r.path.clone(),
            alpha: r.alpha,
            d: r.a_star.nrows(),
            a_star: flat(&r.a_star),
            a: flat(&r.a),
            d_values: r.d_values.clone(),
            frobenius_gap: r.frobenius_gap,
            exact: r.exact,
            degenerate: r.degenerate,
            unpeelable: r.unpeelable,
        }
    }

    pub fn result(&self) -> Result<DecompositionResult> {
        if self.a_star.len() != self.d * self.d || self.a.len() != self.d * self.d {
            return Err(Error::Parse("decomposition file: matrix size mismatch".into()));
        }
        Ok(DecompositionResult {
            path: self.path.clone(),
            alpha: self.alpha,
            a_star: DMatrix::from_row_slice(self.d, self.d, &self.a_star),
            a: DMatrix::from_row_slice(self.d, self.d, &self.a),
            d_values: self.d_values.clone(),
            frobenius_gap: self.frobenius_gap,
            exact: self.exact,
            degenerate: self.degenerate,
            unpeelable: self.unpeelable,
        })
    }
}

/// Region file: {kind, x, v?, groups?} with kind in
/// max | min | sum | min_of_sums | max_of_sums. For max/min regions, x is
/// a scalar (equal thresholds) or an array of length d.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionSpec {
    pub kind: String,
    pub x: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Vec<usize>>>,
}

impl RegionSpec {
    fn thresholds(&self, dim: usize) -> Result<Vec<f64>> {
        match &self.x {
            serde_json::Value::Number(n) => {
                let x = n.as_f64().ok_or_else(|| Error::Parse("bad threshold".into()))?;
                Ok(vec![x; dim])
            }
            serde_json::Value::Array(items) => items
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| Error::Parse("bad threshold entry".into()))
                })
                .collect(),
            _ => Err(Error::Parse("region x must be a number or an array".into())),
        }
    }

    fn scalar(&self) -> Result<f64> {
        self.x
            .as_f64()
            .ok_or_else(|| Error::Parse("region x must be a scalar".into()))
    }

    pub fn region(&self, dim: usize) -> Result<FailureRegion> {
        let region = match self.kind.as_str() {
            "max" => FailureRegion::Max { thresholds: self.thresholds(dim)? },
            "min" => FailureRegion::Min { thresholds: self.thresholds(dim)? },
            "sum" => FailureRegion::Sum {
                weights: self
                    .v
                    .clone()
                    .ok_or_else(|| Error::Parse("sum region needs weights v".into()))?,
                threshold: self.scalar()?,
            },
            "min_of_sums" | "max_of_sums" => {
                let weights = self
                    .v
                    .clone()
                    .ok_or_else(|| Error::Parse("grouped region needs weights v".into()))?;
                let groups = self
                    .groups
                    .clone()
                    .ok_or_else(|| Error::Parse("grouped region needs groups".into()))?;
                let threshold = self.scalar()?;
                if self.kind == "min_of_sums" {
                    FailureRegion::MinOfSums { weights, groups, threshold }
                } else {
                    FailureRegion::MaxOfSums { weights, groups, threshold }
                }
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown region kind {other:?} (expected max, min, sum, min_of_sums, max_of_sums)"
                )))
            }
        };
        region.validate(dim)?;
        Ok(region)
    }

    pub fn from_region(region: &FailureRegion) -> Self {
        let num = |x: f64| serde_json::Value::from(x);
        match region {
            FailureRegion::Max { thresholds } => RegionSpec {
                kind: "max".into(),
                x: serde_json::Value::from(thresholds.clone()),
                v: None,
                groups: None,
            },
            FailureRegion::Min { thresholds } => RegionSpec {
                kind: "min".into(),
                x: serde_json::Value::from(thresholds.clone()),
                v: None,
                groups: None,
            },
            FailureRegion::Sum { weights, threshold } => RegionSpec {
                kind: "sum".into(),
                x: num(*threshold),
                v: Some(weights.clone()),
                groups: None,
            },
            FailureRegion::MinOfSums { weights, groups, threshold } => RegionSpec {
                kind: "min_of_sums".into(),
                x: num(*threshold),
                v: Some(weights.clone()),
                groups: Some(groups.clone()),
            },
            FailureRegion::MaxOfSums { weights, groups, threshold } => RegionSpec {
                kind: "max_of_sums".into(),
                x: num(*threshold),
                v: Some(weights.clone()),
                groups: Some(groups.clone()),
            },
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serialization: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}
