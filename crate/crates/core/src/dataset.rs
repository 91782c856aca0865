//! Sample points, their provenance, CSV ingestion and the noise model.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("{x} input rows but {y} targets")]
    LengthMismatch { x: usize, y: usize },
    #[error("point {row} has {got} coordinates, expected {expected}")]
    Arity { row: usize, expected: usize, got: usize },
    #[error("bad header: {0}")]
    Header(String),
    #[error("row {row} (line {line}): {message}")]
    Row { row: usize, line: u64, message: String },
    #[error("noise level must be finite and non-negative, got {0}")]
    Noise(f64),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Additive Gaussian noise `N(0, λ·σ_f²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub lambda: f64,
    pub sigma_f_sq: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Benchmark { name: String, seed: u64 },
    File { path: String },
    Inline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub provenance: Provenance,
    pub noise: Option<NoiseSpec>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, DataError> {
        Dataset::with_provenance(x, y, Provenance::Inline)
    }

    pub fn with_provenance(x: Vec<Vec<f64>>, y: Vec<f64>, provenance: Provenance) -> Result<Self, DataError> {
        if x.len() != y.len() {
            return Err(DataError::LengthMismatch { x: x.len(), y: y.len() });
        }
        if y.len() < 2 {
            return Err(DataError::TooFewPoints(y.len()));
        }
        let expected = x[0].len();
        if let Some((row, p)) = x.iter().enumerate().find(|(_, p)| p.len() != expected) {
            return Err(DataError::Arity { row: row + 1, expected, got: p.len() });
        }
        Ok(Dataset { x, y, provenance, noise: None })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Reads `x1[,x2,...],y` CSV. Row numbers in errors count data rows
    /// from 1; the line number includes the header.
    pub fn from_csv_reader<R: Read>(reader: R, provenance: Provenance) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let names: Vec<&str> = header.iter().collect();
        let d = names.len().saturating_sub(1);
        let valid = d >= 1
            && names[d] == "y"
            && names[..d].iter().enumerate().all(|(i, n)| *n == format!("x{}", i + 1));
        if !valid {
            return Err(DataError::Header(format!("expected 'x1[,x2,...],y', found '{}'", names.join(","))));
        }
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let row = i + 1;
            let record = record?;
            let line = record.position().map_or(row as u64 + 1, |p| p.line());
            let err = |message: String| DataError::Row { row, line, message };
            if record.len() != d + 1 {
                return Err(err(format!("expected {} fields, found {}", d + 1, record.len())));
            }
            let mut values = Vec::with_capacity(d + 1);
            for (field, name) in record.iter().zip(&names) {
                let v: f64 = field.parse().map_err(|_| err(format!("column {name}: '{field}' is not a number")))?;
                if !v.is_finite() {
                    return Err(err(format!("column {name}: value is not finite")));
                }
                values.push(v);
            }
            y.push(values.pop().expect("d + 1 fields"));
            x.push(values);
        }
        Dataset::with_provenance(x, y, provenance)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, DataError> {
        let file = File::open(path).map_err(|source| DataError::Io { path: path.display().to_string(), source })?;
        Dataset::from_csv_reader(file, Provenance::File { path: path.display().to_string() })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.arity()).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (p, y) in self.x.iter().zip(&self.y) {
            let mut row: Vec<String> = p.iter().map(f64::to_string).collect();
            row.push(y.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| DataError::Io { path: "<writer>".into(), source })?;
        Ok(())
    }
}

/// Sample variance with the `n - 1` denominator.
pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
}

/// Adds `ε ~ N(0, λ·σ_f²)` to every target, `σ_f²` being the sample variance
/// of the clean targets. `λ = 0` returns the dataset unchanged.
pub fn add_noise(d: &Dataset, lambda: f64, seed: u64) -> Result<Dataset, DataError> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(DataError::Noise(lambda));
    }
    if lambda == 0.0 {
        return Ok(d.clone());
    }
    let sigma_f_sq = sample_variance(&d.y);
    let normal = Normal::new(0.0, (lambda * sigma_f_sq).sqrt()).map_err(|_| DataError::Noise(lambda))?;
    let mut rng = rng::seeded(seed);
    let mut out = d.clone();
    for y in &mut out.y {
        *y += normal.sample(&mut rng);
    }
    out.noise = Some(NoiseSpec { lambda, sigma_f_sq, seed });
    Ok(out)
}
