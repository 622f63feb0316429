//! CSV ingestion, seeded splits and the synthetic logistic generator.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{default_feature_names, Dataset, Example, Standardization};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Scalar};

/// A data row dropped during loading because a feature did not parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedRow {
    /// 1-based line number in the file (the header is line 1).
    pub line: usize,
    pub column: String,
    pub value: String,
}

/// Raw numeric content of a CSV file before standardization.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub rejected: Vec<RejectedRow>,
}

impl RawTable {
    /// Standardize with statistics fitted on this table.
    pub fn standardized<T: Scalar>(&self) -> Result<Dataset<T>> {
        let stats = Standardization::fit(&self.rows);
        self.standardized_with(&stats)
    }

    /// Use the raw values as they are.
    pub fn unscaled<T: Scalar>(&self) -> Result<Dataset<T>> {
        let examples = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(row, &label)| Example::new(row.iter().copied().map(T::lit).collect(), label))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(self.feature_names.clone(), examples)
    }

    /// Standardize with externally supplied statistics, e.g. from a model file.
    pub fn standardized_with<T: Scalar>(&self, stats: &Standardization) -> Result<Dataset<T>> {
        if stats.dim() != self.feature_names.len() {
            return Err(Error::DimensionMismatch {
                expected: stats.dim(),
                actual: self.feature_names.len(),
            });
        }
        let examples = self
            .rows
            .iter()
            .zip(&self.labels)
            .map(|(row, &label)| {
                let features = stats.apply(row).into_iter().map(T::lit).collect();
                Example::new(features, label)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset::new(self.feature_names.clone(), examples)?.with_standardization(stats.clone()))
    }
}

fn parse_label(raw: &str) -> Option<u8> {
    let v: f64 = raw.trim().parse().ok()?;
    if v == 0.0 {
        Some(0)
    } else if v == 1.0 {
        Some(1)
    } else {
        None
    }
}

/// Read a headered CSV into raw rows.
///
/// `feature_columns = None` selects every column except the label. Rows whose
/// features do not parse are skipped and listed in `rejected`; a label that is
/// not 0/1 fails the whole load.
pub fn read_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    feature_columns: Option<&[String]>,
) -> Result<RawTable> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_err)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let position = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let label_idx = position(label_column)?;
    let feature_names: Vec<String> = match feature_columns {
        Some(cols) => cols.to_vec(),
        None => headers
            .iter()
            .filter(|h| h.as_str() != label_column)
            .cloned()
            .collect(),
    };
    let feature_idx = feature_names
        .iter()
        .map(|n| position(n))
        .collect::<Result<Vec<_>>>()?;

    let mut table = RawTable {
        feature_names,
        rows: Vec::new(),
        labels: Vec::new(),
        rejected: Vec::new(),
    };
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = i + 2;
        let label_raw = record.get(label_idx).unwrap_or("");
        let label = parse_label(label_raw).ok_or_else(|| Error::NonBinaryLabel {
            path: path.to_path_buf(),
            row: line,
            value: label_raw.to_string(),
        })?;
        let mut row = Vec::with_capacity(feature_idx.len());
        let mut rejected = None;
        for (&idx, name) in feature_idx.iter().zip(&table.feature_names) {
            let raw = record.get(idx).unwrap_or("");
            match raw.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    rejected = Some(RejectedRow {
                        line,
                        column: name.clone(),
                        value: raw.to_string(),
                    });
                    break;
                }
            }
        }
        match rejected {
            Some(r) => table.rejected.push(r),
            None => {
                table.rows.push(row);
                table.labels.push(label);
            }
        }
    }
    if table.rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(table)
}

/// Load and standardize a CSV dataset (zero mean, unit variance per feature).
pub fn load_csv<T: Scalar>(
    path: impl AsRef<Path>,
    label_column: &str,
    feature_columns: Option<&[String]>,
) -> Result<Dataset<T>> {
    read_csv(path, label_column, feature_columns)?.standardized()
}

/// Write a dataset as CSV with its feature names and a trailing `label` column.
pub fn write_csv<T: Scalar>(data: &Dataset<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    let mut header: Vec<String> = data.feature_names().to_vec();
    header.push("label".into());
    writer.write_record(&header).map_err(csv_err)?;
    for ex in data.examples() {
        let mut rec: Vec<String> = ex.features.iter().map(|v| v.to_f64_lossy().to_string()).collect();
        rec.push(ex.label.to_string());
        writer.write_record(&rec).map_err(csv_err)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Weight scale of the default generator.
pub const DEFAULT_WEIGHT_SCALE: f64 = 0.5;

/// Parameters of the synthetic logistic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub dimensionality: usize,
    pub true_weights: Vec<f64>,
    pub noise_rate: f64,
    pub size: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Ground truth `w_i = scale * s_i * (1 - i/(2d))` with alternating sign `s_i`:
    /// every feature carries signal, with a gently decaying magnitude.
    pub fn graded_weights(dimensionality: usize, scale: f64) -> Vec<f64> {
        let d = dimensionality as f64;
        (0..dimensionality)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * scale * (1.0 - i as f64 / (2.0 * d))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensionality == 0 {
            return Err(Error::InvalidConfig("dimensionality must be at least 1".into()));
        }
        if self.true_weights.len() != self.dimensionality {
            return Err(Error::InvalidConfig(format!(
                "true_weights has {} entries for dimensionality {}",
                self.true_weights.len(),
                self.dimensionality
            )));
        }
        if !(0.0..0.5).contains(&self.noise_rate) {
            return Err(Error::InvalidConfig(format!(
                "noise_rate {} outside [0, 0.5)",
                self.noise_rate
            )));
        }
        if self.size == 0 {
            return Err(Error::InvalidConfig("size must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for SyntheticSpec {
    /// 20 features, 20% label noise, 8000 rows: room for 200 + 5000 training
    /// draws next to a 25% held-out split.
    fn default() -> Self {
        Self {
            dimensionality: 20,
            true_weights: Self::graded_weights(20, DEFAULT_WEIGHT_SCALE),
            noise_rate: 0.2,
            size: 8000,
            seed: 0,
        }
    }
}

/// Draw `x ~ N(0, I)`, `y = 1[sigmoid(w . x) > u]` with `u ~ U(0, 1)`, then flip
/// each label with probability `noise_rate`.
///
/// Every example consumes the same random draws whatever the noise rate, so two
/// specs differing only in `noise_rate` share features and pre-flip labels.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let examples = (0..spec.size)
        .map(|_| {
            let x: Vec<f64> = (0..spec.dimensionality)
                .map(|_| rng.sample(StandardNormal))
                .collect();
            let z: f64 = x.iter().zip(&spec.true_weights).map(|(a, w)| a * w).sum();
            let u: f64 = rng.random();
            let flip: f64 = rng.random();
            let mut label = u8::from(sigmoid(z) > u);
            if flip < spec.noise_rate {
                label = 1 - label;
            }
            Example::new(x.into_iter().map(T::lit).collect(), label)
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(default_feature_names(spec.dimensionality), examples)
}

/// Size of one partition of a split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Portion {
    Count(usize),
    /// Fraction of the whole source, rounded at cumulative boundaries.
    Fraction(f64),
    /// Whatever the other portions leave over. At most one per split.
    Rest,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub portions: Vec<Portion>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(portions: Vec<Portion>, seed: u64) -> Self {
        Self { portions, seed }
    }

    fn sizes(&self, available: usize) -> Result<Vec<usize>> {
        if self.portions.iter().filter(|p| **p == Portion::Rest).count() > 1 {
            return Err(Error::InvalidConfig("at most one `rest` portion per split".into()));
        }
        let n = available as f64;
        let mut cumulative = 0.0;
        let mut sizes = Vec::with_capacity(self.portions.len());
        for portion in &self.portions {
            sizes.push(match *portion {
                Portion::Count(c) => c,
                Portion::Fraction(f) => {
                    if !(0.0..=1.0).contains(&f) {
                        return Err(Error::InvalidConfig(format!("fraction {f} outside [0, 1]")));
                    }
                    let lo = (cumulative * n).round() as usize;
                    cumulative += f;
                    ((cumulative * n).round() as usize).saturating_sub(lo)
                }
                Portion::Rest => 0,
            });
        }
        let requested: usize = sizes.iter().sum();
        if requested > available {
            return Err(Error::InfeasibleSplit {
                requested,
                available,
            });
        }
        if let Some(i) = self.portions.iter().position(|p| *p == Portion::Rest) {
            sizes[i] = available - requested;
        }
        Ok(sizes)
    }
}

/// Seeded shuffle of `0..n` cut into contiguous slices.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<Vec<Vec<usize>>> {
    let sizes = spec.sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let mut start = 0;
    Ok(sizes
        .into_iter()
        .map(|len| {
            let part = order[start..start + len].to_vec();
            start += len;
            part
        })
        .collect())
}

pub fn split<T: Scalar>(data: &Dataset<T>, spec: &SplitSpec) -> Result<Vec<Dataset<T>>> {
    Ok(split_indices(data.len(), spec)?
        .iter()
        .map(|idx| data.subset(idx))
        .collect())
}
