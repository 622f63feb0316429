//! Curve CSV: `lambda_c,auc_h2,compatibility,seed,dataset,dissonance_kind`.
//!
//! One row per `(lambda_c, seed)`, UTF-8, LF line endings, reals printed with
//! six decimal digits.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::losses::DissonanceKind;
use crate::trainer::{SweepMetadata, SweepPoint, SweepResult};

pub const CURVE_HEADER: [&str; 6] = ["lambda_c", "auc_h2", "compatibility", "seed", "dataset", "dissonance_kind"];

pub fn write_curve<W: Write>(result: &SweepResult, out: W) -> std::result::Result<(), csv::Error> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    writer.write_record(CURVE_HEADER)?;
    let kind = result.metadata.dissonance_kind.map(|k| k.name()).unwrap_or("");
    for p in &result.points {
        writer.write_record([
            format!("{:.6}", p.lambda_c),
            format!("{:.6}", p.auc_h2),
            format!("{:.6}", p.compatibility),
            p.seed.to_string(),
            result.metadata.dataset.clone(),
            kind.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write the curve file for a non-empty sweep.
pub fn export_curve(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if result.points.is_empty() {
        return Err(Error::InvalidConfig("cannot export an empty sweep".into()));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_curve(result, std::io::BufWriter::new(file)).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_curve<R: Read>(input: R, origin: &Path) -> Result<SweepResult> {
    let malformed = |message: String| Error::Malformed {
        path: origin.to_path_buf(),
        message,
    };
    let csv_err = |source| Error::Csv {
        path: origin.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header != CURVE_HEADER {
        return Err(malformed(format!("unexpected header {header:?}")));
    }
    let mut points = Vec::new();
    let mut metadata = SweepMetadata::default();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = i + 2;
        let real = |col: usize| -> Result<f64> {
            record[col]
                .parse()
                .map_err(|_| malformed(format!("line {line}: bad {} `{}`", CURVE_HEADER[col], &record[col])))
        };
        points.push(SweepPoint {
            lambda_c: real(0)?,
            auc_h2: real(1)?,
            compatibility: real(2)?,
            seed: record[3]
                .parse()
                .map_err(|_| malformed(format!("line {line}: bad seed `{}`", &record[3])))?,
        });
        if i == 0 {
            metadata.dataset = record[4].to_string();
            metadata.dissonance_kind = match &record[5] {
                "" => None,
                k => Some(k.parse::<DissonanceKind>()?),
            };
        }
    }
    Ok(SweepResult::new(points, metadata))
}

pub fn import_curve(path: impl AsRef<Path>) -> Result<SweepResult> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_curve(std::io::BufReader::new(file), path)
}
