//! CSV artifacts. Every file starts with `# config: {json}` and a header row,
//! and is written to a temporary file in the target directory, then renamed.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::drift::{LowerBoundReport, ZetaStats};
use crate::error::{Error, Result};
use crate::partition::{PartitionEstimate, RateSeries};
use crate::spectral::SpectralField;

pub const CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRow {
    pub method: String,
    pub d: usize,
    pub s: f64,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    pub stderr: f64,
    pub nsamples: usize,
    pub seed: u64,
}

impl From<&PartitionEstimate> for PartitionRow {
    fn from(e: &PartitionEstimate) -> Self {
        PartitionRow {
            method: e.method.to_string(),
            d: e.params.d,
            s: e.params.s,
            p: e.params.p,
            k: e.params.k,
            n: e.n_cut,
            value: e.value,
            stderr: e.stderr,
            nsamples: e.nsamples,
            seed: e.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitRow {
    pub exponent: f64,
    pub slope: f64,
    pub predicted_slope: Option<f64>,
    pub rel_gap: Option<f64>,
    pub residual: f64,
}

impl From<&RateSeries> for FitRow {
    fn from(r: &RateSeries) -> Self {
        FitRow {
            exponent: r.exponent,
            slope: r.slope,
            predicted_slope: r.predicted_slope,
            rel_gap: r.rel_gap,
            residual: r.residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRow {
    pub name: String,
    pub d: usize,
    pub s: Option<f64>,
    pub p: f64,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "L")]
    pub length: Option<f64>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub value: f64,
    #[serde(rename = "gradNorm")]
    pub grad_norm: f64,
    pub iterations: usize,
    pub seed: Option<u64>,
}

/// One `(N, term)` row of a drift or ζ report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub term: String,
    pub estimate: f64,
    pub stderr: f64,
    pub nsamples: usize,
    pub seed: u64,
}

pub fn drift_rows(r: &LowerBoundReport) -> Vec<DriftRow> {
    let row = |term: &str, estimate: f64, stderr: f64| DriftRow {
        n: r.n_cut,
        term: term.into(),
        estimate,
        stderr,
        nsamples: r.samples,
        seed: r.seed,
    };
    vec![
        row("alpha", r.alpha, 0.0),
        row("main", r.main_term, 0.0),
        row("B1", r.b1, r.b1_stderr),
        row("B2", r.b2, r.b2_stderr),
        row("B3", r.b3, r.b3_stderr),
        row("total", r.total, r.total_stderr),
        row("acceptance", r.acceptance, 0.0),
    ]
}

pub fn zeta_rows(z: &ZetaStats, seed: u64) -> Vec<DriftRow> {
    let row = |term: &str, m: &crate::stats::MeanEstimate| DriftRow {
        n: z.n_cut,
        term: term.into(),
        estimate: m.mean,
        stderr: m.stderr,
        nsamples: m.count,
        seed,
    };
    vec![row("gap", &z.gap), row("kinetic", &z.kinetic)]
}

fn atomic_write(path: &Path, config: &impl Serialize, body: impl FnOnce(&mut NamedTempFile) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    let stamp = serde_json::to_string(config).map_err(|e| Error::Internal(format!("config stamp: {e}")))?;
    writeln!(tmp, "{CONFIG_PREFIX}{stamp}")?;
    body(&mut tmp)?;
    tmp.as_file_mut().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Writes serializable rows under a config stamp; needs at least one row for the header.
pub fn write_records<T: Serialize>(path: &Path, config: &impl Serialize, rows: &[T]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Precondition(format!("no rows to write to {}", path.display())));
    }
    atomic_write(path, config, |file| {
        let mut wtr = csv::Writer::from_writer(file);
        for r in rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    })
}

/// Coefficient dump: `sample,k1..kd,re,im`, one row per retained mode of each field.
pub fn write_coefficients(path: &Path, config: &impl Serialize, fields: &[SpectralField]) -> Result<()> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Precondition(format!("no fields to write to {}", path.display())))?;
    let d = first.grid().d;
    atomic_write(path, config, |file| {
        let mut wtr = csv::Writer::from_writer(file);
        let mut header = vec!["sample".to_string()];
        header.extend((1..=d).map(|a| format!("k{a}")));
        header.extend(["re".into(), "im".into()]);
        wtr.write_record(&header)?;
        for (j, field) in fields.iter().enumerate() {
            for (k, c) in field.modes().indices.iter().zip(field.coeffs()) {
                let mut rec = vec![j.to_string()];
                rec.extend(k[..d].iter().map(|v| v.to_string()));
                rec.push(c.re.to_string());
                rec.push(c.im.to_string());
                wtr.write_record(&rec)?;
            }
        }
        wtr.flush()?;
        Ok(())
    })
}

/// Config stamp of a file written by this module.
pub fn read_config(path: &Path) -> Result<serde_json::Value> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    let json = first
        .trim_end()
        .strip_prefix(CONFIG_PREFIX)
        .ok_or_else(|| Error::Config(format!("{} has no config stamp", path.display())))?;
    serde_json::from_str(json).map_err(|e| Error::Config(format!("bad config stamp: {e}")))
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let rows = rdr.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::GridSpec;
    use num_complex::Complex64;

    #[test]
    fn round_trip_with_stamp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.csv");
        let row = FitRow {
            exponent: 3.0,
            slope: 1.25e-7,
            predicted_slope: None,
            rel_gap: Some(-0.1),
            residual: 0.0,
        };
        let cfg = serde_json::json!({"command": "rate", "seed": 7});
        write_records(&path, &cfg, std::slice::from_ref(&row)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# config: {"));
        assert_eq!(text.lines().nth(1).unwrap(), "exponent,slope,predictedSlope,relGap,residual");
        assert_eq!(read_config(&path).unwrap(), cfg);
        assert_eq!(read_records::<FitRow>(&path).unwrap(), vec![row]);
        // only the target remains in the directory
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn empty_rows_and_missing_dir_fail() {
        let dir = tempfile::tempdir().unwrap();
        let rows: Vec<FitRow> = vec![];
        assert!(write_records(&dir.path().join("a.csv"), &1, &rows).is_err());
        let row = DriftRow {
            n: 1,
            term: "x".into(),
            estimate: 0.0,
            stderr: 0.0,
            nsamples: 1,
            seed: 0,
        };
        assert!(matches!(
            write_records(&dir.path().join("no/such/dir.csv"), &1, &[row]),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn coefficients_have_one_row_per_mode() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        let grid = GridSpec::torus(2, 2, 8).unwrap();
        let f = SpectralField::from_fn(grid, false, |k, _| Complex64::new(k[0] as f64, k[1] as f64));
        write_coefficients(&path, &"cfg", &[f.clone(), f.scale(2.0)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "sample,k1,k2,re,im");
        assert_eq!(lines.len(), 2 + 2 * f.len());
        assert!(write_coefficients(&path, &"cfg", &[]).is_err());
    }
}
