//! Two-tone spectroscopy data.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the f01 uncertainty of rows used for fitting, GHz.
pub const DEFAULT_MAX_SIGMA_GHZ: f64 = 0.010;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyRow {
    pub phi_bias: f64,
    pub phi_ctrl: f64,
    #[serde(rename = "f01_ghz")]
    pub f01: f64,
    #[serde(rename = "sigma_ghz")]
    pub sigma: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectroscopyDataset {
    pub rows: Vec<SpectroscopyRow>,
}

impl SpectroscopyDataset {
    pub fn new(rows: Vec<SpectroscopyRow>) -> Result<Self> {
        let d = SpectroscopyDataset { rows };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rows.iter().enumerate() {
            if !(r.phi_bias.is_finite() && r.phi_ctrl.is_finite() && r.f01.is_finite()) {
                return Err(Error::validation(
                    format!("rows[{i}]"),
                    "flux and frequency must be finite",
                ));
            }
            if !(r.sigma.is_finite() && r.sigma > 0.0) {
                return Err(Error::validation(
                    format!("rows[{i}].sigma_ghz"),
                    format!("must be > 0, got {}", r.sigma),
                ));
            }
        }
        Ok(())
    }

    /// Reads `phi_bias,phi_ctrl,f01_ghz,sigma_ghz` CSV; lines starting with `#` are skipped.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for rec in rdr.deserialize::<SpectroscopyRow>() {
            rows.push(rec.map_err(parse_error)?);
        }
        Self::new(rows)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Rows with `sigma <= max_sigma`, and the number dropped.
    pub fn filtered(&self, max_sigma: f64) -> (SpectroscopyDataset, usize) {
        let rows: Vec<_> = self
            .rows
            .iter()
            .copied()
            .filter(|r| r.sigma <= max_sigma)
            .collect();
        let dropped = self.rows.len() - rows.len();
        (SpectroscopyDataset { rows }, dropped)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub(crate) fn parse_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    let column = match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => err.field().map(|f| f as usize + 1).unwrap_or(0),
        _ => 0,
    };
    Error::Parse {
        line,
        column,
        message: e.to_string(),
    }
}
