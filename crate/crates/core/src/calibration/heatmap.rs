//! Two-dimensional current sweeps.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values on a rectangular grid; rows follow the coil axis and columns the
/// FBL axis. Missing cells are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    /// mA.
    pub fbl: Vec<f64>,
    /// mA.
    pub coil: Vec<f64>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl Heatmap {
    pub fn new(fbl: Vec<f64>, coil: Vec<f64>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let h = Heatmap { fbl, coil, values };
        h.validate()?;
        Ok(h)
    }

    /// Samples `f(fbl, coil)` on the grid.
    pub fn from_fn<F: Fn(f64, f64) -> Option<f64>>(
        fbl: Vec<f64>,
        coil: Vec<f64>,
        f: F,
    ) -> Result<Self> {
        let values = coil
            .iter()
            .map(|&c| fbl.iter().map(|&b| f(b, c)).collect())
            .collect();
        Self::new(fbl, coil, values)
    }

    pub fn rows(&self) -> usize {
        self.coil.len()
    }

    pub fn cols(&self) -> usize {
        self.fbl.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row][col]
    }

    /// Cubic convolution at fractional pixel coordinates; `None` when any of
    /// the sixteen supporting cells is missing or outside the map.
    pub fn interpolate(&self, row: f64, col: f64) -> Option<f64> {
        let (r0, c0) = (row.floor(), col.floor());
        if r0 < 1.0 || c0 < 1.0 {
            return None;
        }
        let (ri, ci) = (r0 as usize, c0 as usize);
        if ri + 2 >= self.rows() || ci + 2 >= self.cols() {
            return None;
        }
        let wr = super::synth::keys_weights(row - r0);
        let wc = super::synth::keys_weights(col - c0);
        let mut acc = 0.0;
        for (a, wa) in wr.iter().enumerate() {
            for (b, wb) in wc.iter().enumerate() {
                acc += wa * wb * self.values[ri + a - 1][ci + b - 1]?;
            }
        }
        Some(acc)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, axis) in [("fbl", &self.fbl), ("coil", &self.coil)] {
            if axis.len() < 2 {
                return Err(Error::validation(name, "axis needs at least two points"));
            }
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(name, "axis values must be finite"));
            }
            let up = axis.windows(2).all(|w| w[1] > w[0]);
            let down = axis.windows(2).all(|w| w[1] < w[0]);
            if !(up || down) {
                return Err(Error::validation(name, "axis must be strictly monotone"));
            }
        }
        if self.values.len() != self.coil.len() {
            return Err(Error::validation(
                "values",
                format!(
                    "{} rows for {} coil points",
                    self.values.len(),
                    self.coil.len()
                ),
            ));
        }
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != self.fbl.len() {
                return Err(Error::validation(
                    format!("values[{i}]"),
                    format!("{} columns for {} fbl points", row.len(), self.fbl.len()),
                ));
            }
            if row.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::validation(
                    format!("values[{i}]"),
                    "present values must be finite",
                ));
            }
        }
        Ok(())
    }

    /// Grid spacing `(fbl, coil)` in mA; errors if an axis is not uniform.
    pub fn spacing(&self) -> Result<(f64, f64)> {
        let step = |name: &str, a: &[f64]| -> Result<f64> {
            let d = (a[a.len() - 1] - a[0]) / (a.len() - 1) as f64;
            for (k, w) in a.windows(2).enumerate() {
                if ((w[1] - w[0]) - d).abs() > 1e-6 * d.abs() {
                    return Err(Error::validation(
                        name,
                        format!("axis is not uniformly spaced at index {k}"),
                    ));
                }
            }
            Ok(d)
        };
        Ok((step("fbl", &self.fbl)?, step("coil", &self.coil)?))
    }

    /// CSV grid: the header row is a corner label followed by the FBL axis;
    /// each data row starts with its coil value. Empty cells are missing.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut fbl = Vec::new();
        let mut coil = Vec::new();
        let mut values = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(crate::spectra::dataset::parse_error)?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(k + 1);
            let cell = |col: usize, s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    column: col + 1,
                    message: format!("`{s}`: {e}"),
                })
            };
            if k == 0 {
                for (c, s) in rec.iter().enumerate().skip(1) {
                    fbl.push(cell(c, s)?);
                }
                continue;
            }
            if rec.len() != fbl.len() + 1 {
                return Err(Error::Parse {
                    line,
                    column: rec.len(),
                    message: format!("expected {} cells", fbl.len() + 1),
                });
            }
            coil.push(cell(0, &rec[0])?);
            let mut row = Vec::with_capacity(fbl.len());
            for (c, s) in rec.iter().enumerate().skip(1) {
                row.push(if s.is_empty() {
                    None
                } else {
                    Some(cell(c, s)?)
                });
            }
            values.push(row);
        }
        Self::new(fbl, coil, values)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("coil_ma\\fbl_ma");
        for b in &self.fbl {
            s.push_str(&format!(",{b}"));
        }
        s.push('\n');
        for (c, row) in self.coil.iter().zip(&self.values) {
            s.push_str(&format!("{c}"));
            for v in row {
                match v {
                    Some(v) => s.push_str(&format!(",{v}")),
                    None => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_gaps() {
        let h = Heatmap::new(
            vec![0.0, 0.5, 1.0],
            vec![-1.0, 1.0],
            vec![
                vec![Some(1.0), None, Some(3.5)],
                vec![Some(-2.0), Some(0.25), Some(1e-3)],
            ],
        )
        .unwrap();
        let back = Heatmap::from_reader(h.to_csv().as_bytes()).unwrap();
        assert_eq!(back, h);
        assert_eq!(h.spacing().unwrap(), (0.5, 2.0));
    }

    #[test]
    fn rejects_ragged_and_non_monotone() {
        assert!(Heatmap::new(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![vec![Some(1.0)], vec![Some(1.0), Some(2.0)]]
        )
        .is_err());
        assert!(Heatmap::new(vec![0.0, 1.0, 0.5], vec![0.0, 1.0], vec![vec![None; 3]; 2]).is_err());
        match Heatmap::from_reader("x,0,1\n0,1,zz\n".as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
    }
}
