//! Artifact writing and reading.
//!
//! CSV files open with `# key: value` provenance lines followed by a header
//! row. Floats use the shortest representation that round-trips. JSON files
//! wrap the payload as `{"provenance": ..., "result": ...}`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub config_sha256: String,
    pub command: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: String, seed: u64) -> Self {
        Provenance {
            tool: format!("cos2phi {TOOL_VERSION}"),
            config_sha256,
            command: command.to_string(),
            seed,
        }
    }

    fn header(&self) -> String {
        format!(
            "# tool: {}\n# config_sha256: {}\n# command: {}\n# seed: {}\n",
            self.tool, self.config_sha256, self.command, self.seed
        )
    }
}

/// A cell of an output table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            // shortest round-trip digits, exponent form for extreme magnitudes; "inf" and "NaN" parse back
            Cell::Num(v) => write!(f, "{v:?}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => write!(f, "{s}"),
            Cell::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, prov: &Provenance) -> String {
        let mut s = prov.header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            for (k, c) in row.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                let _ = write!(s, "{c}");
            }
            s.push('\n');
        }
        s
    }
}

/// A CSV artifact read back: provenance, header and cells as text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub provenance: Provenance,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric column; `None` if the column is missing or a cell does not parse.
    pub fn numbers(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        self.rows.iter().map(|r| r[k].parse().ok()).collect()
    }
}

pub fn read_table(text: &str) -> Result<ParsedTable, CliError> {
    let mut fields = std::collections::BTreeMap::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, l)) = lines.peek() {
        let Some(rest) = l.strip_prefix("# ") else {
            break;
        };
        if let Some((k, v)) = rest.split_once(": ") {
            fields.insert(k.to_string(), v.to_string());
        }
        lines.next();
    }
    let field = |k: &str| {
        fields.get(k).cloned().ok_or_else(|| CliError::Parse {
            line: 1,
            column: 1,
            message: format!("missing provenance `{k}`"),
        })
    };
    let provenance = Provenance {
        tool: field("tool")?,
        config_sha256: field("config_sha256")?,
        command: field("command")?,
        seed: field("seed")?.parse().map_err(|_| CliError::Parse {
            line: 4,
            column: 9,
            message: "seed is not an integer".into(),
        })?,
    };
    let (_, header) = lines.next().ok_or_else(|| CliError::Parse {
        line: 5,
        column: 1,
        message: "missing header row".into(),
    })?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, l) in lines {
        let row: Vec<String> = l.split(',').map(str::to_string).collect();
        if row.len() != columns.len() {
            return Err(CliError::Parse {
                line: i + 1,
                column: 1,
                message: format!("expected {} cells, got {}", columns.len(), row.len()),
            });
        }
        rows.push(row);
    }
    Ok(ParsedTable {
        provenance,
        columns,
        rows,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonArtifact<T> {
    pub provenance: Provenance,
    pub result: T,
}

pub fn to_json<T: Serialize>(prov: &Provenance, result: &T) -> String {
    let mut s = serde_json::to_string_pretty(&JsonArtifact {
        provenance: prov.clone(),
        result,
    })
    .expect("artifact serializes");
    s.push('\n');
    s
}

pub fn read_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<JsonArtifact<T>, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Writes artifacts into one directory and remembers what was written.
pub struct OutDir {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trips() {
        let prov = Provenance::new("spectrum", "ab".repeat(32), 7);
        let mut t = Table::new(["x", "y", "flag", "name"]);
        t.push(vec![
            0.1.into(),
            f64::INFINITY.into(),
            true.into(),
            "dielectric".into(),
        ]);
        t.push(vec![
            (1.0 / 3.0).into(),
            1e-300.into(),
            false.into(),
            "purcell".into(),
        ]);
        let csv = t.to_csv(&prov);
        assert!(!csv.contains('\r'));
        let back = read_table(&csv).unwrap();
        assert_eq!(back.provenance, prov);
        assert_eq!(back.numbers("x").unwrap(), vec![0.1, 1.0 / 3.0]);
        assert_eq!(back.numbers("y").unwrap(), vec![f64::INFINITY, 1e-300]);
        assert_eq!(back.rows[1][3], "purcell");
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let csv = "# tool: t\n# config_sha256: h\n# command: c\n# seed: 0\na,b\n1\n";
        assert!(matches!(
            read_table(csv),
            Err(CliError::Parse { line: 6, .. })
        ));
    }
}
