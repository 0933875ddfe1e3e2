use std::io::Write;

use sha2::{Digest, Sha256};

use crate::config::{emit_config, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(_) => None,
        }
    }
}

/// A grid point that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct RowError {
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: &'static str,
}

impl Provenance {
    pub fn of(cfg: &RunConfig) -> Self {
        Provenance {
            config_hash: hex::encode(Sha256::digest(emit_config(cfg).as_bytes())),
            seed: cfg.run.seed,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    /// Column labels with unit annotations, e.g. `delta_vt[V]`
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub errors: Vec<RowError>,
    /// Validation checks that missed their tolerance
    pub failed_checks: usize,
    pub provenance: Provenance,
}

impl ResultTable {
    pub fn new(columns: Vec<String>, provenance: Provenance) -> Self {
        ResultTable {
            columns,
            rows: Vec::new(),
            errors: Vec::new(),
            failed_checks: 0,
            provenance,
        }
    }

    /// True when every row evaluated and every check passed.
    pub fn succeeded(&self) -> bool {
        self.errors.is_empty() && self.failed_checks == 0
    }

    pub fn column(&self, name: &str) -> Option<Vec<&Cell>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| &r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> anyhow::Result<()> {
        {
            let mut writer = csv::Writer::from_writer(&mut out);
            writer.write_record(&self.columns)?;
            for row in &self.rows {
                writer.write_record(row.iter().map(Cell::render))?;
            }
            writer.flush()?;
        }
        writeln!(out, "# config_sha256={}", self.provenance.config_hash)?;
        writeln!(out, "# seed={}", self.provenance.seed)?;
        writeln!(out, "# version={}", self.provenance.version)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}
