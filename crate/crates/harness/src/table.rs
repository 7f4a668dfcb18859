//! Long-format result rows and their CSV form.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;

/// Which seed a row belongs to; `All` marks an aggregate over the seed list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedTag {
    One(u64),
    All,
}

impl Serialize for SeedTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SeedTag::One(v) => s.serialize_u64(*v),
            SeedTag::All => s.serialize_str("all"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub seed: SeedTag,
    pub n_qubits: usize,
    pub n_a: usize,
    pub n_d: usize,
    pub depth: Option<usize>,
    /// Sweep coordinate other than depth (perturbation, ε, parameter index).
    pub x: Option<f64>,
    pub quantity: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct ResultTable {
    rows: Vec<Row>,
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows grouped by quantity name, insertion order kept within each.
    pub fn by_quantity(&self) -> BTreeMap<&str, Vec<&Row>> {
        let mut out: BTreeMap<&str, Vec<&Row>> = BTreeMap::new();
        for r in &self.rows {
            out.entry(r.quantity.as_str()).or_default().push(r);
        }
        out
    }

    pub fn values(&self, quantity: &str, seed: SeedTag) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.quantity == quantity && r.seed == seed).collect()
    }
}

/// Writes one quantity's rows, preceded by a `#` comment line carrying the
/// config hash and seed.
pub fn write_csv<W: Write>(mut out: W, header: &str, rows: &[&Row]) -> Result<()> {
    writeln!(out, "# {header}")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard error of the mean; stderr is zero for a single value.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
