//! Result records and their CSV/JSON/manifest encodings.
//!
//! Floats are written with 17 significant digits so every value round-trips
//! bit-exactly; non-finite values become empty CSV cells and JSON `null`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{RunnerError, RunnerResult};

#[derive(Clone, Copy, Debug)]
pub struct Num(pub f64);

impl PartialEq for Num {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits() || (self.0.is_nan() && other.0.is_nan())
    }
}

impl Num {
    pub fn text(self) -> Option<String> {
        self.0.is_finite().then(|| format!("{:.16e}", self.0))
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.text() {
            Some(t) => serde_json::value::RawValue::from_string(t)
                .map_err(serde::ser::Error::custom)?
                .serialize(s),
            None => s.serialize_none(),
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Num(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN)))
    }
}

/// One scalar result. Deterministic quantities carry `stderr = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub n: usize,
    pub m: usize,
    pub quantity: String,
    pub x: Num,
    pub value: Num,
    pub stderr: Num,
    pub count: u64,
}

impl Row {
    pub fn new(n: usize, m: usize, quantity: &str, value: f64) -> Self {
        Row {
            n,
            m,
            quantity: quantity.to_string(),
            x: Num(f64::NAN),
            value: Num(value),
            stderr: Num(0.0),
            count: 1,
        }
    }

    pub fn at(mut self, x: f64) -> Self {
        self.x = Num(x);
        self
    }

    pub fn with_error(mut self, stderr: f64, count: usize) -> Self {
        self.stderr = Num(stderr);
        self.count = count as u64;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Num>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.to_string(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.iter().map(|&v| Num(v)).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().map(|r| r[c].0).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub tables: Vec<Table>,
}

impl ResultRecord {
    pub fn rows_named<'a>(&'a self, quantity: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.quantity == quantity)
    }

    pub fn scalar<'a>(&'a self, quantity: &'a str) -> Option<&'a Row> {
        self.rows_named(quantity).next()
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn rows_csv(&self) -> String {
        let mut out = String::from("experiment,n,m,quantity,x,value,stderr,count\n");
        for r in &self.rows {
            let cell = |v: Num| v.text().unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.experiment,
                r.n,
                r.m,
                r.quantity,
                cell(r.x),
                cell(r.value),
                cell(r.stderr),
                r.count
            );
        }
        out
    }

    pub fn to_json(&self) -> RunnerResult<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| RunnerError::Results(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> RunnerResult<Self> {
        serde_json::from_str(text).map_err(|e| RunnerError::Results(e.to_string()))
    }
}

pub fn table_csv(t: &Table) -> String {
    let mut out = t.columns.join(",");
    out.push('\n');
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(|v| v.text().unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical JSON encoding of the config, output location excluded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut echo = cfg.clone();
    echo.output_dir = None;
    let canonical = serde_json::to_vec(&echo).expect("config serializes to JSON");
    sha256_hex(&canonical)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    pub files: BTreeMap<String, String>,
}

fn write_file(dir: &Path, name: &str, contents: &str, files: &mut BTreeMap<String, String>) -> RunnerResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| RunnerError::io(&path, e))?;
    files.insert(name.to_string(), sha256_hex(contents.as_bytes()));
    Ok(())
}

/// Writes `results.csv`, `results.json`, one CSV per table and `manifest.json`.
pub fn write_record(record: &ResultRecord, dir: &Path) -> RunnerResult<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| RunnerError::io(dir, e))?;
    let mut files = BTreeMap::new();
    write_file(dir, "results.csv", &record.rows_csv(), &mut files)?;
    write_file(dir, "results.json", &record.to_json()?, &mut files)?;
    for t in &record.tables {
        write_file(dir, &format!("{}.csv", t.name), &table_csv(t), &mut files)?;
    }
    let manifest = Manifest {
        config_sha256: config_hash(&record.config),
        seed: record.seed,
        version: record.version.clone(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| RunnerError::Results(e.to_string()))?;
    text.push('\n');
    let path = dir.join("manifest.json");
    std::fs::write(&path, text).map_err(|e| RunnerError::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(Num(0.1).text().unwrap(), "1.0000000000000001e-1");
        assert_eq!(Num(-2.0).text().unwrap(), "-2.0000000000000000e0");
        assert_eq!(Num(f64::NAN).text(), None);
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, f64::MIN_POSITIVE] {
            let back: f64 = Num(v).text().unwrap().parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn json_number_encoding() {
        let s = serde_json::to_string(&vec![Num(0.25), Num(f64::INFINITY)]).unwrap();
        assert_eq!(s, "[2.5000000000000000e-1,null]");
        let back: Vec<Num> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Num(0.25));
        assert!(back[1].0.is_nan());
    }

    #[test]
    fn table_csv_layout() {
        let mut t = Table::new("bins", &["e", "v"]);
        t.push(&[1.0, f64::NAN]);
        assert_eq!(table_csv(&t), "e,v\n1.0000000000000000e0,\n");
        assert_eq!(t.column("e").unwrap(), vec![1.0]);
        assert!(t.column("z").is_none());
    }
}
