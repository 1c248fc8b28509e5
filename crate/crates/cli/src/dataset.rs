//! CSV and JSON tables written by the runners, and the experimental dataset
//! format read by `compare`.
//!
//! Experimental files start with optional `# key = value` metadata lines,
//! then a header naming the key columns (`time_s` or `loops` for MS runs,
//! `gamma,beta` for heatmaps), a `shots` column, and one count column per
//! bitstring in lexicographic order with qubit 0 as the leftmost digit.

use std::collections::BTreeMap;
use std::path::Path;

use msqaoa::density::bitstring;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Named numeric columns, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|x| x.to_string()))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
    }

    pub fn from_csv(text: &str, origin: &Path) -> CliResult<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let columns: Vec<String> = r
            .headers()
            .map_err(|e| CliError::parse(origin, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut table = Table::new(columns);
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::parse(origin, e))?;
            let row = rec
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::parse(origin, format!("row {}: {e}", line + 1)))?;
            if row.len() != table.columns.len() {
                return Err(CliError::parse(origin, format!("row {}: wrong number of fields", line + 1)));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))
        } else {
            Self::from_csv(&text, path)
        }
    }

    pub fn render(&self, format: crate::config::Format) -> String {
        match format {
            crate::config::Format::Csv => self.to_csv(),
            crate::config::Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("finite table");
                s.push('\n');
                s
            }
        }
    }
}

pub fn bitstring_labels(n: usize) -> Vec<String> {
    (0..1usize << n).map(|z| bitstring(z, n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    /// Keyed by interaction time in seconds.
    MsTime,
    /// Keyed by time in units of the loop time.
    MsLoops,
    Heatmap,
}

impl DatasetKind {
    pub fn key_columns(self) -> &'static [&'static str] {
        match self {
            DatasetKind::MsTime => &["time_s"],
            DatasetKind::MsLoops => &["loops"],
            DatasetKind::Heatmap => &["gamma", "beta"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRow {
    pub key: Vec<f64>,
    pub shots: u64,
    pub counts: Vec<u64>,
}

impl DataRow {
    pub fn frequencies(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.shots as f64)
            .collect()
    }
}

/// Shot counts per bitstring, one row per time point or grid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDataset {
    pub n: usize,
    pub kind: DatasetKind,
    pub rows: Vec<DataRow>,
    pub metadata: BTreeMap<String, String>,
}

impl ExperimentDataset {
    pub fn new(n: usize, kind: DatasetKind) -> Self {
        Self {
            n,
            kind,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, key: Vec<f64>, counts: Vec<u64>) {
        let shots = counts.iter().sum();
        self.rows.push(DataRow { key, shots, counts });
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = self.kind.key_columns().iter().map(|s| s.to_string()).collect();
        header.push("shots".into());
        header.extend(bitstring_labels(self.n));
        w.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut rec: Vec<String> = row.key.iter().map(|x| x.to_string()).collect();
            rec.push(row.shots.to_string());
            rec.extend(row.counts.iter().map(|c| c.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii"));
        out
    }

    pub fn from_csv(text: &str, origin: &Path) -> CliResult<Self> {
        let mut metadata = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(meta) = line.trim_start().strip_prefix('#') {
                if let Some((k, v)) = meta.split_once('=') {
                    metadata.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else if !line.trim().is_empty() {
                body.push_str(line);
                body.push('\n');
            }
        }
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let header: Vec<String> = r
            .headers()
            .map_err(|e| CliError::parse(origin, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let kind = match header.first().map(String::as_str) {
            Some("time_s") => DatasetKind::MsTime,
            Some("loops") => DatasetKind::MsLoops,
            Some("gamma") => DatasetKind::Heatmap,
            _ => {
                return Err(CliError::parse(
                    origin,
                    "first column must be time_s, loops or gamma",
                ))
            }
        };
        let keys = kind.key_columns();
        if header.len() < keys.len() + 1
            || header[..keys.len()] != keys.iter().map(|s| s.to_string()).collect::<Vec<_>>()[..]
            || header[keys.len()] != "shots"
        {
            return Err(CliError::parse(
                origin,
                format!("header must start with {},shots", keys.join(",")),
            ));
        }
        let labels = &header[keys.len() + 1..];
        let n = labels.first().map(|l| l.len()).unwrap_or(0);
        if n == 0 || labels != &bitstring_labels(n)[..] {
            return Err(CliError::parse(
                origin,
                "bitstring columns must list all 2^n outcomes in lexicographic order",
            ));
        }
        let mut ds = ExperimentDataset::new(n, kind);
        ds.metadata = metadata;
        if let Some(declared) = ds.metadata.get("n") {
            if declared.parse::<usize>().ok() != Some(n) {
                return Err(CliError::parse(origin, format!("metadata n = {declared} but columns give {n}")));
            }
        }
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| CliError::parse(origin, e))?;
            let at = |msg: String| CliError::parse(origin, format!("row {}: {msg}", line + 1));
            if rec.len() != header.len() {
                return Err(at("wrong number of fields".into()));
            }
            let key = rec
                .iter()
                .take(keys.len())
                .map(|s| s.parse::<f64>().map_err(|e| at(e.to_string())))
                .collect::<CliResult<Vec<_>>>()?;
            let shots: u64 = rec[keys.len()]
                .parse()
                .map_err(|_| at("shots must be a non-negative integer".into()))?;
            let counts = rec
                .iter()
                .skip(keys.len() + 1)
                .map(|s| s.parse::<u64>().map_err(|_| at(format!("count {s:?} is not a non-negative integer"))))
                .collect::<CliResult<Vec<_>>>()?;
            if shots == 0 || counts.iter().sum::<u64>() != shots {
                return Err(at(format!("counts do not sum to shots = {shots}")));
            }
            ds.rows.push(DataRow { key, shots, counts });
        }
        Ok(ds)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_csv(&text, path)
    }
}

/// SPAM matrix file: header `measured,<prepared labels…>`, then one row per
/// measured bitstring. Entries may be probabilities or counts; each column
/// is normalized by its sum.
pub fn read_spam_matrix(path: &Path) -> CliResult<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_spam_matrix(&text, path)
}

pub fn parse_spam_matrix(text: &str, origin: &Path) -> CliResult<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::parse(origin, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let labels = &header[1.min(header.len())..];
    let n = labels.first().map(|l| l.len()).unwrap_or(0);
    if header.first().map(String::as_str) != Some("measured") || n == 0 || labels != &bitstring_labels(n)[..] {
        return Err(CliError::parse(
            origin,
            "header must be measured followed by all bitstrings in lexicographic order",
        ));
    }
    let dim = labels.len();
    let mut m = DMatrix::zeros(dim, dim);
    let mut seen = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::parse(origin, e))?;
        let at = |msg: String| CliError::parse(origin, format!("row {}: {msg}", line + 1));
        if line >= dim || rec.len() != dim + 1 {
            return Err(at("expected a square matrix".into()));
        }
        if rec[0] != labels[line] {
            return Err(at(format!("expected measured label {}", labels[line])));
        }
        for j in 0..dim {
            let v: f64 = rec[j + 1].parse().map_err(|e| at(format!("{e}")))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(at("entries must be finite and non-negative".into()));
            }
            m[(line, j)] = v;
        }
        seen += 1;
    }
    if seen != dim {
        return Err(CliError::parse(origin, format!("expected {dim} rows, got {seen}")));
    }
    for j in 0..dim {
        let s = m.column(j).sum();
        if !(s > 0.0) {
            return Err(CliError::parse(origin, format!("column {} sums to zero", labels[j])));
        }
        if (s - 1.0).abs() > 1e-12 {
            m.column_mut(j).unscale_mut(s);
        }
    }
    Ok(m)
}

pub fn spam_matrix_to_csv(m: &DMatrix<f64>) -> String {
    let n = m.nrows().trailing_zeros() as usize;
    let labels = bitstring_labels(n);
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["measured".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend(m.row(i).iter().map(|x| x.to_string()));
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
}
