use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::sweep::canonical_cmp;
use super::TrialRecord;
use crate::error::{Error, Result};
use crate::faults::{FaultKind, PositionPolicy};
use crate::network::{GMode, Granularity, StuckAt};

/// Header line of the results CSV. Absent fault type or position is an empty field.
pub const RESULTS_CSV_HEADER: &str =
    "dataset,g_mode,granularity,v_ltp,v_ltd,fault_kind,fault_type,position_policy,ratio,epochs,seed,accuracy,n_test,wall_s";

/// One results CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub g_mode: GMode,
    pub granularity: Granularity,
    pub v_ltp: f64,
    pub v_ltd: f64,
    pub fault_kind: FaultKind,
    pub fault_type: Option<StuckAt>,
    pub position_policy: Option<PositionPolicy>,
    pub ratio: f64,
    pub epochs: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub n_test: usize,
    pub wall_s: f64,
}

impl From<&TrialRecord> for ResultRow {
    fn from(r: &TrialRecord) -> Self {
        let s = &r.spec;
        Self {
            dataset: s.dataset.clone(),
            g_mode: s.g_mode,
            granularity: s.granularity,
            v_ltp: s.plasticity.v_ltp,
            v_ltd: s.plasticity.v_ltd,
            fault_kind: s.fault.kind,
            fault_type: s.fault.synapse_type,
            position_policy: s.fault.position_policy,
            ratio: s.fault.ratio,
            epochs: s.epochs,
            seed: s.seed,
            accuracy: r.accuracy,
            n_test: r.n_test,
            wall_s: r.wall_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResultFormat {
    Csv,
    Json,
}

impl ResultFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => ResultFormat::Json,
            _ => ResultFormat::Csv,
        }
    }
}

impl FromStr for ResultFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ResultFormat::Csv),
            "json" => Ok(ResultFormat::Json),
            other => Err(Error::Input(format!("unknown result format {other:?}"))),
        }
    }
}

/// Persists records. CSV appends to an existing file when its header matches
/// (writing the header only once); JSON merges into an existing array.
pub fn write_results(records: &[TrialRecord], path: &Path, format: ResultFormat) -> Result<()> {
    match format {
        ResultFormat::Csv => {
            let existing_header = match File::open(path) {
                Ok(f) => {
                    let mut line = String::new();
                    BufReader::new(f).read_line(&mut line)?;
                    Some(line.trim_end().to_string()).filter(|l| !l.is_empty())
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
                Err(e) => return Err(e.into()),
            };
            if let Some(h) = &existing_header {
                if h != RESULTS_CSV_HEADER {
                    return Err(Error::Input(format!(
                        "{} has a different header; refusing to append",
                        path.display()
                    )));
                }
            }
            let file = OpenOptions::new().create(true).append(true).open(path)?;
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
            if existing_header.is_none() {
                w.write_record(RESULTS_CSV_HEADER.split(','))?;
            }
            for r in records {
                w.serialize(ResultRow::from(r))?;
            }
            w.flush()?;
        }
        ResultFormat::Json => {
            let mut all = if path.exists() && std::fs::metadata(path)?.len() > 0 {
                read_records_json(path)?
            } else {
                Vec::new()
            };
            all.extend_from_slice(records);
            let mut f = File::create(path)?;
            serde_json::to_writer_pretty(&mut f, &all)?;
            f.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn read_records_json(path: &Path) -> Result<Vec<TrialRecord>> {
    let f = File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(f))?)
}

/// Reads result rows from a CSV file or a JSON record list.
pub fn read_result_rows(path: &Path) -> Result<Vec<ResultRow>> {
    match ResultFormat::from_path(path) {
        ResultFormat::Json => Ok(read_records_json(path)?.iter().map(ResultRow::from).collect()),
        ResultFormat::Csv => {
            let mut reader = csv::Reader::from_path(path)?;
            let header: Vec<&str> = RESULTS_CSV_HEADER.split(',').collect();
            if reader.headers()?.iter().collect::<Vec<_>>() != header {
                return Err(Error::Input(format!("{} is not a results CSV", path.display())));
            }
            reader
                .deserialize()
                .map(|r| r.map_err(Error::from))
                .collect()
        }
    }
}

/// Grouping column for [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKey {
    Dataset,
    GMode,
    Granularity,
    /// The `(v_ltp, v_ltd)` pair.
    V,
    VLtp,
    VLtd,
    FaultKind,
    FaultType,
    PositionPolicy,
    Ratio,
    Epochs,
    Seed,
}

impl FromStr for GroupKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dataset" => GroupKey::Dataset,
            "g_mode" => GroupKey::GMode,
            "granularity" => GroupKey::Granularity,
            "v" => GroupKey::V,
            "v_ltp" => GroupKey::VLtp,
            "v_ltd" => GroupKey::VLtd,
            "fault_kind" => GroupKey::FaultKind,
            "fault_type" => GroupKey::FaultType,
            "position_policy" => GroupKey::PositionPolicy,
            "ratio" => GroupKey::Ratio,
            "epochs" => GroupKey::Epochs,
            "seed" => GroupKey::Seed,
            other => return Err(Error::Input(format!("unknown group key {other:?}"))),
        })
    }
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl GroupKey {
    pub fn name(self) -> &'static str {
        match self {
            GroupKey::Dataset => "dataset",
            GroupKey::GMode => "g_mode",
            GroupKey::Granularity => "granularity",
            GroupKey::V => "v",
            GroupKey::VLtp => "v_ltp",
            GroupKey::VLtd => "v_ltd",
            GroupKey::FaultKind => "fault_kind",
            GroupKey::FaultType => "fault_type",
            GroupKey::PositionPolicy => "position_policy",
            GroupKey::Ratio => "ratio",
            GroupKey::Epochs => "epochs",
            GroupKey::Seed => "seed",
        }
    }

    fn value(self, r: &ResultRow) -> String {
        match self {
            GroupKey::Dataset => r.dataset.clone(),
            GroupKey::GMode => r.g_mode.to_string(),
            GroupKey::Granularity => r.granularity.to_string(),
            GroupKey::V => format!("({}, {})", r.v_ltp, r.v_ltd),
            GroupKey::VLtp => r.v_ltp.to_string(),
            GroupKey::VLtd => r.v_ltd.to_string(),
            GroupKey::FaultKind => r.fault_kind.to_string(),
            GroupKey::FaultType => opt(r.fault_type),
            GroupKey::PositionPolicy => opt(r.position_policy),
            GroupKey::Ratio => r.ratio.to_string(),
            GroupKey::Epochs => r.epochs.to_string(),
            GroupKey::Seed => r.seed.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub key: Vec<String>,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single record.
    pub std: f64,
}

fn row_order(a: &ResultRow, b: &ResultRow) -> std::cmp::Ordering {
    let spec = |r: &ResultRow| super::TrialSpec {
        dataset: r.dataset.clone(),
        g_mode: r.g_mode,
        granularity: r.granularity,
        epochs: r.epochs,
        seed: r.seed,
        fault: crate::faults::FaultSpec {
            kind: r.fault_kind,
            synapse_type: r.fault_type,
            position_policy: r.position_policy,
            ratio: r.ratio,
        },
        ..Default::default()
    }
    .with_v(r.v_ltp, r.v_ltd);
    canonical_cmp(&spec(a), &spec(b))
}

/// Mean and sample std of accuracy per group. Groups appear in canonical
/// order of their first member.
pub fn summarize(rows: &[ResultRow], keys: &[GroupKey]) -> Vec<SummaryRow> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| row_order(a, b));
    let mut groups: Vec<(Vec<String>, Vec<f64>)> = Vec::new();
    for r in sorted {
        let key: Vec<String> = keys.iter().map(|k| k.value(r)).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, accs)) => accs.push(r.accuracy),
            None => groups.push((key, vec![r.accuracy])),
        }
    }
    groups
        .into_iter()
        .map(|(key, accs)| {
            let n = accs.len();
            let mean = accs.iter().sum::<f64>() / n as f64;
            let std = if n > 1 {
                (accs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow { key, n, mean, std }
        })
        .collect()
}

/// Two-way table of mean accuracy, e.g. rows `dataset x g_mode`, columns `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotTable {
    pub row_keys: Vec<GroupKey>,
    pub col_keys: Vec<GroupKey>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

pub fn pivot(rows: &[ResultRow], row_keys: &[GroupKey], col_keys: &[GroupKey]) -> PivotTable {
    let all: Vec<GroupKey> = row_keys.iter().chain(col_keys).copied().collect();
    let summary = summarize(rows, &all);
    let split = row_keys.len();
    let mut row_labels: Vec<String> = Vec::new();
    let mut col_labels: Vec<String> = Vec::new();
    for s in &summary {
        let r = s.key[..split].join(" / ");
        let c = s.key[split..].join(" / ");
        if !row_labels.contains(&r) {
            row_labels.push(r);
        }
        if !col_labels.contains(&c) {
            col_labels.push(c);
        }
    }
    let mut cells = vec![vec![None; col_labels.len()]; row_labels.len()];
    for s in &summary {
        let r = row_labels.iter().position(|l| *l == s.key[..split].join(" / ")).unwrap();
        let c = col_labels.iter().position(|l| *l == s.key[split..].join(" / ")).unwrap();
        cells[r][c] = Some(s.mean);
    }
    PivotTable {
        row_keys: row_keys.to_vec(),
        col_keys: col_keys.to_vec(),
        row_labels,
        col_labels,
        cells,
    }
}

impl std::fmt::Display for PivotTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let width = self.row_labels.iter().map(String::len).max().unwrap_or(0).max(4);
        write!(f, "{:width$}", "")?;
        for c in &self.col_labels {
            write!(f, " | {c:>12}")?;
        }
        writeln!(f)?;
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            write!(f, "{label:width$}")?;
            for cell in row {
                match cell {
                    Some(v) => write!(f, " | {:>11.2}%", v * 100.0)?,
                    None => write!(f, " | {:>12}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
