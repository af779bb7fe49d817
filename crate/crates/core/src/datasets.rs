//! CSV loading, min-max normalization and stratified splitting.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub column_names: Vec<String>,
    /// Row-major `n_samples x n_columns`.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    /// Original label text for each class index.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_columns(&self) -> usize {
        self.column_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            column_names: self.column_names.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            class_names: self.class_names.clone(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        self.features
            .iter()
            .flatten()
            .all(|x| (0.0..=1.0).contains(x))
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(if s.eq_ignore_ascii_case("last") {
            LabelColumn::Last
        } else if let Ok(i) = s.parse() {
            LabelColumn::Index(i)
        } else {
            LabelColumn::Name(s.to_string())
        })
    }
}

fn load_err(path: &Path, row: Option<usize>, column: Option<usize>, message: impl Into<String>) -> Error {
    Error::Load {
        path: path.to_path_buf(),
        row,
        column,
        message: message.into(),
    }
}

/// Reads a delimited file with an optional header row. Labels are mapped to
/// dense class indices in order of first appearance. Row and column numbers
/// in errors are 1-based file positions.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| load_err(path, None, None, e.to_string()))?;

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| load_err(path, Some(k + 1), None, e.to_string()))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec);
    }
    let Some(first) = rows.first() else {
        return Err(load_err(path, None, None, "file contains no rows"));
    };
    let width = first.len();
    if width < 2 {
        return Err(load_err(path, Some(1), None, "need at least one feature and a label column"));
    }

    let numeric = |s: &str| s.parse::<f64>().is_ok();
    let label_idx = match label {
        LabelColumn::Index(i) if *i < width => *i,
        LabelColumn::Index(i) => {
            return Err(load_err(path, Some(1), Some(i + 1), format!("label column {i} out of range")))
        }
        LabelColumn::Last => width - 1,
        LabelColumn::Name(name) => first
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| load_err(path, Some(1), None, format!("no header column named {name:?}")))?,
    };
    let has_header = matches!(label, LabelColumn::Name(_))
        || first.iter().enumerate().any(|(c, s)| c != label_idx && !numeric(s));

    let column_names: Vec<String> = (0..width)
        .filter(|&c| c != label_idx)
        .map(|c| if has_header { first[c].to_string() } else { format!("x{c}") })
        .collect();

    let body = if has_header { &rows[1..] } else { &rows[..] };
    if body.is_empty() {
        return Err(load_err(path, None, None, "file has a header but no data rows"));
    }
    let offset = usize::from(has_header) + 1;
    let mut features = Vec::with_capacity(body.len());
    let mut labels = Vec::with_capacity(body.len());
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let mut class_names = Vec::new();
    for (r, rec) in body.iter().enumerate() {
        let line = r + offset;
        if rec.len() != width {
            return Err(load_err(
                path,
                Some(line),
                None,
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        let mut row = Vec::with_capacity(width - 1);
        for (c, cell) in rec.iter().enumerate() {
            if c == label_idx {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| load_err(path, Some(line), Some(c + 1), format!("non-numeric value {cell:?}")))?;
            if !v.is_finite() {
                return Err(load_err(path, Some(line), Some(c + 1), "non-finite value"));
            }
            row.push(v);
        }
        let text = rec[label_idx].to_string();
        let next = class_index.len();
        let class = *class_index.entry(text.clone()).or_insert_with(|| {
            class_names.push(text);
            next
        });
        features.push(row);
        labels.push(class);
    }
    if class_names.len() < 2 {
        return Err(load_err(path, None, Some(label_idx + 1), "label column has fewer than 2 classes"));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset {
        name,
        column_names,
        features,
        labels,
        n_classes: class_names.len(),
        class_names,
    })
}

/// Per-column `(x - min) / (max - min)`; constant columns become 0.
pub fn normalize_minmax(ds: &Dataset) -> Dataset {
    let n_cols = ds.n_columns();
    let mut lo = vec![f64::INFINITY; n_cols];
    let mut hi = vec![f64::NEG_INFINITY; n_cols];
    for row in &ds.features {
        for (c, &x) in row.iter().enumerate() {
            lo[c] = lo[c].min(x);
            hi[c] = hi[c].max(x);
        }
    }
    let features = ds
        .features
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, &x)| {
                    let span = hi[c] - lo[c];
                    if span > 0.0 {
                        ((x - lo[c]) / span).clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Dataset {
        features,
        ..ds.clone()
    }
}

/// Row indices of a stratified split. Each class contributes
/// `round(n_c * test_fraction)` rows to the test side. Test indices come back
/// sorted; train indices come back shuffled, which is the presentation order.
pub fn stratified_indices(
    labels: &[usize],
    n_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Input(format!("test_fraction must lie in [0, 1), got {test_fraction}")));
    }
    let mut rng = rng::stream(seed, Stream::Split);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let n_test = (members.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    test.sort_unstable();
    train.sort_unstable();
    train.shuffle(&mut rng);
    Ok((train, test))
}

pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = stratified_indices(&ds.labels, ds.n_classes, test_fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

/// Built-in dataset ids and the files they resolve to inside a data directory.
pub const KNOWN_DATASETS: &[(&str, &str)] = &[("breast_cancer", "breast_cancer.csv"), ("wine", "wine.csv")];

/// Canonical id for a dataset name or alias (`bc`, `wq`, ...).
pub fn canonical_id(id: &str) -> Option<&'static str> {
    match id.to_ascii_lowercase().as_str() {
        "breast_cancer" | "breast-cancer" | "bc" => Some("breast_cancer"),
        "wine" | "wq" | "wine_quality" => Some("wine"),
        _ => None,
    }
}

/// Directory holding dataset CSVs: `MEMSNN_DATA_DIR` if set, else `./data`.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os("MEMSNN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Loads and normalizes a dataset by id. Known ids read
/// `<data_dir>/<file>` with a `target` label column; anything else is
/// treated as a CSV path whose last column is the label.
pub fn load_dataset(id: &str, data_dir: &Path) -> Result<Dataset> {
    let mut ds = match canonical_id(id) {
        Some(canon) => {
            let file = KNOWN_DATASETS.iter().find(|(k, _)| *k == canon).map(|(_, f)| *f).unwrap();
            let mut ds = load_csv(data_dir.join(file), &LabelColumn::Name("target".into()), b',')?;
            ds.name = canon.to_string();
            ds
        }
        None => {
            let mut ds = load_csv(id, &LabelColumn::Last, b',')?;
            ds.name = id.to_string();
            ds
        }
    };
    ds = normalize_minmax(&ds);
    Ok(ds)
}
