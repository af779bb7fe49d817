//! Marker assignment and single-neuron-vote classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class predicted when every assigned neuron is silent on a sample.
pub const FALLBACK_CLASS: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkerMap {
    /// Class of each excitatory neuron, `None` if it never fired.
    pub marker: Vec<Option<usize>>,
    /// `evidence[j][c]`: spikes of neuron `j` over samples of class `c`.
    pub evidence: Vec<Vec<u64>>,
}

impl MarkerMap {
    pub fn n_assigned(&self) -> usize {
        self.marker.iter().filter(|m| m.is_some()).count()
    }

    /// Distinct classes carried by at least one neuron.
    pub fn distinct_markers(&self) -> Vec<usize> {
        let mut m: Vec<usize> = self.marker.iter().flatten().copied().collect();
        m.sort_unstable();
        m.dedup();
        m
    }
}

/// Builds markers from per-sample excitatory spike counts gathered with
/// plasticity frozen. Ties go to the lower class index.
pub fn assign_markers(counts: &[Vec<u32>], labels: &[usize], n_classes: usize) -> Result<MarkerMap> {
    if counts.len() != labels.len() {
        return Err(Error::Input(format!(
            "{} count rows for {} labels",
            counts.len(),
            labels.len()
        )));
    }
    let n_neurons = counts.first().map_or(0, Vec::len);
    let mut evidence = vec![vec![0u64; n_classes]; n_neurons];
    for (row, &label) in counts.iter().zip(labels) {
        if row.len() != n_neurons || label >= n_classes {
            return Err(Error::Input("ragged counts or label out of range".into()));
        }
        for (j, &c) in row.iter().enumerate() {
            evidence[j][label] += u64::from(c);
        }
    }
    let marker = evidence
        .iter()
        .map(|ev| {
            let (best, &max) = ev
                .iter()
                .enumerate()
                .rev()
                .max_by_key(|(_, &v)| v)
                .expect("n_classes > 0");
            (max > 0).then_some(best)
        })
        .collect();
    Ok(MarkerMap { marker, evidence })
}

/// Marker of the most active assigned neuron (lowest index on ties), or
/// [`FALLBACK_CLASS`] when all assigned neurons are silent.
pub fn classify(counts: &[u32], markers: &MarkerMap) -> Result<usize> {
    if markers.n_assigned() == 0 {
        return Err(Error::Evaluation("no excitatory neuron carries a marker".into()));
    }
    let mut best: Option<(u32, usize)> = None;
    for (&count, marker) in counts.iter().zip(&markers.marker) {
        let Some(class) = *marker else { continue };
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, class));
        }
    }
    Ok(match best {
        Some((c, class)) if c > 0 => class,
        _ => FALLBACK_CLASS,
    })
}

pub fn accuracy(predictions: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    correct as f64 / labels.len() as f64
}

/// Accuracy restricted to each true class; `None` for classes absent from `labels`.
pub fn per_class_accuracy(predictions: &[usize], labels: &[usize], n_classes: usize) -> Vec<Option<f64>> {
    (0..n_classes)
        .map(|c| {
            let (hit, total) = predictions
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == c)
                .fold((0usize, 0usize), |(h, t), (p, _)| (h + usize::from(*p == c), t + 1));
            (total > 0).then(|| hit as f64 / total as f64)
        })
        .collect()
}
