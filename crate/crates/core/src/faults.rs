//! Fault plans and their injection: dead excitatory neurons and stuck-at
//! input-to-excitatory synapses, placed at random or at the columns with the
//! largest mean feature value.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, StuckAt};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    #[default]
    None,
    Neuron,
    Synapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionPolicy {
    Random,
    Important,
}

impl std::fmt::Display for FaultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FaultKind::None => "none",
            FaultKind::Neuron => "neuron",
            FaultKind::Synapse => "synapse",
        })
    }
}

impl std::fmt::Display for PositionPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PositionPolicy::Random => "random",
            PositionPolicy::Important => "important",
        })
    }
}

/// Unresolved fault scenario, as written in a trial spec.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub synapse_type: Option<StuckAt>,
    pub position_policy: Option<PositionPolicy>,
    pub ratio: f64,
}

impl FaultSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn neurons(ratio: f64) -> Self {
        Self {
            kind: FaultKind::Neuron,
            ratio,
            ..Default::default()
        }
    }

    pub fn synapses(stuck: StuckAt, policy: PositionPolicy, ratio: f64) -> Self {
        Self {
            kind: FaultKind::Synapse,
            synapse_type: Some(stuck),
            position_policy: Some(policy),
            ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ratio) {
            return Err(Error::Input(format!("fault ratio must lie in [0, 1], got {}", self.ratio)));
        }
        if self.kind == FaultKind::Synapse && (self.synapse_type.is_none() || self.position_policy.is_none()) {
            return Err(Error::Input(
                "synapse faults need both synapse_type and position_policy".into(),
            ));
        }
        Ok(())
    }
}

/// A fully resolved fault plan: exactly which elements fail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultPlan {
    pub kind: FaultKind,
    pub synapse_type: Option<StuckAt>,
    pub position_policy: Option<PositionPolicy>,
    pub ratio: f64,
    pub seed: u64,
    pub n_exc: usize,
    pub n_input: usize,
    pub resolved_neuron_indices: Vec<usize>,
    pub resolved_columns_per_exc_neuron: Vec<Vec<usize>>,
}

impl FaultPlan {
    pub fn is_empty(&self) -> bool {
        self.resolved_neuron_indices.is_empty() && self.resolved_columns_per_exc_neuron.iter().all(Vec::is_empty)
    }

    pub fn n_faulted_synapses(&self) -> usize {
        self.resolved_columns_per_exc_neuron.iter().map(Vec::len).sum()
    }
}

/// Column indices ordered by mean value over `train_features`, largest first;
/// equal means keep ascending index order.
pub fn rank_important_columns(train_features: &[Vec<f64>]) -> Vec<usize> {
    let n_cols = train_features.first().map_or(0, Vec::len);
    let n = train_features.len().max(1) as f64;
    let mut means = vec![0.0; n_cols];
    for row in train_features {
        for (m, x) in means.iter_mut().zip(row) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut order: Vec<usize> = (0..n_cols).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    order
}

// floor(ratio * n), forgiving representation error such as 0.3 * 30.
fn floor_count(ratio: f64, n: usize) -> usize {
    ((ratio * n as f64) + 1e-9).floor() as usize
}

/// Resolves a scenario against network dimensions. Neuron faults pick
/// `round(ratio * n_exc)` excitatory neurons; synapse faults give every
/// excitatory neuron `floor(ratio * n_input)` stuck inputs, drawn
/// independently per neuron (random) or taken from the top of `importance`.
pub fn build_fault_plan(
    spec: &FaultSpec,
    n_exc: usize,
    n_input: usize,
    importance: Option<&[usize]>,
    seed: u64,
) -> Result<FaultPlan> {
    spec.validate()?;
    let mut plan = FaultPlan {
        kind: spec.kind,
        synapse_type: spec.synapse_type,
        position_policy: spec.position_policy,
        ratio: spec.ratio,
        seed,
        n_exc,
        n_input,
        resolved_neuron_indices: Vec::new(),
        resolved_columns_per_exc_neuron: Vec::new(),
    };
    let mut rng = rng::stream(seed, Stream::Faults);
    match spec.kind {
        FaultKind::None => {}
        FaultKind::Neuron => {
            let k = (spec.ratio * n_exc as f64).round() as usize;
            let mut picked = index::sample(&mut rng, n_exc, k.min(n_exc)).into_vec();
            picked.sort_unstable();
            plan.resolved_neuron_indices = picked;
        }
        FaultKind::Synapse => {
            let k = floor_count(spec.ratio, n_input).min(n_input);
            plan.resolved_columns_per_exc_neuron = match spec.position_policy {
                Some(PositionPolicy::Random) => (0..n_exc)
                    .map(|_| {
                        let mut cols = index::sample(&mut rng, n_input, k).into_vec();
                        cols.sort_unstable();
                        cols
                    })
                    .collect(),
                Some(PositionPolicy::Important) => {
                    let order = importance.ok_or_else(|| {
                        Error::Input("important-position faults need a column importance ordering".into())
                    })?;
                    let mut seen = vec![false; n_input];
                    if order.len() != n_input || order.iter().any(|&c| c >= n_input || std::mem::replace(&mut seen[c], true)) {
                        return Err(Error::Input(format!(
                            "importance ordering must be a permutation of 0..{n_input}"
                        )));
                    }
                    let top = order[..k].to_vec();
                    vec![top; n_exc]
                }
                None => unreachable!("validated above"),
            };
        }
    }
    Ok(plan)
}

/// Applies a plan to a freshly built network.
pub fn inject_faults(net: &mut Network, plan: &FaultPlan) -> Result<()> {
    let (n_exc, n_input) = (net.config.n_exc, net.config.n_input);
    if plan.kind != FaultKind::None && (plan.n_exc != n_exc || plan.n_input != n_input) {
        return Err(Error::Config(format!(
            "fault plan built for {}x{} but network is {n_input}x{n_exc}",
            plan.n_input, plan.n_exc
        )));
    }
    if plan.resolved_neuron_indices.iter().any(|&j| j >= n_exc)
        || plan.resolved_columns_per_exc_neuron.len() > n_exc
        || plan.resolved_columns_per_exc_neuron.iter().flatten().any(|&i| i >= n_input)
    {
        return Err(Error::Config("fault plan indices exceed network dimensions".into()));
    }
    let rest = net.config.rest_potential;
    for &j in &plan.resolved_neuron_indices {
        let n = &mut net.exc[j];
        n.is_fault = true;
        n.v_m = rest;
        n.spike_count_current_sample = 0;
    }
    if let Some(stuck) = plan.synapse_type {
        for (j, cols) in plan.resolved_columns_per_exc_neuron.iter().enumerate() {
            for &i in cols {
                net.input_exc.pin(i, j, stuck);
            }
        }
    }
    Ok(())
}

/// Re-pins every stuck synapse to its stuck value.
pub fn enforce_faults(net: &mut Network) {
    net.input_exc.enforce_mask();
}
