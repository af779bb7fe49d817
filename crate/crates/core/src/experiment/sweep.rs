use std::cmp::Ordering;
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_trial, TrialRecord, TrialSpec};
use crate::datasets::{canonical_id, load_dataset, Dataset};
use crate::error::{Error, Result};
use crate::faults::{FaultKind, FaultSpec, PositionPolicy};
use crate::network::{GMode, StuckAt};

/// Fault scenario without its ratio; ratios come from the grid axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultScenario {
    pub kind: FaultKind,
    pub synapse_type: Option<StuckAt>,
    pub position_policy: Option<PositionPolicy>,
}

impl Default for FaultScenario {
    fn default() -> Self {
        Self {
            kind: FaultKind::None,
            synapse_type: None,
            position_policy: None,
        }
    }
}

impl FaultScenario {
    pub const NONE: Self = Self {
        kind: FaultKind::None,
        synapse_type: None,
        position_policy: None,
    };
    pub const NEURON: Self = Self {
        kind: FaultKind::Neuron,
        synapse_type: None,
        position_policy: None,
    };

    pub const fn synapse(stuck: StuckAt, policy: PositionPolicy) -> Self {
        Self {
            kind: FaultKind::Synapse,
            synapse_type: Some(stuck),
            position_policy: Some(policy),
        }
    }

    fn with_ratio(self, ratio: f64) -> FaultSpec {
        FaultSpec {
            kind: self.kind,
            synapse_type: self.synapse_type,
            position_policy: self.position_policy,
            ratio,
        }
    }
}

/// Cartesian grid of trial factors. Every axis must be non-empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepGrid {
    /// Values for every field not varied by the grid.
    pub base: TrialSpec,
    pub datasets: Vec<String>,
    pub g_modes: Vec<GMode>,
    /// `(v_ltp, v_ltd)` pairs.
    pub v_settings: Vec<(f64, f64)>,
    pub faults: Vec<FaultScenario>,
    /// Ignored for the no-fault scenario, which runs once at ratio 0.
    pub ratios: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            base: TrialSpec::default(),
            datasets: vec!["wine".into()],
            g_modes: vec![GMode::Static],
            v_settings: vec![(0.0, 0.0)],
            faults: vec![FaultScenario::NONE],
            ratios: vec![0.0],
            seeds: (0..5).collect(),
        }
    }
}

impl SweepGrid {
    /// Expands the grid into trial specs in canonical order.
    pub fn cells(&self) -> Result<Vec<TrialSpec>> {
        let axes = [
            ("datasets", self.datasets.is_empty()),
            ("g_modes", self.g_modes.is_empty()),
            ("v_settings", self.v_settings.is_empty()),
            ("faults", self.faults.is_empty()),
            ("ratios", self.ratios.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, empty)| *empty) {
            return Err(Error::Input(format!("sweep axis `{name}` is empty")));
        }
        let mut cells = Vec::new();
        for dataset in &self.datasets {
            for &g_mode in &self.g_modes {
                for &(v_ltp, v_ltd) in &self.v_settings {
                    for scenario in &self.faults {
                        let ratios: &[f64] = if scenario.kind == FaultKind::None { &[0.0] } else { &self.ratios };
                        for &ratio in ratios {
                            for &seed in &self.seeds {
                                let mut spec = self.base.clone().with_v(v_ltp, v_ltd);
                                spec.dataset = dataset.clone();
                                spec.g_mode = g_mode;
                                spec.fault = scenario.with_ratio(ratio);
                                spec.seed = seed;
                                spec.validate()?;
                                cells.push(spec);
                            }
                        }
                    }
                }
            }
        }
        cells.sort_by(canonical_cmp);
        Ok(cells)
    }
}

/// Total order used for persisted output: spec fields, then seed.
pub(crate) fn canonical_cmp(a: &TrialSpec, b: &TrialSpec) -> Ordering {
    a.dataset
        .cmp(&b.dataset)
        .then(a.g_mode.cmp(&b.g_mode))
        .then(a.granularity.cmp(&b.granularity))
        .then(a.plasticity.v_ltp.total_cmp(&b.plasticity.v_ltp))
        .then(a.plasticity.v_ltd.total_cmp(&b.plasticity.v_ltd))
        .then(a.fault.kind.cmp(&b.fault.kind))
        .then(a.fault.synapse_type.cmp(&b.fault.synapse_type))
        .then(a.fault.position_policy.cmp(&b.fault.position_policy))
        .then(a.fault.ratio.total_cmp(&b.fault.ratio))
        .then(a.epochs.cmp(&b.epochs))
        .then(a.seed.cmp(&b.seed))
}

/// Normalized datasets by id, loaded once and shared read-only.
#[derive(Debug, Clone, Default)]
pub struct DatasetStore {
    data_dir: PathBuf,
    loaded: HashMap<String, Arc<Dataset>>,
}

impl DatasetStore {
    pub fn new(data_dir: impl AsRef<Path>) -> Self {
        Self {
            data_dir: data_dir.as_ref().to_path_buf(),
            loaded: HashMap::new(),
        }
    }

    /// Registers an in-memory dataset under `id`.
    pub fn insert(&mut self, id: &str, ds: Dataset) {
        self.loaded.insert(id.to_string(), Arc::new(ds));
    }

    pub fn load(&mut self, id: &str) -> Result<Arc<Dataset>> {
        if let Some(ds) = self.loaded.get(id) {
            return Ok(Arc::clone(ds));
        }
        let ds = Arc::new(load_dataset(id, &self.data_dir)?);
        self.loaded.insert(id.to_string(), Arc::clone(&ds));
        if let Some(canon) = canonical_id(id) {
            self.loaded.entry(canon.to_string()).or_insert_with(|| Arc::clone(&ds));
        }
        Ok(ds)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Dataset>> {
        self.loaded.get(id).cloned()
    }
}

/// Runs every grid cell on a pool of `jobs` workers (0 = rayon default).
/// Output is in canonical order whatever the execution order.
pub fn run_sweep(grid: &SweepGrid, store: &mut DatasetStore, jobs: usize) -> Result<Vec<TrialRecord>> {
    let cells = grid.cells()?;
    for id in &grid.datasets {
        store.load(id)?;
    }
    let store = &*store;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut records = pool.install(|| {
        cells
            .par_iter()
            .map(|spec| {
                let ds = store.get(&spec.dataset).expect("preloaded");
                run_trial(spec, &ds)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    records.sort_by(|a, b| canonical_cmp(&a.spec, &b.spec));
    Ok(records)
}

/// Named grids reproducing the published sweeps.
pub const PRESETS: &[(&str, &str)] = &[
    ("paper-baseline", "no faults; three (v_LTP, v_LTD) settings x static/random G"),
    ("paper-fig4", "dead excitatory neurons 0-90%; three v settings x static/random G"),
    ("paper-fig5", "SA0 and SA1 synapses at random positions 0-90%; (0,0) x static/random G"),
    ("paper-fig7", "SA0 and SA1 synapses at important positions 0-90%; (0,0) x static/random G"),
    ("paper-table2", "SA0 synapses at random positions; three v settings x static/random G"),
    ("paper-table3", "SA1 synapses at random positions; three v settings x static/random G"),
    ("paper-table4", "SA0 synapses at important positions; three v settings x static/random G"),
    ("paper-table5", "SA1 synapses at important positions; three v settings x static/random G"),
];

/// 0.0, 0.1, ..., 0.9
pub fn tenth_ratios() -> Vec<f64> {
    (0..10).map(|k| k as f64 / 10.0).collect()
}

/// Builds a preset grid. `datasets` empty means both built-in datasets.
pub fn preset(name: &str, datasets: &[String], seeds: &[u64], base: TrialSpec) -> Result<SweepGrid> {
    let three_v = vec![(0.0, 0.0), (3.0, 3.0), (-3.0, -3.0)];
    let linear = vec![(0.0, 0.0)];
    use PositionPolicy::{Important, Random};
    use StuckAt::{Sa0, Sa1};
    let (v_settings, faults) = match name {
        "paper-baseline" => (three_v, vec![FaultScenario::NONE]),
        "paper-fig4" => (three_v, vec![FaultScenario::NEURON]),
        "paper-fig5" => (linear, vec![FaultScenario::synapse(Sa0, Random), FaultScenario::synapse(Sa1, Random)]),
        "paper-fig7" => (
            linear,
            vec![FaultScenario::synapse(Sa0, Important), FaultScenario::synapse(Sa1, Important)],
        ),
        "paper-table2" => (three_v, vec![FaultScenario::synapse(Sa0, Random)]),
        "paper-table3" => (three_v, vec![FaultScenario::synapse(Sa1, Random)]),
        "paper-table4" => (three_v, vec![FaultScenario::synapse(Sa0, Important)]),
        "paper-table5" => (three_v, vec![FaultScenario::synapse(Sa1, Important)]),
        other => {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            return Err(Error::Input(format!("unknown preset {other:?}; expected one of {names:?}")));
        }
    };
    let datasets = if datasets.is_empty() {
        vec!["breast_cancer".to_string(), "wine".to_string()]
    } else {
        datasets
            .iter()
            .map(|d| canonical_id(d).map(str::to_string).unwrap_or_else(|| d.clone()))
            .collect()
    };
    Ok(SweepGrid {
        base,
        datasets,
        g_modes: vec![GMode::Static, GMode::Random],
        v_settings,
        faults,
        ratios: tenth_ratios(),
        seeds: seeds.to_vec(),
    })
}
