//! Trials, sweeps and result persistence.
//!
//! A trial trains one network on the training split of a dataset, assigns
//! markers on the same split with plasticity frozen, and reports accuracy
//! on the held-out split. Everything random in a trial derives from its seed.

mod results;
mod sweep;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use results::{
    pivot, read_records_json, read_result_rows, summarize, write_results, GroupKey, PivotTable, ResultFormat,
    ResultRow, SummaryRow, RESULTS_CSV_HEADER,
};
pub use sweep::{preset, run_sweep, DatasetStore, FaultScenario, SweepGrid, PRESETS};

use crate::datasets::{stratified_split, Dataset};
use crate::decoder::{self, MarkerMap, FALLBACK_CLASS};
use crate::encoding::{encode_poisson, EncoderConfig, SpikeRaster};
use crate::error::{Error, Result};
use crate::faults::{build_fault_plan, enforce_faults, inject_faults, rank_important_columns, FaultPlan, FaultSpec};
use crate::network::{build_network, GMode, Granularity, Layer, Network, NetworkConfig};
use crate::plasticity::{apply_stdp, PlasticityParams, StdpTrace};
use crate::rng::{self, Stream};

/// Everything needed to reproduce one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialSpec {
    pub dataset: String,
    pub g_mode: GMode,
    pub granularity: Granularity,
    pub fault: FaultSpec,
    pub epochs: usize,
    pub seed: u64,
    pub test_fraction: f64,
    /// Input firing rate (Hz) for a feature value of 1.
    pub intensity: f64,
    /// `n_input` is overwritten with the dataset's column count.
    pub network: NetworkConfig,
    pub plasticity: PlasticityParams,
}

impl Default for TrialSpec {
    fn default() -> Self {
        Self {
            dataset: "wine".into(),
            g_mode: GMode::Static,
            granularity: Granularity::PerSynapse,
            fault: FaultSpec::none(),
            epochs: 1,
            seed: 0,
            test_fraction: 0.2,
            intensity: 500.0,
            network: NetworkConfig::default(),
            plasticity: PlasticityParams::default(),
        }
    }
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        self.fault.validate()?;
        self.plasticity.validate()?;
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        let mut cfg = self.network.clone();
        cfg.n_input = cfg.n_input.max(1);
        cfg.validate()?;
        self.encoder_config().validate()?;
        if !(0.0..1.0).contains(&self.test_fraction) || self.test_fraction == 0.0 {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            intensity: self.intensity,
            duration: self.network.sample_duration,
            dt: self.network.dt,
        }
    }

    pub fn with_v(mut self, v_ltp: f64, v_ltd: f64) -> Self {
        self.plasticity.v_ltp = v_ltp;
        self.plasticity.v_ltd = v_ltd;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpikeTotals {
    pub train_input: u64,
    pub train_excitatory: u64,
    pub train_inhibitory: u64,
    pub eval_excitatory: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// The spec with everything resolved (e.g. `network.n_input`).
    pub spec: TrialSpec,
    pub accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub n_train: usize,
    pub n_test: usize,
    pub wall_s: f64,
    pub fault_plan: FaultPlan,
    pub markers: Vec<Option<usize>>,
    pub spike_totals: SpikeTotals,
    /// Set when no neuron earned a marker; predictions then all use the fallback class.
    pub evaluation_error: Option<String>,
}

impl TrialRecord {
    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &TrialRecord) -> bool {
        TrialRecord { wall_s: 0.0, ..self.clone() } == TrialRecord { wall_s: 0.0, ..other.clone() }
    }
}

// Disjoint encoder sub-stream ranges for the three presentation phases.
const ASSIGN_OFFSET: u64 = 1 << 40;
const TEST_OFFSET: u64 = 2 << 40;

/// Drives one network through sample presentations.
pub struct Simulator {
    pub net: Network,
    pub params: PlasticityParams,
    pub encoder: EncoderConfig,
    trace: StdpTrace,
    seed: u64,
    pub totals: SpikeTotals,
}

impl Simulator {
    pub fn new(net: Network, params: PlasticityParams, encoder: EncoderConfig, seed: u64) -> Self {
        let trace = StdpTrace::for_network(&net, &params);
        Self {
            net,
            params,
            encoder,
            trace,
            seed,
            totals: SpikeTotals::default(),
        }
    }

    pub fn encode(&self, sample: &[f64], stream_index: u64) -> Result<SpikeRaster> {
        let mut rng = rng::substream(self.seed, Stream::Encoder, stream_index);
        encode_poisson(sample, &self.encoder, &mut rng)
    }

    /// Presents one encoded sample. With `learn`, STDP runs every step and
    /// stuck synapses are re-pinned afterwards. Returns excitatory spike counts.
    pub fn present(&mut self, raster: &SpikeRaster, learn: bool) -> Vec<u32> {
        self.net.reset_for_sample();
        self.net.set_learning(learn);
        self.trace.clear();
        let dt = self.net.config.dt;
        for k in 0..raster.n_steps() {
            let t = k as f64 * dt;
            let spikes = self.net.step(raster.at(k), t);
            if learn {
                apply_stdp(&mut self.net, &mut self.trace, &spikes, t, &self.params);
                enforce_faults(&mut self.net);
                debug_assert!(self.net.input_exc.check_bounds().is_ok());
            }
            for s in &spikes {
                match (s.layer, learn) {
                    (Layer::Input, true) => self.totals.train_input += 1,
                    (Layer::Excitatory, true) => self.totals.train_excitatory += 1,
                    (Layer::Inhibitory, true) => self.totals.train_inhibitory += 1,
                    (Layer::Excitatory, false) => self.totals.eval_excitatory += 1,
                    _ => {}
                }
            }
        }
        self.net.exc_spike_counts()
    }

    pub fn train(&mut self, train: &Dataset, epochs: usize) -> Result<()> {
        let n = train.len() as u64;
        for epoch in 0..epochs as u64 {
            for (s, row) in train.features.iter().enumerate() {
                let raster = self.encode(row, epoch * n + s as u64)?;
                self.present(&raster, true);
            }
        }
        Ok(())
    }

    /// Spike counts per sample with plasticity frozen.
    pub fn record_counts(&mut self, data: &Dataset, stream_offset: u64) -> Result<Vec<Vec<u32>>> {
        data.features
            .iter()
            .enumerate()
            .map(|(s, row)| {
                let raster = self.encode(row, stream_offset + s as u64)?;
                Ok(self.present(&raster, false))
            })
            .collect()
    }
}

/// Runs the full build, fault, train, assign and test pipeline.
pub fn run_trial(spec: &TrialSpec, dataset: &Dataset) -> Result<TrialRecord> {
    let started = Instant::now();
    spec.validate()?;
    if !dataset.is_normalized() {
        return Err(Error::Input(format!("dataset {} is not normalized to [0, 1]", dataset.name)));
    }
    let mut spec = spec.clone();
    spec.network.n_input = dataset.n_columns();

    let (train, test) = stratified_split(dataset, spec.test_fraction, spec.seed)?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Input("split produced an empty train or test set".into()));
    }
    let importance = rank_important_columns(&train.features);
    let cfg = &spec.network;
    let plan = build_fault_plan(&spec.fault, cfg.n_exc, cfg.n_input, Some(&importance), spec.seed)?;

    let mut net = build_network(cfg.clone(), spec.g_mode, spec.granularity, spec.seed)?;
    inject_faults(&mut net, &plan)?;

    let mut sim = Simulator::new(net, spec.plasticity.clone(), spec.encoder_config(), spec.seed);
    sim.train(&train, spec.epochs)?;

    let assign_counts = sim.record_counts(&train, ASSIGN_OFFSET)?;
    let markers = decoder::assign_markers(&assign_counts, &train.labels, dataset.n_classes)?;
    let test_counts = sim.record_counts(&test, TEST_OFFSET)?;
    let (predictions, evaluation_error) = predict_all(&test_counts, &markers);

    Ok(TrialRecord {
        accuracy: decoder::accuracy(&predictions, &test.labels),
        per_class_accuracy: decoder::per_class_accuracy(&predictions, &test.labels, dataset.n_classes),
        n_train: train.len(),
        n_test: test.len(),
        wall_s: started.elapsed().as_secs_f64(),
        fault_plan: plan,
        markers: markers.marker,
        spike_totals: sim.totals,
        evaluation_error,
        spec,
    })
}

fn predict_all(counts: &[Vec<u32>], markers: &MarkerMap) -> (Vec<usize>, Option<String>) {
    let mut error = None;
    let predictions = counts
        .iter()
        .map(|c| {
            decoder::classify(c, markers).unwrap_or_else(|e| {
                error.get_or_insert_with(|| e.to_string());
                FALLBACK_CLASS
            })
        })
        .collect();
    (predictions, error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::normalize_minmax;
    use crate::network::StuckAt;
    use crate::faults::PositionPolicy;

    /// Two well-separated classes over 6 columns.
    pub(crate) fn synthetic(n_per_class: usize) -> Dataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for s in 0..n_per_class {
            let jitter = (s % 5) as f64 * 0.02;
            features.push(vec![0.9 - jitter, 0.8, 0.85, 0.05, 0.1, jitter]);
            labels.push(0);
            features.push(vec![jitter, 0.1, 0.05, 0.9 - jitter, 0.85, 0.8]);
            labels.push(1);
        }
        normalize_minmax(&Dataset {
            name: "synthetic".into(),
            column_names: (0..6).map(|c| format!("c{c}")).collect(),
            features,
            labels,
            n_classes: 2,
            class_names: vec!["a".into(), "b".into()],
        })
    }

    fn spec() -> TrialSpec {
        TrialSpec {
            dataset: "synthetic".into(),
            network: NetworkConfig {
                sample_duration: 100.0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn trial_is_deterministic() {
        let ds = synthetic(20);
        let a = run_trial(&spec(), &ds).unwrap();
        let b = run_trial(&spec(), &ds).unwrap();
        assert!(a.same_result(&b));
        assert_eq!(a.spec.network.n_input, 6);
        assert!((0.0..=1.0).contains(&a.accuracy));
    }

    #[test]
    fn all_neurons_dead_gives_fallback_prevalence() {
        let ds = synthetic(20);
        let s = TrialSpec {
            fault: FaultSpec::neurons(1.0),
            ..spec()
        };
        let r = run_trial(&s, &ds).unwrap();
        assert!(r.evaluation_error.is_some());
        assert_eq!(r.spike_totals.train_excitatory, 0);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.markers, vec![None; 10]);
    }

    #[test]
    fn faults_survive_training() {
        let ds = synthetic(10);
        let s = TrialSpec {
            g_mode: GMode::Random,
            fault: FaultSpec::synapses(StuckAt::Sa1, PositionPolicy::Random, 0.5),
            ..spec()
        };
        let r = run_trial(&s, &ds).unwrap();
        assert_eq!(r.fault_plan.n_faulted_synapses(), 30);
    }

    #[test]
    fn rejects_unnormalized_data_and_bad_specs() {
        let mut ds = synthetic(5);
        ds.features[0][0] = 3.0;
        assert!(matches!(run_trial(&spec(), &ds), Err(Error::Input(_))));
        let bad = TrialSpec { epochs: 0, ..spec() };
        assert!(bad.validate().is_err());
        let bad = TrialSpec { test_fraction: 0.0, ..spec() };
        assert!(bad.validate().is_err());
    }
}
