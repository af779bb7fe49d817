//! Three-layer LIF network: Poisson input layer, excitatory layer with
//! adaptive thresholds, and an inhibitory layer providing lateral
//! suppression. Advanced with forward Euler at a fixed `dt`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Neuron, timing and wiring parameters. Potentials in mV, times in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkConfig {
    pub n_input: usize,
    pub n_exc: usize,
    pub n_inh: usize,
    pub dt: f64,
    pub sample_duration: f64,
    pub rest_potential: f64,
    pub reset_potential: f64,
    /// Base of the excitatory adaptive threshold.
    pub v_thres_exc: f64,
    pub v_thres_inh: f64,
    pub tau_m_exc: f64,
    pub tau_m_inh: f64,
    pub tau_theta: f64,
    pub theta_plus: f64,
    pub refractory_exc: f64,
    pub refractory_inh: f64,
    /// Scale applied to every weighted spike sum before integration.
    pub resistance: f64,
    pub w_exc_to_inh: f64,
    pub w_inh_to_exc: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_input: 30,
            n_exc: 10,
            n_inh: 10,
            dt: 1.0,
            sample_duration: 350.0,
            rest_potential: -65.0,
            reset_potential: -65.0,
            v_thres_exc: -52.0,
            v_thres_inh: -40.0,
            tau_m_exc: 100.0,
            tau_m_inh: 10.0,
            tau_theta: 1e7,
            theta_plus: 0.01,
            refractory_exc: 5.0,
            refractory_inh: 2.0,
            resistance: 100.0,
            w_exc_to_inh: 22.5,
            w_inh_to_exc: -17.5,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.n_input == 0 || self.n_exc == 0 {
            return bad("layer sizes must be positive");
        }
        if self.n_exc != self.n_inh {
            return bad("n_exc must equal n_inh");
        }
        let positive = [
            ("dt", self.dt),
            ("sample_duration", self.sample_duration),
            ("tau_m_exc", self.tau_m_exc),
            ("tau_m_inh", self.tau_m_inh),
            ("tau_theta", self.tau_theta),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0, got {value}")));
            }
        }
        let steps = self.sample_duration / self.dt;
        if (steps - steps.round()).abs() > 1e-9 {
            return bad("sample_duration must be an integer multiple of dt");
        }
        if !(self.reset_potential <= self.rest_potential
            && self.rest_potential < self.v_thres_exc
            && self.rest_potential < self.v_thres_inh)
        {
            return bad("potentials must satisfy reset <= rest < thresholds");
        }
        if self.refractory_exc < 0.0 || self.refractory_inh < 0.0 || self.theta_plus < 0.0 {
            return bad("refractory periods and theta_plus must be non-negative");
        }
        Ok(())
    }

    /// Number of simulation steps per presented sample.
    pub fn steps_per_sample(&self) -> usize {
        (self.sample_duration / self.dt).round() as usize
    }

    pub fn excitatory_params(&self) -> LifParams {
        LifParams {
            rest: self.rest_potential,
            reset: self.reset_potential,
            tau_m: self.tau_m_exc,
            refractory: self.refractory_exc,
            dt: self.dt,
            threshold: Threshold::Adaptive,
        }
    }

    pub fn inhibitory_params(&self) -> LifParams {
        LifParams {
            rest: self.rest_potential,
            reset: self.reset_potential,
            tau_m: self.tau_m_inh,
            refractory: self.refractory_inh,
            dt: self.dt,
            threshold: Threshold::Fixed(self.v_thres_inh),
        }
    }
}

/// How synapse conductance bounds are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GMode {
    /// Every synapse bounded by [0, 1].
    Static,
    /// w_min ~ U[0, 0.5), w_max ~ U[0.5, 1].
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    PerSynapse,
    /// One bound pair per excitatory neuron, shared by all its input synapses.
    PerNeuron,
}

impl std::fmt::Display for GMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GMode::Static => "static",
            GMode::Random => "random",
        })
    }
}

impl std::fmt::Display for Granularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Granularity::PerSynapse => "per_synapse",
            Granularity::PerNeuron => "per_neuron",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// Use the neuron's own `theta`.
    Adaptive,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams {
    pub rest: f64,
    pub reset: f64,
    pub tau_m: f64,
    pub refractory: f64,
    pub dt: f64,
    pub threshold: Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronState {
    pub v_m: f64,
    pub theta: f64,
    pub refractory_remaining: f64,
    pub is_fault: bool,
    pub spike_count_current_sample: u32,
}

impl NeuronState {
    pub fn at_rest(rest: f64, theta: f64) -> Self {
        Self {
            v_m: rest,
            theta,
            refractory_remaining: 0.0,
            is_fault: false,
            spike_count_current_sample: 0,
        }
    }
}

/// Advances one neuron by a single step. Returns whether it spiked.
///
/// `input_current` is the already-scaled weighted spike sum for this step.
pub fn lif_step(state: &mut NeuronState, input_current: f64, p: &LifParams) -> bool {
    if state.is_fault {
        state.v_m = p.rest;
        return false;
    }
    if state.refractory_remaining > 0.0 {
        state.refractory_remaining = (state.refractory_remaining - p.dt).max(0.0);
        return false;
    }
    state.v_m += (p.dt / p.tau_m) * (-(state.v_m - p.rest) + input_current);
    let threshold = match p.threshold {
        Threshold::Adaptive => state.theta,
        Threshold::Fixed(v) => v,
    };
    if state.v_m >= threshold {
        state.v_m = p.reset;
        state.refractory_remaining = p.refractory;
        state.spike_count_current_sample += 1;
        true
    } else {
        false
    }
}

/// Adaptive threshold update: decay toward `v_thres_exc` plus a jump of
/// `theta_plus` on a spike.
pub fn theta_step(theta: f64, spiked: bool, config: &NetworkConfig) -> f64 {
    let decayed = theta + (config.dt / config.tau_theta) * (config.v_thres_exc - theta);
    if spiked {
        decayed + config.theta_plus
    } else {
        decayed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Input,
    Excitatory,
    Inhibitory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    pub time: f64,
    pub layer: Layer,
    pub neuron_index: usize,
}

/// Stuck-at fault pinned on a synapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StuckAt {
    /// Weight fixed at 0: the synapse blocks every spike.
    Sa0,
    /// Weight fixed at the synapse's own `w_max`.
    Sa1,
}

impl std::fmt::Display for StuckAt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StuckAt::Sa0 => "sa0",
            StuckAt::Sa1 => "sa1",
        })
    }
}

/// Dense `n_pre x n_post` plastic weights, stored row-major by pre neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynapseMatrix {
    n_pre: usize,
    n_post: usize,
    w: Vec<f64>,
    w_min: Vec<f64>,
    w_max: Vec<f64>,
    fault_mask: Vec<Option<StuckAt>>,
}

impl SynapseMatrix {
    pub fn new(n_pre: usize, n_post: usize, w_min: Vec<f64>, w_max: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        let n = n_pre * n_post;
        if w_min.len() != n || w_max.len() != n || w.len() != n {
            return Err(Error::Config(format!(
                "synapse matrix buffers must hold {n_pre}x{n_post} values"
            )));
        }
        let m = Self {
            n_pre,
            n_post,
            w,
            w_min,
            w_max,
            fault_mask: vec![None; n],
        };
        m.check_bounds()?;
        Ok(m)
    }

    #[inline]
    fn idx(&self, pre: usize, post: usize) -> usize {
        pre * self.n_post + post
    }

    pub fn n_pre(&self) -> usize {
        self.n_pre
    }

    pub fn n_post(&self) -> usize {
        self.n_post
    }

    #[inline]
    pub fn weight(&self, pre: usize, post: usize) -> f64 {
        self.w[self.idx(pre, post)]
    }

    #[inline]
    pub fn bounds(&self, pre: usize, post: usize) -> (f64, f64) {
        let k = self.idx(pre, post);
        (self.w_min[k], self.w_max[k])
    }

    #[inline]
    pub fn mask(&self, pre: usize, post: usize) -> Option<StuckAt> {
        self.fault_mask[self.idx(pre, post)]
    }

    /// Weight seen by spikes crossing the synapse, honoring the fault mask.
    #[inline]
    pub fn effective_weight(&self, pre: usize, post: usize) -> f64 {
        let k = self.idx(pre, post);
        match self.fault_mask[k] {
            None => self.w[k],
            Some(StuckAt::Sa0) => 0.0,
            Some(StuckAt::Sa1) => self.w_max[k],
        }
    }

    /// Row of weights leaving one pre-synaptic neuron.
    pub fn row(&self, pre: usize) -> &[f64] {
        &self.w[pre * self.n_post..(pre + 1) * self.n_post]
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn w_min(&self) -> &[f64] {
        &self.w_min
    }

    pub fn w_max(&self) -> &[f64] {
        &self.w_max
    }

    pub fn fault_mask(&self) -> &[Option<StuckAt>] {
        &self.fault_mask
    }

    /// Adds `delta` and clamps into the synapse's bounds. Masked synapses are
    /// left alone. Returns the applied change.
    #[inline]
    pub fn adjust(&mut self, pre: usize, post: usize, delta: f64) -> f64 {
        let k = self.idx(pre, post);
        if self.fault_mask[k].is_some() {
            return 0.0;
        }
        let old = self.w[k];
        let new = (old + delta).clamp(self.w_min[k], self.w_max[k]);
        self.w[k] = new;
        new - old
    }

    pub fn set_weight(&mut self, pre: usize, post: usize, value: f64) {
        let k = self.idx(pre, post);
        self.w[k] = value.clamp(self.w_min[k], self.w_max[k]);
    }

    /// Marks a synapse as stuck and pins its weight.
    pub fn pin(&mut self, pre: usize, post: usize, fault: StuckAt) {
        let k = self.idx(pre, post);
        self.fault_mask[k] = Some(fault);
        self.repin(k);
    }

    fn repin(&mut self, k: usize) {
        match self.fault_mask[k] {
            None => {}
            // SA0 reads 0 even when a random-G lower bound is above 0.
            Some(StuckAt::Sa0) => self.w[k] = 0.0,
            Some(StuckAt::Sa1) => self.w[k] = self.w_max[k],
        }
    }

    /// Re-pins every masked synapse to its stuck value.
    pub fn enforce_mask(&mut self) {
        for k in 0..self.w.len() {
            self.repin(k);
        }
    }

    pub fn n_faulted(&self) -> usize {
        self.fault_mask.iter().filter(|m| m.is_some()).count()
    }

    /// Checks the bound and stuck-value invariants for every synapse.
    pub fn check_bounds(&self) -> Result<()> {
        for k in 0..self.w.len() {
            let (lo, hi, w) = (self.w_min[k], self.w_max[k], self.w[k]);
            let ok = match self.fault_mask[k] {
                None => lo <= w && w <= hi,
                Some(StuckAt::Sa0) => w == 0.0,
                Some(StuckAt::Sa1) => w == hi,
            };
            if !ok || lo > hi {
                return Err(Error::Evaluation(format!(
                    "synapse ({}, {}) violates bounds: w = {w}, [{lo}, {hi}], mask {:?}",
                    k / self.n_post,
                    k % self.n_post,
                    self.fault_mask[k]
                )));
            }
        }
        Ok(())
    }
}

/// Full mutable simulation state.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub config: NetworkConfig,
    pub g_mode: GMode,
    pub granularity: Granularity,
    pub exc: Vec<NeuronState>,
    pub inh: Vec<NeuronState>,
    pub input_exc: SynapseMatrix,
    /// Inhibitory spikes of the previous step, applied to excitatory
    /// neurons on the next one.
    inh_spiked_prev: Vec<bool>,
    learning: bool,
    exc_params: LifParams,
    inh_params: LifParams,
}

/// Builds a network with freshly drawn conductance bounds and weights.
pub fn build_network(
    config: NetworkConfig,
    g_mode: GMode,
    granularity: Granularity,
    rng_seed: u64,
) -> Result<Network> {
    config.validate()?;
    let (n_in, n_exc) = (config.n_input, config.n_exc);
    let n = n_in * n_exc;
    let mut rng = rng::stream(rng_seed, Stream::Weights);

    let (w_min, w_max) = match (g_mode, granularity) {
        (GMode::Static, _) => (vec![0.0; n], vec![1.0; n]),
        (GMode::Random, Granularity::PerSynapse) => {
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for _ in 0..n {
                lo.push(rng.gen_range(0.0..0.5));
                hi.push(rng.gen_range(0.5..=1.0));
            }
            (lo, hi)
        }
        (GMode::Random, Granularity::PerNeuron) => {
            let per_neuron: Vec<(f64, f64)> = (0..n_exc)
                .map(|_| (rng.gen_range(0.0..0.5), rng.gen_range(0.5..=1.0)))
                .collect();
            let lo = (0..n).map(|k| per_neuron[k % n_exc].0).collect();
            let hi = (0..n).map(|k| per_neuron[k % n_exc].1).collect();
            (lo, hi)
        }
    };
    let w = w_min
        .iter()
        .zip(&w_max)
        .map(|(&lo, &hi)| rng.gen_range(lo..=hi))
        .collect();
    let input_exc = SynapseMatrix::new(n_in, n_exc, w_min, w_max, w)?;

    let exc = vec![NeuronState::at_rest(config.rest_potential, config.v_thres_exc); n_exc];
    let inh = vec![NeuronState::at_rest(config.rest_potential, config.v_thres_inh); config.n_inh];
    Ok(Network {
        exc_params: config.excitatory_params(),
        inh_params: config.inhibitory_params(),
        inh_spiked_prev: vec![false; config.n_inh],
        config,
        g_mode,
        granularity,
        exc,
        inh,
        input_exc,
        learning: true,
    })
}

impl Network {
    /// Enables or freezes adaptive-threshold updates. Weight plasticity is
    /// driven separately by the caller.
    pub fn set_learning(&mut self, on: bool) {
        self.learning = on;
    }

    pub fn is_learning(&self) -> bool {
        self.learning
    }

    /// Advances the network by one step at time `t`, given the input
    /// neurons firing now. Returns every spike emitted this step.
    pub fn step(&mut self, input_spikes: &[usize], t: f64) -> Vec<SpikeRecord> {
        let cfg = &self.config;
        let n_exc = cfg.n_exc;
        let mut spikes: Vec<SpikeRecord> = input_spikes
            .iter()
            .map(|&i| SpikeRecord {
                time: t,
                layer: Layer::Input,
                neuron_index: i,
            })
            .collect();

        let mut drive = vec![0.0; n_exc];
        for &i in input_spikes {
            for (j, d) in drive.iter_mut().enumerate() {
                *d += self.input_exc.effective_weight(i, j);
            }
        }
        // Lateral suppression from last step's inhibitory spikes, skipping
        // each inhibitory neuron's own partner.
        let inh_total = self.inh_spiked_prev.iter().filter(|&&s| s).count();
        if inh_total > 0 {
            for (j, d) in drive.iter_mut().enumerate() {
                let n = inh_total - usize::from(self.inh_spiked_prev[j]);
                *d += n as f64 * cfg.w_inh_to_exc;
            }
        }

        let mut exc_spiked = vec![false; n_exc];
        for (j, neuron) in self.exc.iter_mut().enumerate() {
            let spiked = lif_step(neuron, cfg.resistance * drive[j], &self.exc_params);
            if self.learning && !neuron.is_fault {
                neuron.theta = theta_step(neuron.theta, spiked, cfg);
            }
            if spiked {
                exc_spiked[j] = true;
                spikes.push(SpikeRecord {
                    time: t,
                    layer: Layer::Excitatory,
                    neuron_index: j,
                });
            }
        }

        for (k, neuron) in self.inh.iter_mut().enumerate() {
            let current = if exc_spiked[k] { cfg.resistance * cfg.w_exc_to_inh } else { 0.0 };
            let spiked = lif_step(neuron, current, &self.inh_params);
            self.inh_spiked_prev[k] = spiked;
            if spiked {
                spikes.push(SpikeRecord {
                    time: t,
                    layer: Layer::Inhibitory,
                    neuron_index: k,
                });
            }
        }
        spikes
    }

    /// Clears transient state between samples. Thresholds and weights are
    /// the learned state and persist.
    pub fn reset_for_sample(&mut self) {
        let rest = self.config.rest_potential;
        for n in self.exc.iter_mut().chain(self.inh.iter_mut()) {
            n.v_m = rest;
            n.refractory_remaining = 0.0;
            n.spike_count_current_sample = 0;
        }
        self.inh_spiked_prev.iter_mut().for_each(|s| *s = false);
    }

    pub fn exc_spike_counts(&self) -> Vec<u32> {
        self.exc.iter().map(|n| n.spike_count_current_sample).collect()
    }

    pub fn thetas(&self) -> Vec<f64> {
        self.exc.iter().map(|n| n.theta).collect()
    }
}
