//! Memristive STDP.
//!
//! On every excitatory spike, each input spike seen within the last
//! `window` ms potentiates its synapse once (LTP). On every input spike,
//! if the post neuron's most recent earlier spike lies within `window` ms,
//! the synapse is depressed once (LTD). Update sizes follow the non-linear
//! conductance model
//!
//! ```text
//! alpha = (w_max - w_min) / (1 - e^-v)
//! LTP:  dw =  window/(gap+1) * (alpha + w_min - w) * (1 - e^(-beta*v_ltp/256))
//! LTD:  dw = -window/(gap+1) * (alpha - w_max + w) * (1 - e^(v_ltd/256))
//! ```
//!
//! with a constant-step linear rule when the relevant `v` is zero.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Layer, Network, SpikeRecord};

const TIME_EPS: f64 = 1e-9;

/// Sign handling for the LTD equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LtdSignMode {
    /// LTP magnitudes are applied as increases and LTD magnitudes as decreases.
    #[default]
    EnforceRoleSign,
    /// The equations are applied exactly as written, whatever sign results.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlasticityParams {
    pub v_ltp: f64,
    pub v_ltd: f64,
    pub beta: f64,
    /// STDP window in ms.
    pub window: f64,
    /// Step size of the linear rule used when `v` is 0.
    pub linear_rate: f64,
    pub ltd_sign_mode: LtdSignMode,
}

impl Default for PlasticityParams {
    fn default() -> Self {
        Self {
            v_ltp: 0.0,
            v_ltd: 0.0,
            beta: 1.0,
            window: 50.0,
            linear_rate: 1e-6,
            ltd_sign_mode: LtdSignMode::EnforceRoleSign,
        }
    }
}

impl PlasticityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0) {
            return Err(Error::Config(format!("window must be > 0, got {}", self.window)));
        }
        if !(self.linear_rate > 0.0) {
            return Err(Error::Config(format!(
                "linear_rate must be > 0, got {}",
                self.linear_rate
            )));
        }
        for (name, v) in [("v_ltp", self.v_ltp), ("v_ltd", self.v_ltd)] {
            if !(-3.0..=3.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [-3, 3], got {v}")));
            }
        }
        if !self.beta.is_finite() {
            return Err(Error::Config("beta must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Ltp,
    Ltd,
}

/// Conductance-range scale of the non-linear update.
pub fn compute_alpha(v: f64, w_min: f64, w_max: f64) -> Result<f64> {
    if v == 0.0 {
        return Err(Error::Singularity);
    }
    Ok(alpha(v, w_min, w_max))
}

#[inline]
fn alpha(v: f64, w_min: f64, w_max: f64) -> f64 {
    // 1 - e^-v, without cancellation for small |v|
    (w_max - w_min) / -(-v).exp_m1()
}

#[inline]
fn ltp_raw(w: f64, gap: f64, (w_min, w_max): (f64, f64), p: &PlasticityParams) -> f64 {
    let a = alpha(p.v_ltp, w_min, w_max);
    let shape = -(-p.beta * p.v_ltp / 256.0).exp_m1();
    p.window / (gap + 1.0) * (a + w_min - w) * shape
}

#[inline]
fn ltd_raw(w: f64, gap: f64, (w_min, w_max): (f64, f64), p: &PlasticityParams) -> f64 {
    let a = alpha(p.v_ltd, w_min, w_max);
    let shape = -(p.v_ltd / 256.0).exp_m1();
    -p.window / (gap + 1.0) * (a - w_max + w) * shape
}

fn check_gap(gap: f64, p: &PlasticityParams, allow_zero: bool) -> Result<()> {
    let low_ok = if allow_zero { gap >= -TIME_EPS } else { gap > TIME_EPS };
    if !low_ok || gap > p.window + TIME_EPS {
        return Err(Error::Input(format!(
            "spike gap {gap} ms outside the STDP window (0, {}]",
            p.window
        )));
    }
    Ok(())
}

/// Potentiation for a pre spike at `t_pre` followed by a post spike at `t_post`.
pub fn ltp_delta(w: f64, t_pre: f64, t_post: f64, bounds: (f64, f64), p: &PlasticityParams) -> Result<f64> {
    let gap = t_post - t_pre;
    check_gap(gap, p, true)?;
    if p.v_ltp == 0.0 {
        return Err(Error::Singularity);
    }
    let dw = ltp_raw(w, gap, bounds, p);
    Ok(match p.ltd_sign_mode {
        LtdSignMode::EnforceRoleSign => dw.abs(),
        LtdSignMode::AsPrinted => dw,
    })
}

/// Depression for a post spike at `t_post` followed by a pre spike at `t_pre`.
pub fn ltd_delta(w: f64, t_pre: f64, t_post: f64, bounds: (f64, f64), p: &PlasticityParams) -> Result<f64> {
    let gap = t_pre - t_post;
    check_gap(gap, p, false)?;
    if p.v_ltd == 0.0 {
        return Err(Error::Singularity);
    }
    let dw = ltd_raw(w, gap, bounds, p);
    Ok(match p.ltd_sign_mode {
        LtdSignMode::EnforceRoleSign => -dw.abs(),
        LtdSignMode::AsPrinted => dw,
    })
}

/// Constant-drive update used when the role's `v` is zero.
pub fn linear_delta(role: Role, t_gap: f64, p: &PlasticityParams) -> f64 {
    let magnitude = p.linear_rate * p.window / (t_gap + 1.0);
    match role {
        Role::Ltp => magnitude,
        Role::Ltd => -magnitude,
    }
}

/// Update for one qualifying spike pair, choosing the linear or
/// non-linear rule from the role's `v`. The gap is not re-checked.
#[inline]
pub fn weight_delta(role: Role, w: f64, gap: f64, bounds: (f64, f64), p: &PlasticityParams) -> f64 {
    let (v, raw): (f64, fn(f64, f64, (f64, f64), &PlasticityParams) -> f64) = match role {
        Role::Ltp => (p.v_ltp, ltp_raw),
        Role::Ltd => (p.v_ltd, ltd_raw),
    };
    if v == 0.0 {
        return linear_delta(role, gap, p);
    }
    let dw = raw(w, gap, bounds, p);
    match (p.ltd_sign_mode, role) {
        (LtdSignMode::AsPrinted, _) => dw,
        (LtdSignMode::EnforceRoleSign, Role::Ltp) => dw.abs(),
        (LtdSignMode::EnforceRoleSign, Role::Ltd) => -dw.abs(),
    }
}

/// Spike memory needed by STDP: input spike times inside the window and
/// each excitatory neuron's most recent spike.
#[derive(Debug, Clone, PartialEq)]
pub struct StdpTrace {
    window: f64,
    input_times: Vec<VecDeque<f64>>,
    last_post: Vec<Option<f64>>,
}

impl StdpTrace {
    pub fn new(n_input: usize, n_exc: usize, window: f64) -> Self {
        Self {
            window,
            input_times: vec![VecDeque::new(); n_input],
            last_post: vec![None; n_exc],
        }
    }

    pub fn for_network(net: &Network, p: &PlasticityParams) -> Self {
        Self::new(net.config.n_input, net.config.n_exc, p.window)
    }

    pub fn clear(&mut self) {
        self.input_times.iter_mut().for_each(VecDeque::clear);
        self.last_post.iter_mut().for_each(|t| *t = None);
    }

    pub fn last_post(&self, neuron: usize) -> Option<f64> {
        self.last_post[neuron]
    }

    pub fn input_times(&self, input: usize) -> impl Iterator<Item = f64> + '_ {
        self.input_times[input].iter().copied()
    }
}

/// Applies one step of STDP for the spikes emitted at time `t`, then folds
/// those spikes into `trace`. Faulted synapses are never changed.
pub fn apply_stdp(
    net: &mut Network,
    trace: &mut StdpTrace,
    spikes_now: &[SpikeRecord],
    t: f64,
    p: &PlasticityParams,
) {
    let horizon = t - p.window - TIME_EPS;
    for s in spikes_now.iter().filter(|s| s.layer == Layer::Input) {
        trace.input_times[s.neuron_index].push_back(s.time);
    }
    for times in trace.input_times.iter_mut() {
        while times.front().is_some_and(|&tp| tp < horizon) {
            times.pop_front();
        }
    }

    let syn = &mut net.input_exc;
    for post in spikes_now.iter().filter(|s| s.layer == Layer::Excitatory) {
        let j = post.neuron_index;
        for (i, times) in trace.input_times.iter().enumerate() {
            if syn.mask(i, j).is_some() {
                continue;
            }
            for &t_pre in times {
                let gap = t - t_pre;
                let dw = weight_delta(Role::Ltp, syn.weight(i, j), gap, syn.bounds(i, j), p);
                syn.adjust(i, j, dw);
            }
        }
    }

    for pre in spikes_now.iter().filter(|s| s.layer == Layer::Input) {
        let i = pre.neuron_index;
        for (j, last) in trace.last_post.iter().enumerate() {
            let Some(t_post) = *last else { continue };
            let gap = t - t_post;
            if gap <= TIME_EPS || gap > p.window + TIME_EPS || syn.mask(i, j).is_some() {
                continue;
            }
            let dw = weight_delta(Role::Ltd, syn.weight(i, j), gap, syn.bounds(i, j), p);
            syn.adjust(i, j, dw);
        }
    }

    for s in spikes_now.iter().filter(|s| s.layer == Layer::Excitatory) {
        trace.last_post[s.neuron_index] = Some(s.time);
    }
}
