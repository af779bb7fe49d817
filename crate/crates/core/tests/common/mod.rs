#![allow(dead_code)]

pub mod dd;

use std::path::PathBuf;

use memsnn::datasets::{load_dataset, normalize_minmax, Dataset};
use memsnn::encoding::EncoderConfig;
use memsnn::experiment::{run_trial, Simulator, TrialSpec};
use memsnn::faults::{build_fault_plan, inject_faults, FaultSpec};
use memsnn::network::{build_network, GMode, Granularity, Layer, NetworkConfig, SpikeRecord, StuckAt};
use memsnn::plasticity::{apply_stdp, ltd_delta, ltp_delta, LtdSignMode, PlasticityParams, StdpTrace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    std::env::var_os("MEMSNN_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

pub fn load(id: &str) -> Dataset {
    load_dataset(id, &data_dir()).unwrap_or_else(|e| panic!("loading {id} from {}: {e}", data_dir().display()))
}

/// Balanced dataset with one bright block of columns per class plus noise.
pub fn blocks(n_classes: usize, per_class: usize, seed: u64) -> Dataset {
    let width = 3;
    let d = n_classes * width;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..per_class {
        for c in 0..n_classes {
            let row = (0..d)
                .map(|k| {
                    let on = k / width == c;
                    let base = if on { 0.8 } else { 0.1 };
                    (base + rng.gen_range(-0.1..0.1f64)).clamp(0.0, 1.0)
                })
                .collect();
            features.push(row);
            labels.push(c);
        }
    }
    normalize_minmax(&Dataset {
        name: "blocks".into(),
        column_names: (0..d).map(|k| format!("f{k}")).collect(),
        features,
        labels,
        n_classes,
        class_names: (0..n_classes).map(|c| format!("c{c}")).collect(),
    })
}

pub fn small_config(n_input: usize) -> NetworkConfig {
    NetworkConfig {
        n_input,
        n_exc: 4,
        n_inh: 4,
        sample_duration: 60.0,
        ..Default::default()
    }
}

pub fn encoder(cfg: &NetworkConfig) -> EncoderConfig {
    EncoderConfig {
        intensity: 500.0,
        duration: cfg.sample_duration,
        dt: cfg.dt,
    }
}

/// Learning-rate large enough that weights hit their bounds within a burst.
pub fn plastic(v_ltp: f64, v_ltd: f64, mode: LtdSignMode) -> PlasticityParams {
    PlasticityParams {
        v_ltp,
        v_ltd,
        linear_rate: 0.01,
        ltd_sign_mode: mode,
        ..Default::default()
    }
}

fn random_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect()
}

/// Trains on random samples, checking weight bounds after every presentation.
pub fn check_weight_bounds(seed: u64, g_mode: GMode, p: PlasticityParams, samples: usize) -> Result<(), String> {
    let cfg = small_config(5);
    let net = build_network(cfg.clone(), g_mode, Granularity::PerSynapse, seed).map_err(|e| e.to_string())?;
    let mut sim = Simulator::new(net, p, encoder(&cfg), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for (s, row) in random_rows(&mut rng, samples, cfg.n_input).iter().enumerate() {
        let raster = sim.encode(row, s as u64).map_err(|e| e.to_string())?;
        sim.present(&raster, true);
        let syn = &sim.net.input_exc;
        for k in 0..syn.weights().len() {
            let (w, lo, hi) = (syn.weights()[k], syn.w_min()[k], syn.w_max()[k]);
            if !(lo..=hi).contains(&w) {
                return Err(format!("sample {s}: weight {k} = {w} outside [{lo}, {hi}]"));
            }
        }
        syn.check_bounds().map_err(|e| e.to_string())?;
    }
    Ok(())
}

/// Stuck synapses hold their value through training and evaluation.
pub fn check_fault_persistence(seed: u64, g_mode: GMode, spec: &FaultSpec, samples: usize) -> Result<(), String> {
    let cfg = small_config(6);
    let mut net = build_network(cfg.clone(), g_mode, Granularity::PerSynapse, seed).map_err(|e| e.to_string())?;
    let importance: Vec<usize> = (0..cfg.n_input).collect();
    let plan = build_fault_plan(spec, cfg.n_exc, cfg.n_input, Some(&importance), seed).map_err(|e| e.to_string())?;
    inject_faults(&mut net, &plan).map_err(|e| e.to_string())?;
    let expected = net.input_exc.n_faulted();
    let mut sim = Simulator::new(net, plastic(0.0, 0.0, LtdSignMode::EnforceRoleSign), encoder(&cfg), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfa17);
    for (s, row) in random_rows(&mut rng, samples, cfg.n_input).iter().enumerate() {
        let raster = sim.encode(row, s as u64).map_err(|e| e.to_string())?;
        sim.present(&raster, s % 3 != 2);
        let syn = &sim.net.input_exc;
        if syn.n_faulted() != expected {
            return Err(format!("fault count changed to {}", syn.n_faulted()));
        }
        for (k, mask) in syn.fault_mask().iter().enumerate() {
            let want = match mask {
                None => continue,
                Some(StuckAt::Sa0) => 0.0,
                Some(StuckAt::Sa1) => syn.w_max()[k],
            };
            if syn.weights()[k] != want {
                return Err(format!("sample {s}: stuck synapse {k} = {} (want {want})", syn.weights()[k]));
            }
        }
    }
    Ok(())
}

/// Dead excitatory neurons emit nothing, in training or evaluation.
pub fn check_dead_neurons_silent(seed: u64, ratio: f64, samples: usize) -> Result<(), String> {
    let cfg = NetworkConfig {
        n_exc: 10,
        n_inh: 10,
        ..small_config(6)
    };
    let mut net = build_network(cfg.clone(), GMode::Static, Granularity::PerSynapse, seed).map_err(|e| e.to_string())?;
    let plan = build_fault_plan(&FaultSpec::neurons(ratio), cfg.n_exc, cfg.n_input, None, seed)
        .map_err(|e| e.to_string())?;
    inject_faults(&mut net, &plan).map_err(|e| e.to_string())?;
    let dead = plan.resolved_neuron_indices.clone();
    let mut sim = Simulator::new(net, plastic(0.0, 0.0, LtdSignMode::EnforceRoleSign), encoder(&cfg), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdead);
    for (s, row) in random_rows(&mut rng, samples, cfg.n_input).iter().enumerate() {
        let row: Vec<f64> = row.iter().map(|x| 0.5 + 0.5 * x).collect();
        let raster = sim.encode(&row, s as u64).map_err(|e| e.to_string())?;
        let counts = sim.present(&raster, s % 2 == 0);
        for &j in &dead {
            if counts[j] != 0 {
                return Err(format!("dead neuron {j} fired {} times", counts[j]));
            }
            let st = &sim.net.exc[j];
            if st.v_m != cfg.rest_potential {
                return Err(format!("dead neuron {j} left rest: {}", st.v_m));
            }
        }
    }
    Ok(())
}

/// Two full trials from the same spec agree on every output except wall time.
pub fn check_determinism(seed: u64, g_mode: GMode, fault: FaultSpec) -> Result<(), String> {
    let ds = blocks(3, 8, seed);
    let spec = TrialSpec {
        dataset: "blocks".into(),
        g_mode,
        fault,
        seed,
        network: NetworkConfig {
            sample_duration: 50.0,
            ..Default::default()
        },
        ..Default::default()
    };
    let a = run_trial(&spec, &ds).map_err(|e| e.to_string())?;
    let b = run_trial(&spec, &ds).map_err(|e| e.to_string())?;
    if !a.same_result(&b) {
        return Err(format!("seed {seed}: trials differ ({} vs {})", a.accuracy, b.accuracy));
    }
    Ok(())
}

fn spike(layer: Layer, t: f64) -> SpikeRecord {
    SpikeRecord { time: t, layer, neuron_index: 0 }
}

/// Weight change on a one-input one-neuron network when the pre spike
/// precedes (LTP) or follows (LTD) the post spike by `gap` ms.
pub fn micro_change(gap: f64, ltp: bool) -> Result<f64, String> {
    let cfg = NetworkConfig {
        n_input: 1,
        n_exc: 1,
        n_inh: 1,
        ..Default::default()
    };
    let mut net = build_network(cfg, GMode::Static, Granularity::PerSynapse, 0).map_err(|e| e.to_string())?;
    net.input_exc.set_weight(0, 0, 0.5);
    let p = plastic(0.0, 0.0, LtdSignMode::EnforceRoleSign);
    let mut trace = StdpTrace::for_network(&net, &p);
    let (first, second) = if ltp { (Layer::Input, Layer::Excitatory) } else { (Layer::Excitatory, Layer::Input) };
    let t0 = 100.0;
    apply_stdp(&mut net, &mut trace, &[spike(first, t0)], t0, &p);
    let before = net.input_exc.weight(0, 0);
    let t = t0 + gap;
    apply_stdp(&mut net, &mut trace, &[spike(second, t)], t, &p);
    Ok(net.input_exc.weight(0, 0) - before)
}

/// Inside-window pairings change the weight; one step beyond does not.
pub fn check_window_boundary() -> Result<(), String> {
    let window = PlasticityParams::default().window;
    let dt = NetworkConfig::default().dt;
    for ltp in [true, false] {
        let edge = micro_change(window, ltp)?;
        let beyond = micro_change(window + dt, ltp)?;
        let sign = if ltp { 1.0 } else { -1.0 };
        if !(edge * sign > 0.0) {
            return Err(format!("ltp={ltp}: no update at the window edge ({edge})"));
        }
        if beyond != 0.0 {
            return Err(format!("ltp={ltp}: update {beyond} one step past the window"));
        }
    }
    Ok(())
}

/// Under role-sign enforcement LTP never decreases and LTD never increases
/// a weight, over a grid of non-linearity factors.
pub fn check_role_signs(grid: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for a in 0..=grid {
        for b in 0..=grid {
            let v_ltp = -3.0 + 6.0 * a as f64 / grid as f64;
            let v_ltd = -3.0 + 6.0 * b as f64 / grid as f64;
            if v_ltp == 0.0 || v_ltd == 0.0 {
                continue;
            }
            let p = plastic(v_ltp, v_ltd, LtdSignMode::EnforceRoleSign);
            let lo = rng.gen_range(0.0..0.5);
            let hi = rng.gen_range(0.5..=1.0);
            let w = rng.gen_range(lo..=hi);
            let gap = rng.gen_range(0.0..=p.window);
            let up = ltp_delta(w, 0.0, gap, (lo, hi), &p).map_err(|e| e.to_string())?;
            let down = ltd_delta(w, gap.max(1e-3), 0.0, (lo, hi), &p).map_err(|e| e.to_string())?;
            if up < 0.0 || down > 0.0 {
                return Err(format!("v=({v_ltp}, {v_ltd}) w={w}: ltp {up}, ltd {down}"));
            }
        }
    }
    Ok(())
}
