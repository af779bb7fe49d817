//! Poisson rate encoding of normalized feature vectors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncoderConfig {
    /// Firing rate in Hz of a feature at 1.0.
    pub intensity: f64,
    /// Presentation time in ms.
    pub duration: f64,
    pub dt: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            intensity: 500.0,
            duration: 350.0,
            dt: 1.0,
        }
    }
}

impl EncoderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0) || !self.intensity.is_finite() {
            return Err(Error::Config(format!("intensity must be >= 0, got {}", self.intensity)));
        }
        if !(self.dt > 0.0 && self.duration > 0.0) {
            return Err(Error::Config("encoder dt and duration must be > 0".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }
}

/// Input spikes for one presentation, indexed by time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    n_neurons: usize,
    steps: Vec<Vec<usize>>,
}

impl SpikeRaster {
    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    /// Input neurons firing at step `k`.
    pub fn at(&self, k: usize) -> &[usize] {
        &self.steps[k]
    }

    pub fn counts(&self) -> Vec<u32> {
        let mut c = vec![0; self.n_neurons];
        for step in &self.steps {
            for &i in step {
                c[i] += 1;
            }
        }
        c
    }

    /// Spike times (ms) of every neuron.
    pub fn spike_times(&self, dt: f64) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new(); self.n_neurons];
        for (k, step) in self.steps.iter().enumerate() {
            for &i in step {
                out[i].push(k as f64 * dt);
            }
        }
        out
    }

    pub fn total(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }
}

/// Bernoulli-per-step approximation of independent Poisson processes with
/// rate `x_i * intensity` Hz. Exactly one uniform is drawn per
/// (step, neuron) pair regardless of the feature values.
pub fn encode_poisson<R: Rng + ?Sized>(sample: &[f64], cfg: &EncoderConfig, rng: &mut R) -> Result<SpikeRaster> {
    cfg.validate()?;
    if let Some((i, x)) = sample.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Input(format!("feature {i} = {x} outside [0, 1]")));
    }
    let probs: Vec<f64> = sample
        .iter()
        .map(|x| (x * cfg.intensity * cfg.dt / 1000.0).min(1.0))
        .collect();
    let steps = (0..cfg.steps())
        .map(|_| {
            probs
                .iter()
                .enumerate()
                .filter_map(|(i, &p)| (rng.gen::<f64>() < p).then_some(i))
                .collect()
        })
        .collect();
    Ok(SpikeRaster {
        n_neurons: sample.len(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_feature_is_silent() {
        let cfg = EncoderConfig::default();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let r = encode_poisson(&[0.0, 1.0, 0.0], &cfg, &mut rng).unwrap();
            let c = r.counts();
            assert_eq!(c[0], 0);
            assert_eq!(c[2], 0);
            assert!(c[1] > 0);
        }
    }

    #[test]
    fn deterministic_by_seed() {
        let cfg = EncoderConfig::default();
        let x = [0.3, 0.9, 0.5];
        let a = encode_poisson(&x, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = encode_poisson(&x, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn spike_times_inside_window() {
        let cfg = EncoderConfig::default();
        let r = encode_poisson(&[1.0; 4], &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(r.n_steps(), 350);
        for times in r.spike_times(cfg.dt) {
            assert!(times.iter().all(|&t| (0.0..350.0).contains(&t)));
        }
    }

    #[test]
    fn out_of_range_feature_rejected() {
        let cfg = EncoderConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(encode_poisson(&[1.2], &cfg, &mut rng), Err(Error::Input(_))));
        assert!(encode_poisson(&[f64::NAN], &cfg, &mut rng).is_err());
        let bad = EncoderConfig {
            intensity: -1.0,
            ..cfg
        };
        assert!(encode_poisson(&[0.5], &bad, &mut rng).is_err());
    }

    #[test]
    fn saturated_probability() {
        let cfg = EncoderConfig {
            intensity: 5000.0,
            ..Default::default()
        };
        let r = encode_poisson(&[1.0], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(r.total(), 350);
    }
}
