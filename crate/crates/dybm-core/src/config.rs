//! Run configuration: a JSON file mirroring TrainConfig. Unknown fields are
//! rejected so typos fail loudly instead of silently training with defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DybmError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub decay_rates: Vec<f64>,
    pub delay: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Discount γ for the hidden-unit φ accumulator.
    pub discount: f64,
    /// Gibbs sweeps per CD negative sample (rtrbm).
    pub cd_steps: usize,
    pub hidden_units: usize,
    pub sigma_init: f64,
    /// Scale η by 1/√t during training.
    pub eta_decay: bool,
    /// Hidden-unit φ update without the recursive approximation (O(t) per step).
    pub exact_phi: bool,
    /// RTRBM negative phase by enumeration instead of CD sampling.
    pub exact_negative: bool,
    pub esn: EsnSettings,
    pub kernel: KernelSettings,
    pub landmark_count: usize,
    /// Explicit landmark coordinates; a uniform grid over `domain` otherwise.
    pub landmarks: Option<Vec<Vec<f64>>>,
    /// Box domain for the functional model, one [lo, hi] per coordinate.
    pub domain: Vec<[f64; 2]>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            decay_rates: vec![0.5],
            delay: 2,
            epochs: 1,
            seed: 0,
            discount: 0.9,
            cd_steps: 1,
            hidden_units: 4,
            sigma_init: 1.0,
            eta_decay: false,
            exact_phi: false,
            exact_negative: false,
            esn: EsnSettings::default(),
            kernel: KernelSettings::default(),
            landmark_count: 10,
            landmarks: None,
            domain: vec![[0.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EsnSettings {
    pub size: usize,
    pub leak: f64,
    pub spectral_radius: f64,
}

impl Default for EsnSettings {
    fn default() -> Self {
        EsnSettings { size: 64, leak: 0.5, spectral_radius: 0.9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSettings {
    /// RBF bandwidth; median pairwise landmark distance when absent.
    pub bandwidth: Option<f64>,
    /// Observation noise σ² added on the kernel diagonal.
    pub noise: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        KernelSettings { bandwidth: None, noise: 0.01 }
    }
}

impl TrainConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: TrainConfig = serde_json::from_str(&text)
            .map_err(|e| DybmError::Config(format!("{}: {}", path.display(), e)))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(DybmError::Config(msg.into()))
            }
        }
        check(
            self.learning_rate.is_finite() && self.learning_rate > 0.0,
            "learning_rate must be positive and finite",
        )?;
        for &rate in &self.decay_rates {
            check(
                (0.0..1.0).contains(&rate),
                "decay_rates must lie in [0, 1) so traces converge",
            )?;
        }
        check(self.delay >= 1, "delay must be at least 1")?;
        check(self.epochs >= 1, "epochs must be at least 1")?;
        check((0.0..1.0).contains(&self.discount), "discount must lie in [0, 1)")?;
        check(self.cd_steps >= 1, "cd_steps must be at least 1")?;
        check(
            self.sigma_init.is_finite() && self.sigma_init > 0.0,
            "sigma_init must be positive and finite",
        )?;
        check(self.esn.size >= 1, "esn.size must be at least 1")?;
        check(
            self.esn.leak > 0.0 && self.esn.leak < 1.0,
            "esn.leak must lie in (0, 1)",
        )?;
        check(
            self.esn.spectral_radius > 0.0 && self.esn.spectral_radius < 1.0,
            "esn.spectral_radius must lie in (0, 1)",
        )?;
        if let Some(h) = self.kernel.bandwidth {
            check(h.is_finite() && h > 0.0, "kernel.bandwidth must be positive")?;
        }
        check(
            self.kernel.noise.is_finite() && self.kernel.noise > 0.0,
            "kernel.noise must be positive",
        )?;
        check(self.landmark_count >= 1, "landmark_count must be at least 1")?;
        check(
            !self.domain.is_empty() && self.domain.len() <= 2,
            "domain must have 1 or 2 coordinates",
        )?;
        for bounds in &self.domain {
            check(
                bounds[0].is_finite() && bounds[1].is_finite() && bounds[0] < bounds[1],
                "each domain interval needs lo < hi",
            )?;
        }
        if let Some(points) = &self.landmarks {
            check(!points.is_empty(), "landmarks must be non-empty when given")?;
            for p in points {
                check(
                    p.len() == self.domain.len(),
                    "each landmark needs one coordinate per domain dimension",
                )?;
            }
        }
        Ok(())
    }
}
