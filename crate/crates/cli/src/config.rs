//! The JSON run configuration. Every field has a default; unknown keys are
//! rejected. Command-line flags override the file.

use std::path::{Path, PathBuf};

use alphaforge_core::alphashape::SMOOTH_ACTIONS;
use alphaforge_core::refine::{RefineConfig, TaubinConfig};
use alphaforge_core::sampling::{METRIC_SAMPLES, REWARD_SAMPLES};
use alphaforge_core::synth::Shape;
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Base seed; each component adds a fixed offset (see [`SeedOffset`]).
    pub seed: u64,
    /// Threshold used when no policy is given.
    pub tau: f64,
    /// Policy JSON used instead of `tau` when present.
    pub policy: Option<PathBuf>,
    pub synth: SynthConfig,
    /// Points drawn by `sample`.
    pub samples: usize,
    pub taubin: TaubinConfig,
    pub refine: RefineConfig,
    pub train: TrainConfig,
    pub evaluation: EvaluationConfig,
    /// Fixed thresholds compared by `ablate`; empty means the policy's
    /// actions, or the smooth preset without a policy.
    pub ablate_taus: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tau: 0.5,
            policy: None,
            synth: SynthConfig::default(),
            samples: REWARD_SAMPLES,
            taubin: TaubinConfig::default(),
            refine: RefineConfig::default(),
            train: TrainConfig::default(),
            evaluation: EvaluationConfig::default(),
            ablate_taus: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub shape: Shape,
    pub n: usize,
    pub sigma: f64,
    pub radius: f64,
    pub major: f64,
    pub minor: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            shape: Shape::Sphere,
            n: 2000,
            sigma: 0.0,
            radius: 1.0,
            major: 1.0,
            minor: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub actions: Vec<f64>,
    pub episodes: usize,
    /// Leading episodes during which epsilon does not decay.
    pub warmup: usize,
    pub learning_rate: f64,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub period: usize,
    /// F1 radius of the reward.
    pub nu: f64,
    /// Surface samples per mesh in the reward.
    pub samples: usize,
    /// Standardize descriptor features with statistics of the training set.
    pub standardize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            actions: SMOOTH_ACTIONS.to_vec(),
            episodes: 2000,
            warmup: 1000,
            learning_rate: 1e-3,
            epsilon: 0.9,
            epsilon_decay: 0.99,
            period: 2,
            nu: 1e-4,
            samples: REWARD_SAMPLES,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub protocol: String,
    pub samples: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            protocol: "meshrcnn".into(),
            samples: METRIC_SAMPLES,
        }
    }
}

/// Offsets added to the base seed so one flag fixes every random stream.
pub struct SeedOffset;

impl SeedOffset {
    pub const SYNTH: u64 = 0;
    pub const SAMPLE: u64 = 1;
    pub const TRAIN: u64 = 2;
    pub const REWARD: u64 = 3;
    pub const REFINE: u64 = 4;
    pub const EVALUATE: u64 = 5;
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn seed_for(&self, offset: u64) -> u64 {
        self.seed.wrapping_add(offset)
    }
}
