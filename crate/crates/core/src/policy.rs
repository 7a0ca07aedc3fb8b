//! Threshold selection as a contextual bandit.
//!
//! Each input cloud is summarized by a 16-entry [`StateDescriptor`]; a
//! linear model predicts the expected reward of every candidate threshold
//! and an epsilon-greedy rule picks one. The reward is the F1 score (0 to 1)
//! between the resulting alpha-shape surface and the ground truth. Every
//! `period` transitions the buffered transitions are replayed once through
//! an RMSProp step on the squared prediction error of the chosen action,
//! then discarded.
//!
//! Descriptor layout:
//!
//! | index  | feature                                              |
//! |--------|------------------------------------------------------|
//! | 0..3   | bounding-box extents                                 |
//! | 3      | `ln(point count)`                                    |
//! | 4..8   | mean, std, min, max of nearest-neighbor distance     |
//! | 8..12  | mean, std, min, max of 8th-nearest-neighbor distance |
//! | 12..15 | PCA eigenvalues over their sum, descending           |
//! | 15     | 1                                                    |

use std::io::Write;
use std::sync::OnceLock;

use nalgebra::{Matrix3, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::alphashape::triangulate_complex;
use crate::delaunay::{delaunay_complex, DelaunayComplex};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, PointCloud, Vec3};
use crate::metrics::f1_score;
use crate::sampling::sample_surface;
use crate::spatial::NearestIndex;

pub const STATE_DIM: usize = 16;
pub const POLICY_VERSION: u32 = 1;
pub const EPSILON_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDescriptor(pub [f64; STATE_DIM]);

impl StateDescriptor {
    /// FNV-1a over the bit patterns of the entries.
    pub fn hash64(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in self.0 {
            for b in x.to_bits().to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

fn moments(v: &[f64]) -> [f64; 4] {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    [mean, var.sqrt(), min, max]
}

/// Descriptor of a cloud with at least 9 points. Computed on centered
/// coordinates, so translation only perturbs it by rounding.
pub fn state_descriptor(cloud: &PointCloud) -> Result<StateDescriptor> {
    let n = cloud.len();
    if n < 9 {
        return Err(Error::TooFewPoints { needed: 9, got: n });
    }
    let mean: Vec3 = cloud.points().iter().map(|p| p.coords).sum::<Vec3>() / n as f64;
    let pts: Vec<_> = cloud.points().iter().map(|p| p - mean).collect();
    let mut d = [0.0; STATE_DIM];
    let (lo, hi) = crate::mesh::bounding_box(&pts).expect("non-empty");
    d[..3].copy_from_slice((hi - lo).as_slice());
    d[3] = (n as f64).ln();

    let index = NearestIndex::new(&pts);
    let (k1, k8): (Vec<f64>, Vec<f64>) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut nn = index.k_nearest(&pts[i], 9);
            match nn.iter().position(|&(j, _)| j == i) {
                Some(pos) => {
                    nn.remove(pos);
                }
                None => {
                    nn.pop();
                }
            }
            (nn[0].1.sqrt(), nn[7].1.sqrt())
        })
        .unzip();
    d[4..8].copy_from_slice(&moments(&k1));
    d[8..12].copy_from_slice(&moments(&k8));

    let mut cov = Matrix3::zeros();
    for p in &pts {
        cov += p.coords * p.coords.transpose();
    }
    cov /= n as f64;
    let mut ev: Vec<f64> = SymmetricEigen::new(cov)
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0))
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = ev.iter().sum();
    if total > 0.0 {
        for k in 0..3 {
            d[12 + k] = ev[k] / total;
        }
    }
    d[15] = 1.0;
    if d.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("state descriptor".into()));
    }
    Ok(StateDescriptor(d))
}

/// RMSProp settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmsProp {
    pub learning_rate: f64,
    pub decay: f64,
    pub epsilon: f64,
}

impl Default for RmsProp {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            decay: 0.99,
            epsilon: 1e-8,
        }
    }
}

/// Linear action-value model with epsilon-greedy exploration.
#[derive(Debug, Clone, PartialEq)]
pub struct QPolicy {
    actions: Vec<f64>,
    theta: Vec<[f64; STATE_DIM]>,
    sq_avg: Vec<[f64; STATE_DIM]>,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub period: usize,
    pub optimizer: RmsProp,
    pub standardization: Option<Standardization>,
}

/// Per-feature affine map `(s - mean) / scale` applied before the linear
/// model. The bias entry always maps to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Mean and population standard deviation of each feature over
    /// `states`. Features that are constant over `states` keep scale 1.
    pub fn fit(states: &[StateDescriptor]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Config("no states to standardize".into()));
        }
        let n = states.len() as f64;
        let mut mean = vec![0.0; STATE_DIM];
        let mut scale = vec![1.0; STATE_DIM];
        for k in 0..STATE_DIM - 1 {
            let m = states.iter().map(|s| s.0[k]).sum::<f64>() / n;
            let sd = (states.iter().map(|s| (s.0[k] - m).powi(2)).sum::<f64>() / n).sqrt();
            mean[k] = m;
            if sd > 1e-12 * m.abs().max(1.0) {
                scale[k] = sd;
            }
        }
        Ok(Self { mean, scale })
    }

    fn validate(&self) -> Result<()> {
        let ok = self.mean.len() == STATE_DIM
            && self.scale.len() == STATE_DIM
            && self.mean.iter().all(|x| x.is_finite())
            && self.scale.iter().all(|x| *x > 0.0 && x.is_finite())
            && self.mean[STATE_DIM - 1] == 0.0
            && self.scale[STATE_DIM - 1] == 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(
                "standardization needs 16 finite means, 16 positive scales and an identity bias entry".into(),
            ))
        }
    }

    pub fn apply(&self, s: &StateDescriptor) -> [f64; STATE_DIM] {
        std::array::from_fn(|k| (s.0[k] - self.mean[k]) / self.scale[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Choice {
    pub action: usize,
    pub greedy: bool,
}

impl QPolicy {
    /// Zero weights, epsilon 0.9 decaying by 0.99 per update, period 2.
    pub fn new(actions: Vec<f64>) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::Config("policy needs at least one action".into()));
        }
        if let Some(t) = actions.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::Config(format!("thresholds must be positive, got {t}")));
        }
        let n = actions.len();
        Ok(Self {
            actions,
            theta: vec![[0.0; STATE_DIM]; n],
            sq_avg: vec![[0.0; STATE_DIM]; n],
            epsilon: 0.9,
            epsilon_decay: 0.99,
            period: 2,
            optimizer: RmsProp::default(),
            standardization: None,
        })
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn theta(&self) -> &[[f64; STATE_DIM]] {
        &self.theta
    }

    pub fn set_theta(&mut self, theta: Vec<[f64; STATE_DIM]>) -> Result<()> {
        if theta.len() != self.actions.len() {
            return Err(Error::Config(format!(
                "theta has {} rows for {} actions",
                theta.len(),
                self.actions.len()
            )));
        }
        self.theta = theta;
        Ok(())
    }

    /// The model input: `s` itself, or its standardized form when the
    /// policy carries a [`Standardization`].
    pub fn features(&self, s: &StateDescriptor) -> [f64; STATE_DIM] {
        match &self.standardization {
            Some(z) => z.apply(s),
            None => s.0,
        }
    }

    pub fn set_standardization(&mut self, z: Option<Standardization>) -> Result<()> {
        if let Some(z) = &z {
            z.validate()?;
        }
        self.standardization = z;
        Ok(())
    }

    /// `theta · features(s)`, one predicted reward per action.
    pub fn q_values(&self, s: &StateDescriptor) -> Vec<f64> {
        let x = self.features(s);
        self.theta
            .iter()
            .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Highest predicted reward; ties go to the lowest index.
    pub fn greedy_action(&self, s: &StateDescriptor) -> usize {
        let q = self.q_values(s);
        let mut best = 0;
        for (i, &v) in q.iter().enumerate() {
            if v > q[best] {
                best = i;
            }
        }
        best
    }

    /// One uniform draw decides between exploring (draw below epsilon, then
    /// a uniform action) and the greedy action.
    pub fn select_action<R: Rng + ?Sized>(&self, s: &StateDescriptor, rng: &mut R) -> Choice {
        let r: f64 = rng.gen();
        if r < self.epsilon {
            Choice {
                action: rng.gen_range(0..self.actions.len()),
                greedy: false,
            }
        } else {
            Choice {
                action: self.greedy_action(s),
                greedy: true,
            }
        }
    }

    /// One RMSProp step on `(q(s)[action] - reward)^2` for the chosen row,
    /// then epsilon decay.
    pub fn update(&mut self, s: &StateDescriptor, action: usize, reward: f64) -> Result<()> {
        self.fit(s, action, reward)?;
        self.decay_epsilon();
        Ok(())
    }

    /// Multiplies epsilon by `epsilon_decay`, never going below the floor.
    pub fn decay_epsilon(&mut self) {
        self.epsilon = (self.epsilon * self.epsilon_decay).max(EPSILON_FLOOR);
    }

    /// The RMSProp step of [`QPolicy::update`] without the epsilon decay.
    pub fn fit(&mut self, s: &StateDescriptor, action: usize, reward: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&reward) {
            return Err(Error::RewardOutOfRange(reward));
        }
        if action >= self.actions.len() {
            return Err(Error::Config(format!("action {action} out of range")));
        }
        let x = self.features(s);
        let q: f64 = self.theta[action].iter().zip(&x).map(|(a, b)| a * b).sum();
        let err = q - reward;
        let RmsProp {
            learning_rate,
            decay,
            epsilon,
        } = self.optimizer;
        for k in 0..STATE_DIM {
            let g = 2.0 * err * x[k];
            let v = &mut self.sq_avg[action][k];
            *v = decay * *v + (1.0 - decay) * g * g;
            self.theta[action][k] -= learning_rate * g / (v.sqrt() + epsilon);
        }
        Ok(())
    }

    pub fn to_document(&self) -> PolicyDocument {
        PolicyDocument {
            version: POLICY_VERSION,
            actions: self.actions.clone(),
            theta: self.theta.iter().flatten().copied().collect(),
            epsilon: self.epsilon,
            epsilon_decay: self.epsilon_decay,
            period: self.period,
            optimizer: self.optimizer,
            optimizer_state: self.sq_avg.iter().flatten().copied().collect(),
            standardization: self.standardization.clone(),
        }
    }

    pub fn from_document(doc: PolicyDocument) -> Result<Self> {
        if doc.version != POLICY_VERSION {
            return Err(Error::Config(format!("unsupported policy version {}", doc.version)));
        }
        let mut p = Self::new(doc.actions)?;
        let n = p.actions.len();
        let rows = |flat: &[f64], what: &str| -> Result<Vec<[f64; STATE_DIM]>> {
            if flat.len() != n * STATE_DIM {
                return Err(Error::Config(format!(
                    "{what} has {} entries, expected {}",
                    flat.len(),
                    n * STATE_DIM
                )));
            }
            Ok(flat
                .chunks(STATE_DIM)
                .map(|c| c.try_into().expect("exact chunk"))
                .collect())
        };
        p.theta = rows(&doc.theta, "theta")?;
        p.sq_avg = rows(&doc.optimizer_state, "optimizer_state")?;
        if !(0.0..=1.0).contains(&doc.epsilon) {
            return Err(Error::Config(format!(
                "epsilon must lie in [0, 1], got {}",
                doc.epsilon
            )));
        }
        if doc.period == 0 {
            return Err(Error::Config("period must be at least 1".into()));
        }
        p.epsilon = doc.epsilon;
        p.epsilon_decay = doc.epsilon_decay;
        p.period = doc.period;
        p.optimizer = doc.optimizer;
        p.set_standardization(doc.standardization)?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("policy document serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: PolicyDocument = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_document(doc)
    }
}

/// Serialized form of [`QPolicy`]; matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub version: u32,
    pub actions: Vec<f64>,
    pub theta: Vec<f64>,
    pub epsilon: f64,
    pub epsilon_decay: f64,
    pub period: usize,
    #[serde(default)]
    pub optimizer: RmsProp,
    pub optimizer_state: Vec<f64>,
    #[serde(default)]
    pub standardization: Option<Standardization>,
}

/// F1 (0 to 1) at radius `nu` between equally seeded samples of both
/// meshes.
pub fn reward(pred: &Mesh, gt: &Mesh, nu: f64, n_samples: usize, seed: u64) -> Result<f64> {
    let gt_samples =
        sample_surface(gt, n_samples, seed).map_err(|_| Error::EmptyMesh("ground truth has no surface".into()))?;
    reward_against(pred, &gt_samples, nu, n_samples, seed)
}

fn reward_against(pred: &Mesh, gt_samples: &PointCloud, nu: f64, n_samples: usize, seed: u64) -> Result<f64> {
    let p = sample_surface(pred, n_samples, seed).map_err(|_| Error::EmptyMesh("prediction has no surface".into()))?;
    Ok((f1_score(&p, gt_samples, nu)?.f1 / 100.0).clamp(0.0, 1.0))
}

/// Source of states and rewards for [`train_policy`].
pub trait Environment {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn state(&self, instance: usize) -> &StateDescriptor;
    /// Reward in `[0, 1]` for taking `action` on `instance`.
    fn reward(&self, instance: usize, action: usize, rng: &mut dyn RngCore) -> Result<f64>;
}

/// Point clouds with ground-truth meshes; the reward of an action is the
/// F1 of the alpha-shape surface at that action's threshold, or 0 when the
/// threshold removes every tetrahedron.
pub struct MeshEnvironment {
    actions: Vec<f64>,
    states: Vec<StateDescriptor>,
    complexes: Vec<DelaunayComplex>,
    gt_samples: Vec<PointCloud>,
    nu: f64,
    n_samples: usize,
    seed: u64,
    cache: Vec<Vec<OnceLock<f64>>>,
}

impl MeshEnvironment {
    pub fn new(dataset: &[(PointCloud, Mesh)], actions: &[f64], nu: f64, n_samples: usize, seed: u64) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Config("dataset is empty".into()));
        }
        if !(nu > 0.0) {
            return Err(Error::Config(format!("nu must be positive, got {nu}")));
        }
        let prepared: Vec<(StateDescriptor, DelaunayComplex, PointCloud)> = dataset
            .par_iter()
            .map(|(cloud, gt)| {
                let s = state_descriptor(cloud)?;
                let c = delaunay_complex(cloud)?;
                let g = sample_surface(gt, n_samples, seed)
                    .map_err(|_| Error::EmptyMesh("ground truth has no surface".into()))?;
                Ok((s, c, g))
            })
            .collect::<Result<_>>()?;
        let mut states = Vec::new();
        let mut complexes = Vec::new();
        let mut gt_samples = Vec::new();
        for (s, c, g) in prepared {
            states.push(s);
            complexes.push(c);
            gt_samples.push(g);
        }
        let cache = (0..dataset.len())
            .map(|_| (0..actions.len()).map(|_| OnceLock::new()).collect())
            .collect();
        Ok(Self {
            actions: actions.to_vec(),
            states,
            complexes,
            gt_samples,
            nu,
            n_samples,
            seed,
            cache,
        })
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    pub fn reward_of(&self, instance: usize, action: usize) -> Result<f64> {
        if let Some(r) = self.cache[instance][action].get() {
            return Ok(*r);
        }
        let r = match triangulate_complex(&self.complexes[instance], self.actions[action]) {
            Ok(surface) => match reward_against(
                &surface.mesh,
                &self.gt_samples[instance],
                self.nu,
                self.n_samples,
                self.seed,
            ) {
                Ok(r) => r,
                Err(Error::EmptyMesh(_)) => 0.0,
                Err(e) => return Err(e),
            },
            Err(Error::EmptyMesh(_)) => 0.0,
            Err(e) => return Err(e),
        };
        Ok(*self.cache[instance][action].get_or_init(|| r))
    }

    /// Every action's reward on every instance, in parallel.
    pub fn reward_table(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.len())
            .into_par_iter()
            .map(|i| (0..self.actions.len()).map(|a| self.reward_of(i, a)).collect())
            .collect()
    }
}

impl Environment for MeshEnvironment {
    fn len(&self) -> usize {
        self.states.len()
    }

    fn state(&self, instance: usize) -> &StateDescriptor {
        &self.states[instance]
    }

    fn reward(&self, instance: usize, action: usize, _rng: &mut dyn RngCore) -> Result<f64> {
        self.reward_of(instance, action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub episode: usize,
    pub instance: usize,
    pub state_hash: u64,
    pub action: usize,
    pub tau: f64,
    pub reward: f64,
    pub epsilon: f64,
    pub greedy: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub records: Vec<TrainRecord>,
}

impl TrainLog {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "episode,instance,state_hash,action,tau,reward,epsilon,greedy")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{:016x},{},{},{},{},{}",
                r.episode, r.instance, r.state_hash, r.action, r.tau, r.reward, r.epsilon, r.greedy
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSchedule {
    pub episodes: usize,
    /// Leading episodes whose updates leave epsilon unchanged.
    pub warmup: usize,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            episodes: 2000,
            warmup: 0,
            seed: 0,
        }
    }
}

/// Runs single-step episodes. Instances are visited in a fresh random order
/// on every pass over the dataset; each episode chooses an action, observes
/// its reward and buffers the transition; every `policy.period` episodes the
/// buffer is replayed once and cleared. The logged epsilon is the one the
/// action was chosen with.
pub fn train_policy<E: Environment + ?Sized>(
    env: &E,
    mut policy: QPolicy,
    schedule: &TrainSchedule,
) -> Result<(QPolicy, TrainLog)> {
    if env.is_empty() {
        return Err(Error::Config("dataset is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let mut order: Vec<usize> = (0..env.len()).collect();
    let mut pos = order.len();
    let period = policy.period.max(1);
    let mut buffer: Vec<(usize, usize, f64)> = Vec::with_capacity(period);
    let mut log = TrainLog::default();
    for episode in 0..schedule.episodes {
        if pos == order.len() {
            order.shuffle(&mut rng);
            pos = 0;
        }
        let instance = order[pos];
        pos += 1;
        let s = env.state(instance);
        let choice = policy.select_action(s, &mut rng);
        let r = env.reward(instance, choice.action, &mut rng)?;
        log.records.push(TrainRecord {
            episode,
            instance,
            state_hash: s.hash64(),
            action: choice.action,
            tau: policy.actions[choice.action],
            reward: r,
            epsilon: policy.epsilon,
            greedy: choice.greedy,
        });
        buffer.push((instance, choice.action, r));
        if buffer.len() == period {
            for (i, a, r) in buffer.drain(..) {
                policy.fit(env.state(i), a, r)?;
                if episode >= schedule.warmup {
                    policy.decay_epsilon();
                }
            }
        }
    }
    Ok((policy, log))
}
