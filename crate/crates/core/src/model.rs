//! Domain types shared by the whole pipeline: tasks, batteries, agents and
//! capability functionals.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::math::{clamp01, softmax};

/// Tolerance on the total mass of a sampling law.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unknown architecture `{0}`")]
    UnknownArchitecture(String),
    #[error("unknown drift `{0}`")]
    UnknownDrift(String),
    #[error("agent `{agent}` has {got} parameters, task `{task}` expects {expected}")]
    DimensionMismatch {
        agent: String,
        task: String,
        expected: usize,
        got: usize,
    },
    #[error("agent parameters must be finite (component {0})")]
    NonFiniteTheta(usize),
}

/// Resource coordinates: wall time and number of calls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Resources {
    pub time: f64,
    pub calls: f64,
}

impl Resources {
    pub const fn new(time: f64, calls: f64) -> Self {
        Resources { time, calls }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.time, self.calls]
    }

    pub fn add(&self, other: &Resources) -> Resources {
        Resources::new(self.time + other.time, self.calls + other.calls)
    }

    pub fn scale(&self, s: f64) -> Resources {
        Resources::new(self.time * s, self.calls * s)
    }
}

/// Strictly increasing reparameterizations of [0,1] onto [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneMap {
    Identity,
    /// x ↦ x³
    Cube,
    /// Logistic curve with slope 6 at 0.5, rescaled to fix 0 and 1.
    Logistic,
    /// x ↦ 0.1 + 0.8·x
    Affine,
}

impl MonotoneMap {
    pub const ALL: [MonotoneMap; 4] = [
        MonotoneMap::Identity,
        MonotoneMap::Cube,
        MonotoneMap::Logistic,
        MonotoneMap::Affine,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            MonotoneMap::Identity => "identity",
            MonotoneMap::Cube => "cube",
            MonotoneMap::Logistic => "logistic",
            MonotoneMap::Affine => "affine",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.id() == id)
    }

    pub fn apply(&self, x: f64) -> f64 {
        match self {
            MonotoneMap::Identity => x,
            MonotoneMap::Cube => x * x * x,
            MonotoneMap::Logistic => {
                const K: f64 = 6.0;
                let s = |t: f64| 1.0 / (1.0 + libm::exp(-K * (t - 0.5)));
                let lo = s(0.0);
                let hi = s(1.0);
                (s(x) - lo) / (hi - lo)
            }
            MonotoneMap::Affine => 0.1 + 0.8 * x,
        }
    }
}

/// The deterministic (given its noise stream) map from agent parameters to a
/// task score.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreMap {
    Constant {
        value: f64,
    },
    /// exp(−a‖θ−m‖²) plus Gaussian observation noise, clamped to [0,1].
    Quadratic {
        center: Vec<f64>,
        sharpness: f64,
        noise_sd: f64,
    },
    /// Expected return softmax(θ)ᵀ·means, or one Bernoulli rollout.
    Bandit {
        means: Vec<f64>,
        rollout: bool,
    },
}

impl ScoreMap {
    /// Parameter dimension the map consumes, if it depends on θ.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            ScoreMap::Constant { .. } => None,
            ScoreMap::Quadratic { center, .. } => Some(center.len()),
            ScoreMap::Bandit { means, .. } => Some(means.len()),
        }
    }

    /// Raw score before drift and reparameterization. Consumes the same
    /// number of random draws whatever θ is, so panels share noise exactly.
    fn raw(&self, theta: &[f64], rng: &mut dyn RngCore) -> f64 {
        match self {
            ScoreMap::Constant { value } => *value,
            ScoreMap::Quadratic {
                center,
                sharpness,
                noise_sd,
            } => {
                let d2: f64 = theta
                    .iter()
                    .zip(center)
                    .map(|(t, m)| (t - m) * (t - m))
                    .sum();
                let mut s = libm::exp(-sharpness * d2);
                if *noise_sd > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    s += noise_sd * z;
                }
                s
            }
            ScoreMap::Bandit { means, rollout } => {
                let p = softmax(theta);
                if *rollout {
                    let u_arm: f64 = rng.random();
                    let u_reward: f64 = rng.random();
                    let arm = crate::math::categorical(&p, u_arm);
                    if u_reward < means[arm] {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    p.iter().zip(means).map(|(pi, mi)| pi * mi).sum()
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub id: String,
    pub family_id: String,
    pub score_map: ScoreMap,
    /// Applied in order after drift; empty means identity.
    pub transforms: Vec<MonotoneMap>,
    pub threshold_qstar: f64,
    pub resource_cost: Resources,
}

impl TaskInstance {
    /// Score of parameters `theta` under `drift`, in [0,1].
    pub fn score(&self, theta: &[f64], drift: &DriftKind, rng: &mut dyn RngCore) -> f64 {
        let raw = match drift {
            DriftKind::InputShift { offset } => {
                let shifted: Vec<f64> = theta
                    .iter()
                    .zip(offset.iter().chain(core::iter::repeat(&0.0)))
                    .map(|(t, o)| t + o)
                    .collect();
                self.score_map.raw(&shifted, rng)
            }
            _ => self.score_map.raw(theta, rng),
        };
        let mut s = clamp01(raw);
        if let DriftKind::ScoreShift { delta } = drift {
            s = clamp01(s + delta);
        }
        for m in &self.transforms {
            s = m.apply(s);
        }
        s
    }
}

/// One bounded perturbation of the evaluation conditions.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftKind {
    Identity,
    /// θ ↦ θ + offset before scoring.
    InputShift {
        offset: Vec<f64>,
    },
    /// s ↦ clamp(s + delta).
    ScoreShift {
        delta: f64,
    },
    /// Re-mixes the sampling law: w ↦ (1−magnitude)·w + magnitude·weights.
    /// Acts as the identity on individual scores.
    Remix {
        weights: Vec<f64>,
        magnitude: f64,
    },
}

impl DriftKind {
    pub fn magnitude(&self) -> f64 {
        match self {
            DriftKind::Identity => 0.0,
            DriftKind::InputShift { offset } => offset.iter().fold(0.0, |a, o| a.max(o.abs())),
            DriftKind::ScoreShift { delta } => delta.abs(),
            DriftKind::Remix { magnitude, .. } => *magnitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub id: String,
    pub kind: DriftKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub id: String,
    pub task_ids: Vec<String>,
}

/// One atom of the sampling law over (task, seed stream, drift) triples.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingEntry {
    pub task_id: String,
    pub seed_stream: u32,
    pub drift_id: String,
    pub weight: f64,
}

/// Counter-based seed space: `streams` independent streams per task, each
/// indexed by replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpace {
    pub streams: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    pub id: String,
    pub tasks: Vec<TaskInstance>,
    pub families: Vec<Family>,
    pub sampling_law: Vec<SamplingEntry>,
    pub drift_space: Vec<Drift>,
    pub seed_space: SeedSpace,
    pub resource_budget: Resources,
}

/// A broken invariant, reported as data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

impl Violation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl Battery {
    pub fn task(&self, id: &str) -> Option<&TaskInstance> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    pub fn drift(&self, id: &str) -> Option<&Drift> {
        self.drift_space.iter().find(|d| d.id == id)
    }

    /// Common parameter dimension of the θ-dependent tasks, if they agree.
    pub fn input_dim(&self) -> Option<usize> {
        self.tasks.iter().find_map(|t| t.score_map.input_dim())
    }

    /// Family carrying the most sampling mass (first on ties).
    pub fn primary_family(&self) -> Option<&str> {
        let mut best: Option<(&str, f64)> = None;
        for fam in &self.families {
            let mass: f64 = self
                .sampling_law
                .iter()
                .filter(|e| fam.task_ids.contains(&e.task_id))
                .map(|e| e.weight)
                .sum();
            if best.is_none_or(|(_, m)| mass > m) {
                best = Some((&fam.id, mass));
            }
        }
        best.map(|(id, _)| id)
    }

    /// The battery evaluated under one drift of its drift space: score-level
    /// drifts replace the drift of every sampling atom, a remix drift
    /// reweights the atoms.
    pub fn drifted(&self, drift_id: &str) -> Result<Battery, ModelError> {
        let drift = self
            .drift(drift_id)
            .ok_or_else(|| ModelError::UnknownDrift(drift_id.to_string()))?;
        let mut out = self.clone();
        match &drift.kind {
            DriftKind::Remix { weights, magnitude } => {
                let total: f64 = weights.iter().sum();
                for (i, e) in out.sampling_law.iter_mut().enumerate() {
                    let alt = weights.get(i).copied().unwrap_or(0.0) / total;
                    e.weight = (1.0 - magnitude) * e.weight + magnitude * alt;
                }
            }
            _ => {
                for e in &mut out.sampling_law {
                    e.drift_id = drift_id.to_string();
                }
            }
        }
        Ok(out)
    }
}

/// Checks every battery invariant; an empty list means the battery is valid.
pub fn validate_battery(b: &Battery) -> Vec<Violation> {
    let mut v = Vec::new();
    if b.id.is_empty() {
        v.push(Violation::new("id", "id is empty"));
    }
    if b.tasks.is_empty() {
        v.push(Violation::new("tasks", "tasks is empty"));
    }

    let mut task_ids = BTreeSet::new();
    let mut dims = BTreeSet::new();
    for t in &b.tasks {
        if !task_ids.insert(t.id.as_str()) {
            v.push(Violation::new(
                "tasks",
                format!("duplicate task id {}", t.id),
            ));
        }
        if !(0.0..=1.0).contains(&t.threshold_qstar) {
            v.push(Violation::new(
                "tasks",
                format!("threshold_qstar of {} outside [0,1]", t.id),
            ));
        }
        let rc = t.resource_cost.as_array();
        if rc.iter().any(|c| !c.is_finite() || *c < 0.0) {
            v.push(Violation::new(
                "tasks",
                format!("resource_cost of {} must be finite and nonnegative", t.id),
            ));
        }
        match &t.score_map {
            ScoreMap::Constant { value } => {
                if !(0.0..=1.0).contains(value) {
                    v.push(Violation::new(
                        "tasks",
                        format!("constant score of {} outside [0,1]", t.id),
                    ));
                }
            }
            ScoreMap::Quadratic {
                center,
                sharpness,
                noise_sd,
            } => {
                if !(*sharpness > 0.0 && sharpness.is_finite()) {
                    v.push(Violation::new(
                        "tasks",
                        format!("sharpness of {} must be positive", t.id),
                    ));
                }
                if !(*noise_sd >= 0.0 && noise_sd.is_finite()) {
                    v.push(Violation::new(
                        "tasks",
                        format!("noise_sd of {} must be nonnegative", t.id),
                    ));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    v.push(Violation::new(
                        "tasks",
                        format!("center of {} not finite", t.id),
                    ));
                }
            }
            ScoreMap::Bandit { means, .. } => {
                if means.is_empty() || means.iter().any(|m| !(0.0..=1.0).contains(m)) {
                    v.push(Violation::new(
                        "tasks",
                        format!("bandit means of {} must be nonempty and in [0,1]", t.id),
                    ));
                }
            }
        }
        if let Some(d) = t.score_map.input_dim() {
            dims.insert(d);
        }
    }
    if dims.len() > 1 {
        v.push(Violation::new(
            "tasks",
            "tasks disagree on parameter dimension",
        ));
    }

    // families partition the task id set
    let mut seen: BTreeMap<&str, &str> = BTreeMap::new();
    let mut fam_ids = BTreeSet::new();
    for fam in &b.families {
        if !fam_ids.insert(fam.id.as_str()) {
            v.push(Violation::new(
                "families",
                format!("duplicate family {}", fam.id),
            ));
        }
        for tid in &fam.task_ids {
            if !task_ids.contains(tid.as_str()) {
                v.push(Violation::new(
                    "families",
                    format!("family {} names unknown task {}", fam.id, tid),
                ));
            }
            if seen.insert(tid.as_str(), fam.id.as_str()).is_some() {
                v.push(Violation::new(
                    "families",
                    format!("families overlap on {tid}"),
                ));
            }
        }
    }
    for t in &b.tasks {
        match seen.get(t.id.as_str()) {
            None => v.push(Violation::new(
                "families",
                format!("task {} is in no family", t.id),
            )),
            Some(f) if *f != t.family_id => v.push(Violation::new(
                "families",
                format!(
                    "task {} declares family {} but is listed under {}",
                    t.id, t.family_id, f
                ),
            )),
            _ => {}
        }
    }

    // drifts
    let mut drift_ids = BTreeSet::new();
    for d in &b.drift_space {
        if !drift_ids.insert(d.id.as_str()) {
            v.push(Violation::new(
                "drift_space",
                format!("duplicate drift {}", d.id),
            ));
        }
        match &d.kind {
            DriftKind::Identity => {}
            DriftKind::InputShift { offset } => {
                if offset.iter().any(|o| !o.is_finite()) {
                    v.push(Violation::new(
                        "drift_space",
                        format!("drift {} offset not finite", d.id),
                    ));
                }
                if dims.iter().any(|dim| *dim != offset.len()) {
                    v.push(Violation::new(
                        "drift_space",
                        format!("drift {} offset dimension does not match tasks", d.id),
                    ));
                }
            }
            DriftKind::ScoreShift { delta } => {
                if !(delta.is_finite() && delta.abs() <= 1.0) {
                    v.push(Violation::new(
                        "drift_space",
                        format!("drift {} shift must lie in [-1,1]", d.id),
                    ));
                }
            }
            DriftKind::Remix { weights, magnitude } => {
                if !(0.0..=1.0).contains(magnitude) {
                    v.push(Violation::new(
                        "drift_space",
                        format!("drift {} magnitude outside [0,1]", d.id),
                    ));
                }
                let total: f64 = weights.iter().sum();
                if weights.len() != b.sampling_law.len()
                    || weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
                    || total <= 0.0
                {
                    v.push(Violation::new(
                        "drift_space",
                        format!(
                            "drift {} needs one nonnegative weight per sampling atom with positive total",
                            d.id
                        ),
                    ));
                }
            }
        }
    }

    // sampling law
    if b.sampling_law.is_empty() {
        v.push(Violation::new("sampling_law", "sampling_law is empty"));
    }
    let mut sum = 0.0;
    for e in &b.sampling_law {
        if !(e.weight >= 0.0 && e.weight.is_finite()) {
            v.push(Violation::new(
                "sampling_law",
                format!("sampling_law weight {} is negative or not finite", e.weight),
            ));
        }
        sum += e.weight;
        if !task_ids.contains(e.task_id.as_str()) {
            v.push(Violation::new(
                "sampling_law",
                format!("sampling_law names unknown task {}", e.task_id),
            ));
        }
        if !drift_ids.contains(e.drift_id.as_str()) {
            v.push(Violation::new(
                "sampling_law",
                format!("sampling_law names unknown drift {}", e.drift_id),
            ));
        }
        if e.seed_stream >= b.seed_space.streams {
            v.push(Violation::new(
                "sampling_law",
                format!(
                    "sampling_law seed stream {} outside seed_space of {}",
                    e.seed_stream, b.seed_space.streams
                ),
            ));
        }
    }
    if !b.sampling_law.is_empty() && (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        v.push(Violation::new(
            "sampling_law",
            format!("sampling_law sum = {sum}"),
        ));
    }

    let budget = b.resource_budget.as_array();
    if budget.iter().any(|c| !c.is_finite() || *c < 0.0) {
        v.push(Violation::new(
            "resource_budget",
            "resource_budget must be finite and nonnegative",
        ));
    }
    v
}

/// Registered architecture maps from parameters to policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    SoftmaxBandit,
    QuadraticField,
}

impl Architecture {
    pub fn id(&self) -> &'static str {
        match self {
            Architecture::SoftmaxBandit => "softmax-bandit",
            Architecture::QuadraticField => "quadratic-field",
        }
    }

    pub fn from_id(id: &str) -> Result<Self, ModelError> {
        match id {
            "softmax-bandit" => Ok(Architecture::SoftmaxBandit),
            "quadratic-field" => Ok(Architecture::QuadraticField),
            other => Err(ModelError::UnknownArchitecture(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub id: String,
    pub theta: Vec<f64>,
    pub architecture_id: String,
    pub metadata: BTreeMap<String, String>,
}

impl Agent {
    pub fn new(id: impl Into<String>, architecture: Architecture, theta: Vec<f64>) -> Self {
        Agent {
            id: id.into(),
            theta,
            architecture_id: architecture.id().to_string(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn check_finite(&self) -> Result<(), ModelError> {
        match self.theta.iter().position(|t| !t.is_finite()) {
            Some(i) => Err(ModelError::NonFiniteTheta(i)),
            None => Ok(()),
        }
    }
}

/// A policy induced by an agent's parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Categorical distribution over arms.
    Softmax { probabilities: Vec<f64> },
    /// The quadratic-field testbed acts directly with its parameters.
    Identity { theta: Vec<f64> },
}

/// The architecture map: parameters to policy.
pub fn induce_policy(a: &Agent) -> Result<Policy, ModelError> {
    a.check_finite()?;
    match Architecture::from_id(&a.architecture_id)? {
        Architecture::SoftmaxBandit => Ok(Policy::Softmax {
            probabilities: softmax(&a.theta),
        }),
        Architecture::QuadraticField => Ok(Policy::Identity {
            theta: a.theta.clone(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregation {
    Mean,
    /// Lower empirical quantile of the sample scores.
    Quantile(f64),
}

/// Free parameters of the capability functional F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapabilityConfig {
    pub resource_penalty_lambda: f64,
    pub uncertainty_penalty_beta: f64,
    pub aggregation: Aggregation,
}

impl Default for CapabilityConfig {
    fn default() -> Self {
        CapabilityConfig {
            resource_penalty_lambda: 0.0,
            uncertainty_penalty_beta: 0.0,
            aggregation: Aggregation::Mean,
        }
    }
}
