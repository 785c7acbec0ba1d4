//! Synthetic batteries with closed-form scores.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::model::{
    Agent, Architecture, Battery, Drift, DriftKind, Family, MonotoneMap, Resources, SamplingEntry,
    ScoreMap, SeedSpace, TaskInstance,
};
use crate::rng::StreamKey;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TestbedError {
    #[error("sharpness must be finite and > 0, got {0}")]
    BadSharpness(f64),
    #[error("noise sd must be finite and >= 0, got {0}")]
    BadNoise(f64),
    #[error("need at least one task")]
    NoTasks,
    #[error("arm means must be nonempty, equal-length and in [0,1]")]
    BadMeans,
    #[error("unknown monotone map `{0}`")]
    UnknownMap(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFieldSpec {
    pub center: Vec<f64>,
    pub sharpness: f64,
    pub noise_sd: f64,
    /// Per-coordinate input offset of the two shift drifts.
    pub drift: f64,
}

impl QuadraticFieldSpec {
    pub fn new(center: Vec<f64>, sharpness: f64, noise_sd: f64) -> Self {
        QuadraticFieldSpec {
            center,
            sharpness,
            noise_sd,
            drift: 0.05,
        }
    }

    /// Default task-center jitter radius, 0.1·‖m‖ + 0.1.
    pub fn jitter_radius(&self) -> f64 {
        0.1 * libm::sqrt(crate::math::norm_sq(&self.center)) + 0.1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BanditBatterySpec {
    /// Arm reward means, one vector per task.
    pub task_means: Vec<Vec<f64>>,
    /// Score shift of the ± drifts.
    pub delta: f64,
    pub rollout: bool,
}

fn uniform_law(tasks: &[TaskInstance]) -> Vec<SamplingEntry> {
    let w = 1.0 / tasks.len() as f64;
    tasks
        .iter()
        .map(|t| SamplingEntry {
            task_id: t.id.clone(),
            seed_stream: 0,
            drift_id: "identity".into(),
            weight: w,
        })
        .collect()
}

fn assemble(
    battery_id: &str,
    family_id: &str,
    tasks: Vec<TaskInstance>,
    drifts: Vec<Drift>,
) -> Battery {
    Battery {
        id: battery_id.to_string(),
        families: vec![Family {
            id: family_id.to_string(),
            task_ids: tasks.iter().map(|t| t.id.clone()).collect(),
        }],
        sampling_law: uniform_law(&tasks),
        tasks,
        drift_space: drifts,
        seed_space: SeedSpace { streams: 1 },
        resource_budget: Resources::new(1.0, 1.0),
    }
}

/// Task centers jittered around the spec center inside the default radius,
/// drawn from a stream keyed by the battery id.
pub fn jittered_centers(
    spec: &QuadraticFieldSpec,
    n_tasks: usize,
    battery_id: &str,
) -> Vec<Vec<f64>> {
    let d = spec.center.len();
    let r = spec.jitter_radius() / libm::sqrt(d.max(1) as f64);
    let mut rng = StreamKey::new(0)
        .with_str(battery_id)
        .with_str("jitter")
        .rng(0);
    (0..n_tasks)
        .map(|_| {
            spec.center
                .iter()
                .map(|m| m + r * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        })
        .collect()
}

pub fn make_quadratic_battery(
    spec: &QuadraticFieldSpec,
    n_tasks: usize,
    family_id: &str,
    battery_id: &str,
) -> Result<Battery, TestbedError> {
    if !(spec.sharpness.is_finite() && spec.sharpness > 0.0) {
        return Err(TestbedError::BadSharpness(spec.sharpness));
    }
    if !(spec.noise_sd.is_finite() && spec.noise_sd >= 0.0) {
        return Err(TestbedError::BadNoise(spec.noise_sd));
    }
    if n_tasks == 0 {
        return Err(TestbedError::NoTasks);
    }
    let tasks = jittered_centers(spec, n_tasks, battery_id)
        .into_iter()
        .enumerate()
        .map(|(i, center)| TaskInstance {
            id: format!("{family_id}-q{i}"),
            family_id: family_id.to_string(),
            score_map: ScoreMap::Quadratic {
                center,
                sharpness: spec.sharpness,
                noise_sd: spec.noise_sd,
            },
            transforms: Vec::new(),
            threshold_qstar: 0.5,
            resource_cost: Resources::new(1.0, 1.0),
        })
        .collect();
    let d = spec.center.len();
    let drifts = vec![
        Drift {
            id: "identity".into(),
            kind: DriftKind::Identity,
        },
        Drift {
            id: "shift-plus".into(),
            kind: DriftKind::InputShift {
                offset: vec![spec.drift; d],
            },
        },
        Drift {
            id: "shift-minus".into(),
            kind: DriftKind::InputShift {
                offset: vec![-spec.drift; d],
            },
        },
    ];
    Ok(assemble(battery_id, family_id, tasks, drifts))
}

pub fn make_bandit_battery(
    spec: &BanditBatterySpec,
    family_id: &str,
    battery_id: &str,
) -> Result<Battery, TestbedError> {
    let k = spec.task_means.first().map_or(0, |m| m.len());
    if spec.task_means.is_empty() {
        return Err(TestbedError::NoTasks);
    }
    if k == 0
        || spec
            .task_means
            .iter()
            .any(|m| m.len() != k || m.iter().any(|x| !(0.0..=1.0).contains(x)))
    {
        return Err(TestbedError::BadMeans);
    }
    let tasks = spec
        .task_means
        .iter()
        .enumerate()
        .map(|(i, means)| TaskInstance {
            id: format!("{family_id}-b{i}"),
            family_id: family_id.to_string(),
            score_map: ScoreMap::Bandit {
                means: means.clone(),
                rollout: spec.rollout,
            },
            transforms: Vec::new(),
            threshold_qstar: 0.5,
            resource_cost: Resources::new(1.0, 1.0),
        })
        .collect();
    let drifts = vec![
        Drift {
            id: "identity".into(),
            kind: DriftKind::Identity,
        },
        Drift {
            id: "score-plus".into(),
            kind: DriftKind::ScoreShift { delta: spec.delta },
        },
        Drift {
            id: "score-minus".into(),
            kind: DriftKind::ScoreShift { delta: -spec.delta },
        },
    ];
    Ok(assemble(battery_id, family_id, tasks, drifts))
}

/// Same battery (and id, so the same seed streams) with every task score
/// passed through `map_id`.
pub fn monotone_twin(b: &Battery, map_id: &str) -> Result<Battery, TestbedError> {
    let map =
        MonotoneMap::from_id(map_id).ok_or_else(|| TestbedError::UnknownMap(map_id.into()))?;
    let mut out = b.clone();
    if map != MonotoneMap::Identity {
        for t in &mut out.tasks {
            t.transforms.push(map);
        }
    }
    Ok(out)
}

/// Fixed three-agent probe panel: the origin, the constant 0.5 vector and
/// an alternating ±0.5 vector.
pub fn probe_panel_v1(architecture: Architecture, dim: usize) -> Vec<Agent> {
    let thetas = [
        vec![0.0; dim],
        vec![0.5; dim],
        (0..dim)
            .map(|i| if i % 2 == 0 { 0.5 } else { -0.5 })
            .collect(),
    ];
    thetas
        .into_iter()
        .enumerate()
        .map(|(i, theta)| Agent::new(format!("probe-v1-{i}"), architecture, theta))
        .collect()
}
