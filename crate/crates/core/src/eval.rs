//! Monte Carlo estimation of battery scores and capability functionals.
//!
//! Replicate `i` draws its (task, seed stream, drift) atom from the stream
//! keyed by (battery id, "mu") and its score noise from the stream keyed by
//! (battery id, task id, seed stream), both at counter `i`. Replicates are
//! computed independently and reduced in index order, so the result is the
//! same for any executor.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::math::{mean_var, Z95};
use crate::model::{
    validate_battery, Agent, Aggregation, Battery, CapabilityConfig, ModelError, Resources,
    Violation,
};
use crate::rng::StreamKey;

/// Maps `f` over `0..n` and returns the results in index order.
pub trait Executor {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("invalid battery: {}", join_violations(.0))]
    InvalidBattery(Vec<Violation>),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("probe panel is empty")]
    EmptyPanel,
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn join_violations(v: &[Violation]) -> String {
    let mut s = String::new();
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        s.push_str(&x.message);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub battery_id: String,
    pub panel_ids: Vec<String>,
    pub n_samples: usize,
    pub seed_root: u64,
}

/// Empirical law of probe-panel score vectors, stored row-major
/// (`n_samples × dim`). Sample weights are uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreLaw {
    pub dim: usize,
    pub samples: Vec<f64>,
    pub provenance: Provenance,
}

impl ScoreLaw {
    pub fn len(&self) -> usize {
        self.samples.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.dim..(i + 1) * self.dim]
    }

    /// Scores of one panel member.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.sample(i)[j]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub battery_id: String,
    pub agent_id: String,
    pub n: usize,
    pub s_hat: f64,
    pub ci_halfwidth: f64,
    pub f_value: f64,
    /// Mean resource spend per sampled task instance.
    pub resource_spent: Resources,
}

/// Index of the sampling atom used by replicate `i`.
pub fn draw_atom(b: &Battery, seed_root: u64, i: u64) -> usize {
    let u: f64 = StreamKey::new(seed_root)
        .with_str(&b.id)
        .with_str("mu")
        .rng(i)
        .random();
    let mut acc = 0.0;
    for (k, e) in b.sampling_law.iter().enumerate() {
        acc += e.weight;
        if u < acc {
            return k;
        }
    }
    b.sampling_law
        .iter()
        .rposition(|e| e.weight > 0.0)
        .unwrap_or(0)
}

/// Scores of every parameter vector in `thetas` on replicate `i`, all with
/// the same task, seed stream, drift and noise draws.
fn replicate_scores(
    thetas: &[&[f64]],
    b: &Battery,
    seed_root: u64,
    i: u64,
) -> (Vec<f64>, Resources) {
    let atom = &b.sampling_law[draw_atom(b, seed_root, i)];
    // validated upstream
    let task = b.task(&atom.task_id).expect("validated task id");
    let drift = &b.drift(&atom.drift_id).expect("validated drift id").kind;
    let key = StreamKey::new(seed_root)
        .with_str(&b.id)
        .with_str(&task.id)
        .with_u64(u64::from(atom.seed_stream));
    let scores = thetas
        .iter()
        .map(|theta| task.score(theta, drift, &mut key.rng(i)))
        .collect();
    (scores, task.resource_cost)
}

fn check_inputs(agents: &[&Agent], b: &Battery, n: usize) -> Result<(), EvalError> {
    let violations = validate_battery(b);
    if !violations.is_empty() {
        return Err(EvalError::InvalidBattery(violations));
    }
    if n == 0 {
        return Err(EvalError::NoSamples);
    }
    for a in agents {
        a.check_finite()?;
        for t in &b.tasks {
            if let Some(d) = t.score_map.input_dim() {
                if d != a.theta.len() {
                    return Err(ModelError::DimensionMismatch {
                        agent: a.id.clone(),
                        task: t.id.clone(),
                        expected: d,
                        got: a.theta.len(),
                    }
                    .into());
                }
            }
        }
    }
    Ok(())
}

/// Estimates S(π;B) from `n` i.i.d. draws of the sampling law and applies
/// the capability penalties of `cfg`.
pub fn evaluate_battery<E: Executor>(
    a: &Agent,
    b: &Battery,
    n: usize,
    seed_root: u64,
    cfg: &CapabilityConfig,
    exec: &E,
) -> Result<(EvalReport, ScoreLaw), EvalError> {
    check_inputs(&[a], b, n)?;
    let rows = exec.map_indexed(n, |i| {
        let (s, r) = replicate_scores(&[&a.theta], b, seed_root, i as u64);
        (s[0], r)
    });
    let scores: Vec<f64> = rows.iter().map(|(s, _)| *s).collect();
    let spent = mean_resources(rows.iter().map(|(_, r)| r), n);
    let report = summarize(&a.id, b, &scores, spent, cfg);
    let law = ScoreLaw {
        dim: 1,
        samples: scores,
        provenance: Provenance {
            battery_id: b.id.clone(),
            panel_ids: alloc::vec![a.id.clone()],
            n_samples: n,
            seed_root,
        },
    };
    Ok((report, law))
}

fn mean_resources<'a>(rs: impl Iterator<Item = &'a Resources>, n: usize) -> Resources {
    let mut total = Resources::default();
    for r in rs {
        total = total.add(r);
    }
    total.scale(1.0 / n as f64)
}

fn summarize(
    agent_id: &str,
    b: &Battery,
    scores: &[f64],
    spent: Resources,
    cfg: &CapabilityConfig,
) -> EvalReport {
    let n = scores.len();
    let (s_hat, var) = mean_var(scores);
    let ci = Z95 * libm::sqrt(var / n as f64);
    let f_value = capability(scores, s_hat, ci, &spent, &b.resource_budget, cfg);
    EvalReport {
        battery_id: b.id.clone(),
        agent_id: agent_id.to_string(),
        n,
        s_hat,
        ci_halfwidth: ci,
        f_value,
        resource_spent: spent,
    }
}

/// Resource use relative to budget: the largest spend/budget ratio over
/// coordinates, with 0/0 = 0 and x/0 = 1 for x > 0.
pub fn resource_ratio(spent: &Resources, budget: &Resources) -> f64 {
    spent
        .as_array()
        .iter()
        .zip(budget.as_array())
        .map(|(s, b)| {
            if b > 0.0 {
                (s / b).max(0.0)
            } else if *s > 0.0 {
                1.0
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// F = aggregate(scores) − λ·ratio(spent, budget) − β·ci.
pub fn capability(
    scores: &[f64],
    s_hat: f64,
    ci_halfwidth: f64,
    spent: &Resources,
    budget: &Resources,
    cfg: &CapabilityConfig,
) -> f64 {
    let base = match cfg.aggregation {
        Aggregation::Mean => s_hat,
        Aggregation::Quantile(q) => lower_quantile(scores, q),
    };
    base - cfg.resource_penalty_lambda * resource_ratio(spent, budget)
        - cfg.uncertainty_penalty_beta * ci_halfwidth
}

/// Order statistic ⌈q·n⌉ (1-based), clamped to the sample range.
pub fn lower_quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let k = libm::ceil(q.clamp(0.0, 1.0) * n as f64) as usize;
    v[k.clamp(1, n) - 1]
}

/// Evaluates every panel agent on the same replicate stream (common random
/// numbers). Sample `i` is the vector of panel scores on replicate `i`.
pub fn probe_panel_scores<E: Executor>(
    panel: &[Agent],
    b: &Battery,
    n: usize,
    seed_root: u64,
    exec: &E,
) -> Result<ScoreLaw, EvalError> {
    if panel.is_empty() {
        return Err(EvalError::EmptyPanel);
    }
    let refs: Vec<&Agent> = panel.iter().collect();
    check_inputs(&refs, b, n)?;
    let thetas: Vec<&[f64]> = panel.iter().map(|a| a.theta.as_slice()).collect();
    let rows = exec.map_indexed(n, |i| replicate_scores(&thetas, b, seed_root, i as u64).0);
    let mut samples = Vec::with_capacity(n * panel.len());
    for r in rows {
        samples.extend(r);
    }
    Ok(ScoreLaw {
        dim: panel.len(),
        samples,
        provenance: Provenance {
            battery_id: b.id.clone(),
            panel_ids: panel.iter().map(|a| a.id.clone()).collect(),
            n_samples: n,
            seed_root,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use alloc::vec;

    fn constant_battery(values: &[f64]) -> Battery {
        let tasks: Vec<TaskInstance> = values
            .iter()
            .enumerate()
            .map(|(i, v)| TaskInstance {
                id: alloc::format!("t{i}"),
                family_id: "f".into(),
                score_map: ScoreMap::Constant { value: *v },
                transforms: vec![],
                threshold_qstar: 0.5,
                resource_cost: Resources::new(1.0, 2.0),
            })
            .collect();
        let w = 1.0 / values.len() as f64;
        Battery {
            id: "c".into(),
            families: vec![Family {
                id: "f".into(),
                task_ids: tasks.iter().map(|t| t.id.clone()).collect(),
            }],
            sampling_law: tasks
                .iter()
                .map(|t| SamplingEntry {
                    task_id: t.id.clone(),
                    seed_stream: 0,
                    drift_id: "nominal".into(),
                    weight: w,
                })
                .collect(),
            tasks,
            drift_space: vec![Drift {
                id: "nominal".into(),
                kind: DriftKind::Identity,
            }],
            seed_space: SeedSpace { streams: 1 },
            resource_budget: Resources::new(1.0, 2.0),
        }
    }

    fn agent() -> Agent {
        Agent::new("a", Architecture::QuadraticField, vec![])
    }

    #[test]
    fn constant_scores() {
        let cfg = CapabilityConfig::default();
        let (r, law) = evaluate_battery(
            &agent(),
            &constant_battery(&[1.0, 1.0]),
            50,
            3,
            &cfg,
            &Sequential,
        )
        .unwrap();
        assert_eq!(r.s_hat, 1.0);
        assert_eq!(r.ci_halfwidth, 0.0);
        assert_eq!(r.f_value, 1.0);
        assert_eq!(law.len(), 50);
        let (r0, _) = evaluate_battery(
            &agent(),
            &constant_battery(&[0.0]),
            10,
            3,
            &cfg,
            &Sequential,
        )
        .unwrap();
        assert_eq!(r0.s_hat, 0.0);
    }

    #[test]
    fn capability_arithmetic() {
        let spent = Resources::new(1.0, 1.0);
        let budget = Resources::new(1.0, 1.0);
        let base = CapabilityConfig::default();
        assert_eq!(capability(&[0.8], 0.8, 0.05, &spent, &budget, &base), 0.8);
        let lam = CapabilityConfig {
            resource_penalty_lambda: 0.1,
            ..base
        };
        assert!((capability(&[0.8], 0.8, 0.0, &spent, &budget, &lam) - 0.7).abs() < 1e-15);
        let beta = CapabilityConfig {
            uncertainty_penalty_beta: 1.0,
            ..base
        };
        assert!((capability(&[0.8], 0.8, 0.05, &spent, &budget, &beta) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_budget_saturates_penalty() {
        let cfg = CapabilityConfig {
            resource_penalty_lambda: 0.3,
            ..CapabilityConfig::default()
        };
        let f = capability(
            &[0.9],
            0.9,
            0.0,
            &Resources::new(5.0, 0.0),
            &Resources::new(0.0, 0.0),
            &cfg,
        );
        assert!((f - 0.6).abs() < 1e-15);
        assert_eq!(
            resource_ratio(&Resources::default(), &Resources::default()),
            0.0
        );
    }

    #[test]
    fn quantile_aggregation() {
        let xs = [0.4, 0.1, 0.3, 0.2];
        assert_eq!(lower_quantile(&xs, 0.0), 0.1);
        assert_eq!(lower_quantile(&xs, 0.5), 0.2);
        assert_eq!(lower_quantile(&xs, 1.0), 0.4);
    }

    #[test]
    fn invalid_battery_rejected_before_sampling() {
        let mut b = constant_battery(&[1.0, 0.0]);
        b.sampling_law[0].weight = 0.9;
        let err = evaluate_battery(
            &agent(),
            &b,
            5,
            0,
            &CapabilityConfig::default(),
            &Sequential,
        )
        .unwrap_err();
        assert!(matches!(err, EvalError::InvalidBattery(_)));
        let err = evaluate_battery(
            &agent(),
            &constant_battery(&[1.0]),
            0,
            0,
            &CapabilityConfig::default(),
            &Sequential,
        )
        .unwrap_err();
        assert_eq!(err, EvalError::NoSamples);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let mut b = constant_battery(&[1.0]);
        b.tasks[0].score_map = ScoreMap::Quadratic {
            center: vec![0.0, 0.0],
            sharpness: 1.0,
            noise_sd: 0.0,
        };
        let err = evaluate_battery(
            &agent(),
            &b,
            5,
            0,
            &CapabilityConfig::default(),
            &Sequential,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            EvalError::Model(ModelError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_member_panel_matches_evaluation() {
        let b = constant_battery(&[0.2, 0.9, 0.5]);
        let (_, law) = evaluate_battery(
            &agent(),
            &b,
            40,
            11,
            &CapabilityConfig::default(),
            &Sequential,
        )
        .unwrap();
        let panel = probe_panel_scores(&[agent()], &b, 40, 11, &Sequential).unwrap();
        assert_eq!(law, panel);
        assert_eq!(
            probe_panel_scores(&[], &b, 4, 0, &Sequential),
            Err(EvalError::EmptyPanel)
        );
    }
}
