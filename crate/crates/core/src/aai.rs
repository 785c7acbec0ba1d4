//! The AAI index (per-family worst-case capability) and level gating.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::eval::{evaluate_battery, EvalError, Executor};
use crate::gvu::KappaEstimate;
use crate::model::{Agent, Battery, CapabilityConfig, Violation};

/// Number of levels, AAI-0 through AAI-4.
pub const LEVELS: usize = 5;
pub const MAX_LEVEL: u8 = 4;

/// Short labels for the five levels.
pub const LEVEL_NAMES: [&str; LEVELS] = [
    "narrow, non-autonomous",
    "task-specific, tool-using",
    "broadly capable assistant",
    "open-world agent",
    "AGI",
];

pub fn level_name(level: u8) -> &'static str {
    LEVEL_NAMES[usize::from(level.min(MAX_LEVEL))]
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AaiError {
    #[error("family `{0}` has no batteries")]
    EmptyFamily(String),
    #[error("no families configured")]
    NoFamilies,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateRow {
    pub family: String,
    /// θ_{f,ℓ} for ℓ = 0..=4.
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateTable {
    pub rows: Vec<GateRow>,
    /// Largest tolerated drop under drift, per level.
    pub drift_tolerance: Vec<f64>,
    /// Level 4 needs a κ lower confidence bound strictly above this.
    pub kappa_requirement_level4: f64,
}

impl GateTable {
    /// Placeholder table: 0, 0.2, 0.4, 0.6, 0.8 for every family. The
    /// numbers are illustrative, not calibrated against anything.
    pub fn placeholder(families: &[&str]) -> Self {
        GateTable {
            rows: families
                .iter()
                .map(|f| GateRow {
                    family: String::from(*f),
                    thresholds: alloc::vec![0.0, 0.2, 0.4, 0.6, 0.8],
                })
                .collect(),
            drift_tolerance: alloc::vec![1.0, 0.3, 0.2, 0.1, 0.05],
            kappa_requirement_level4: 0.0,
        }
    }
}

pub fn gate_table_validate(g: &GateTable) -> Vec<Violation> {
    let mut v = Vec::new();
    if g.rows.is_empty() {
        v.push(Violation::new("rows", "gate table has no families"));
    }
    let mut seen = alloc::collections::BTreeSet::new();
    for row in &g.rows {
        if !seen.insert(row.family.as_str()) {
            v.push(Violation::new(
                "rows",
                format!("duplicate family {}", row.family),
            ));
        }
        if row.thresholds.is_empty() {
            v.push(Violation::new(
                "thresholds",
                format!("family {} has an empty threshold row", row.family),
            ));
            continue;
        }
        if row.thresholds.len() != LEVELS {
            v.push(Violation::new(
                "thresholds",
                format!(
                    "family {} has {} thresholds, expected {LEVELS}",
                    row.family,
                    row.thresholds.len()
                ),
            ));
        }
        if row.thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            v.push(Violation::new(
                "thresholds",
                format!("family {} has a threshold outside [0,1]", row.family),
            ));
        }
        for (l, w) in row.thresholds.windows(2).enumerate() {
            if w[1] < w[0] {
                v.push(Violation::new(
                    "thresholds",
                    format!(
                        "family {} threshold decreases from level {} to {}",
                        row.family,
                        l,
                        l + 1
                    ),
                ));
            }
        }
    }
    if g.drift_tolerance.len() != LEVELS {
        v.push(Violation::new(
            "drift_tolerance",
            format!("expected {LEVELS} drift tolerances"),
        ));
    }
    if g.drift_tolerance.iter().any(|t| !(0.0..=1.0).contains(t)) {
        v.push(Violation::new(
            "drift_tolerance",
            "drift tolerance outside [0,1]",
        ));
    }
    if g.drift_tolerance.windows(2).any(|w| w[1] > w[0]) {
        v.push(Violation::new(
            "drift_tolerance",
            "drift tolerance increases with level",
        ));
    }
    if !(g.kappa_requirement_level4.is_finite() && g.kappa_requirement_level4 >= 0.0) {
        v.push(Violation::new(
            "kappa_requirement_level4",
            "kappa requirement must be finite and nonnegative",
        ));
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryScore {
    pub battery_id: String,
    pub f_value: f64,
}

/// One battery re-evaluated under one of its drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftObservation {
    pub battery_id: String,
    pub drift_id: String,
    pub baseline: f64,
    pub drifted: f64,
}

/// Per-family drift re-evaluations.
pub type DriftRuns = BTreeMap<String, Vec<DriftObservation>>;

#[derive(Debug, Clone, PartialEq)]
pub struct LevelAssignment {
    pub level: Option<u8>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AaiProfile {
    pub agent_id: String,
    /// F_f = min over the family's batteries.
    pub family_scores: BTreeMap<String, f64>,
    pub per_battery: BTreeMap<String, Vec<BatteryScore>>,
    /// Worst drop under drift per family; filled by [`assign_level`].
    pub robustness_evidence: BTreeMap<String, f64>,
    pub level: Option<LevelAssignment>,
}

impl AaiProfile {
    /// Builds the index from per-battery capability values.
    pub fn from_battery_scores(
        agent_id: &str,
        per_battery: BTreeMap<String, Vec<BatteryScore>>,
    ) -> Result<Self, AaiError> {
        if per_battery.is_empty() {
            return Err(AaiError::NoFamilies);
        }
        let mut family_scores = BTreeMap::new();
        for (f, scores) in &per_battery {
            let min = scores
                .iter()
                .map(|s| s.f_value)
                .reduce(f64::min)
                .ok_or_else(|| AaiError::EmptyFamily(f.clone()))?;
            family_scores.insert(f.clone(), min);
        }
        Ok(AaiProfile {
            agent_id: String::from(agent_id),
            family_scores,
            per_battery,
            robustness_evidence: BTreeMap::new(),
            level: None,
        })
    }
}

/// Evaluates every battery of every family and takes the per-family min.
pub fn aai_index<E: Executor>(
    a: &Agent,
    batteries_by_family: &BTreeMap<String, Vec<Battery>>,
    cfg: &CapabilityConfig,
    n: usize,
    seed_root: u64,
    exec: &E,
) -> Result<AaiProfile, AaiError> {
    let mut per_battery = BTreeMap::new();
    for (family, batteries) in batteries_by_family {
        if batteries.is_empty() {
            return Err(AaiError::EmptyFamily(family.clone()));
        }
        let mut scores = Vec::with_capacity(batteries.len());
        for b in batteries {
            let (report, _) = evaluate_battery(a, b, n, seed_root, cfg, exec)?;
            scores.push(BatteryScore {
                battery_id: b.id.clone(),
                f_value: report.f_value,
            });
        }
        per_battery.insert(family.clone(), scores);
    }
    AaiProfile::from_battery_scores(&a.id, per_battery)
}

/// Re-evaluates each battery under every drift of its drift space.
pub fn drift_runs<E: Executor>(
    a: &Agent,
    batteries_by_family: &BTreeMap<String, Vec<Battery>>,
    cfg: &CapabilityConfig,
    n: usize,
    seed_root: u64,
    exec: &E,
) -> Result<DriftRuns, AaiError> {
    let mut runs = BTreeMap::new();
    for (family, batteries) in batteries_by_family {
        let mut obs = Vec::new();
        for b in batteries {
            let (base, _) = evaluate_battery(a, b, n, seed_root, cfg, exec)?;
            for d in &b.drift_space {
                let drifted = b.drifted(&d.id).map_err(EvalError::from)?;
                let (r, _) = evaluate_battery(a, &drifted, n, seed_root, cfg, exec)?;
                obs.push(DriftObservation {
                    battery_id: b.id.clone(),
                    drift_id: d.id.clone(),
                    baseline: base.f_value,
                    drifted: r.f_value,
                });
            }
        }
        runs.insert(family.clone(), obs);
    }
    Ok(runs)
}

/// Highest level ℓ whose gates hold for every family: the worst value over
/// baseline and drifts clears θ_{f,ℓ} and the worst drop stays within the
/// level's drift tolerance. Level 4 also needs κ evidence.
pub fn assign_level(
    profile: &mut AaiProfile,
    gates: &GateTable,
    drift: &DriftRuns,
    kappa: Option<&KappaEstimate>,
) -> LevelAssignment {
    let mut notes = Vec::new();
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut degradation: BTreeMap<&str, f64> = BTreeMap::new();
    for row in &gates.rows {
        let f = row.family.as_str();
        let Some(&base) = profile.family_scores.get(f) else {
            notes.push(format!(
                "family {f} missing from profile; no level can pass"
            ));
            continue;
        };
        let obs = drift.get(f).map(Vec::as_slice).unwrap_or(&[]);
        let min_drifted = obs.iter().map(|o| o.drifted).fold(base, f64::min);
        let drop = obs
            .iter()
            .map(|o| o.baseline - o.drifted)
            .fold(0.0, f64::max);
        worst.insert(f, min_drifted);
        degradation.insert(f, drop);
        profile.robustness_evidence.insert(String::from(f), drop);
    }

    let gate_passes = |l: usize| -> bool {
        gates.rows.iter().all(|row| {
            let f = row.family.as_str();
            match (worst.get(f), degradation.get(f), row.thresholds.get(l)) {
                (Some(w), Some(d), Some(t)) => {
                    *w >= *t && *d <= gates.drift_tolerance.get(l).copied().unwrap_or(0.0)
                }
                _ => false,
            }
        })
    };

    let mut level: Option<u8> = None;
    for l in 0..LEVELS {
        if gate_passes(l) {
            level = Some(l as u8);
        }
    }
    if level == Some(MAX_LEVEL) {
        match kappa {
            None => {
                notes.push(String::from(
                    "level 4 thresholds pass but no kappa evidence was supplied; capped at 3",
                ));
                level = (0..LEVELS - 1)
                    .rev()
                    .find(|&l| gate_passes(l))
                    .map(|l| l as u8);
            }
            Some(k) if k.lcb.is_nan() || k.lcb <= gates.kappa_requirement_level4 => {
                notes.push(format!(
                    "level 4 thresholds pass but kappa LCB {} does not exceed {}",
                    k.lcb, gates.kappa_requirement_level4
                ));
                level = (0..LEVELS - 1)
                    .rev()
                    .find(|&l| gate_passes(l))
                    .map(|l| l as u8);
            }
            Some(_) => {}
        }
    }
    let out = LevelAssignment { level, notes };
    profile.level = Some(out.clone());
    out
}
