//! JSON spec files for batteries, agents, gate tables and GVU runs.
//!
//! Every file carries a `schema` tag naming its kind and version. Battery
//! sampling weights are decimal strings and agent parameters hex-float
//! strings, so values survive a round trip bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use moduli_core::aai::{gate_table_validate, GateRow, GateTable};
use moduli_core::gvu::{
    Adversarial, BanditFeedback, BanditLandscape, CandidateSampling, CovarianceSpec, GvuConfig,
    GvuOperator, Landscape, LandscapeBinding, Preset, QuadraticLandscape, SelfPlayLandscape,
    UpdaterKind,
};
use moduli_core::model::{
    induce_policy, validate_battery, Agent, Architecture, Battery, Drift, DriftKind, Family,
    MonotoneMap, Resources, SamplingEntry, ScoreMap, SeedSpace, TaskInstance, Violation,
};
use serde::{Deserialize, Serialize};

use super::{from_json, read_file, unique_map, Decimal, FormatError, Mode};
use crate::hexfloat::{unwrap, wrap, HexF64};

pub const BATTERY_SCHEMA: &str = "moduli.battery/1";
pub const AGENT_SCHEMA: &str = "moduli.agent/1";
pub const GATES_SCHEMA: &str = "moduli.gates/1";
pub const GVU_SCHEMA: &str = "moduli.gvu/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourcesFile {
    pub time: f64,
    pub calls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMapFile {
    Constant {
        value: f64,
    },
    Quadratic {
        center: Vec<f64>,
        sharpness: f64,
        noise_sd: f64,
    },
    Bandit {
        means: Vec<f64>,
        rollout: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskFile {
    pub id: String,
    pub family_id: String,
    pub score_map: ScoreMapFile,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<String>,
    pub threshold_qstar: f64,
    pub resource_cost: ResourcesFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyFile {
    pub id: String,
    pub task_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingFile {
    pub task_id: String,
    pub seed_stream: u32,
    pub drift_id: String,
    pub weight: Decimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftKindFile {
    Identity,
    InputShift {
        offset: Vec<f64>,
    },
    ScoreShift {
        delta: f64,
    },
    Remix {
        weights: Vec<Decimal>,
        magnitude: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftFile {
    pub id: String,
    pub kind: DriftKindFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSpaceFile {
    pub streams: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryFile {
    pub schema: String,
    /// Architecture the score maps expect; absent when every task is
    /// constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<String>,
    pub id: String,
    pub tasks: Vec<TaskFile>,
    pub families: Vec<FamilyFile>,
    pub sampling_law: Vec<SamplingFile>,
    pub drift_space: Vec<DriftFile>,
    pub seed_space: SeedSpaceFile,
    pub resource_budget: ResourcesFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentFile {
    pub schema: String,
    pub id: String,
    pub architecture: String,
    pub theta: Vec<HexF64>,
    #[serde(default, deserialize_with = "unique_map")]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRowFile {
    pub family: String,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatesFile {
    pub schema: String,
    pub rows: Vec<GateRowFile>,
    pub drift_tolerance: Vec<f64>,
    pub kappa_requirement_level4: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceFile {
    Zero,
    Isotropic(f64),
    Diagonal(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateFile {
    pub center: Vec<f64>,
    pub sharpness: f64,
    pub scorer_center: Vec<f64>,
    pub probe_sd: f64,
    pub scorer_noise_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LandscapeFile {
    Quadratic {
        center: Vec<f64>,
        sharpness: f64,
    },
    Bandit {
        means: Vec<f64>,
        /// `exact`, `mean-reward` or `bernoulli`.
        feedback: String,
    },
    SelfPlay {
        win: Vec<Vec<f64>>,
        opponent: Vec<HexF64>,
    },
    CandidateSampling(CandidateFile),
    Adversarial {
        generator: CandidateFile,
        verifier_eta: f64,
        verifier_seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvuFile {
    pub schema: String,
    pub eta: f64,
    pub generator_noise: CovarianceFile,
    pub verifier_noise: CovarianceFile,
    pub updater: String,
    pub n_candidates: usize,
    pub steps: usize,
    pub replicas: usize,
    pub seed_root: u64,
    pub landscape: LandscapeFile,
    pub theta0: Vec<HexF64>,
}

/// A validated GVU run description.
#[derive(Debug, Clone, PartialEq)]
pub struct GvuSetup {
    pub config: GvuConfig,
    pub landscape: LandscapeBinding,
    pub theta0: Vec<f64>,
}

impl From<Preset> for GvuSetup {
    fn from(p: Preset) -> Self {
        GvuSetup {
            config: p.config,
            landscape: p.landscape,
            theta0: p.theta0,
        }
    }
}

/// Any parsed spec file.
#[derive(Debug, Clone, PartialEq)]
pub enum Spec {
    Battery(Battery),
    Agent(Agent),
    Gates(GateTable),
    Gvu(GvuSetup),
}

fn resources_to_file(r: &Resources) -> ResourcesFile {
    ResourcesFile {
        time: r.time,
        calls: r.calls,
    }
}

fn resources_from_file(r: &ResourcesFile) -> Resources {
    Resources::new(r.time, r.calls)
}

/// Architecture implied by the score maps, from the first task that
/// depends on θ.
pub fn battery_architecture(b: &Battery) -> Option<Architecture> {
    b.tasks.iter().find_map(|t| match t.score_map {
        ScoreMap::Constant { .. } => None,
        ScoreMap::Quadratic { .. } => Some(Architecture::QuadraticField),
        ScoreMap::Bandit { .. } => Some(Architecture::SoftmaxBandit),
    })
}

impl From<&Battery> for BatteryFile {
    fn from(b: &Battery) -> Self {
        BatteryFile {
            schema: BATTERY_SCHEMA.into(),
            architecture: battery_architecture(b).map(|a| a.id().to_string()),
            id: b.id.clone(),
            tasks: b
                .tasks
                .iter()
                .map(|t| TaskFile {
                    id: t.id.clone(),
                    family_id: t.family_id.clone(),
                    score_map: match &t.score_map {
                        ScoreMap::Constant { value } => ScoreMapFile::Constant { value: *value },
                        ScoreMap::Quadratic {
                            center,
                            sharpness,
                            noise_sd,
                        } => ScoreMapFile::Quadratic {
                            center: center.clone(),
                            sharpness: *sharpness,
                            noise_sd: *noise_sd,
                        },
                        ScoreMap::Bandit { means, rollout } => ScoreMapFile::Bandit {
                            means: means.clone(),
                            rollout: *rollout,
                        },
                    },
                    transforms: t.transforms.iter().map(|m| m.id().to_string()).collect(),
                    threshold_qstar: t.threshold_qstar,
                    resource_cost: resources_to_file(&t.resource_cost),
                })
                .collect(),
            families: b
                .families
                .iter()
                .map(|f| FamilyFile {
                    id: f.id.clone(),
                    task_ids: f.task_ids.clone(),
                })
                .collect(),
            sampling_law: b
                .sampling_law
                .iter()
                .map(|e| SamplingFile {
                    task_id: e.task_id.clone(),
                    seed_stream: e.seed_stream,
                    drift_id: e.drift_id.clone(),
                    weight: Decimal(e.weight),
                })
                .collect(),
            drift_space: b
                .drift_space
                .iter()
                .map(|d| DriftFile {
                    id: d.id.clone(),
                    kind: match &d.kind {
                        DriftKind::Identity => DriftKindFile::Identity,
                        DriftKind::InputShift { offset } => DriftKindFile::InputShift {
                            offset: offset.clone(),
                        },
                        DriftKind::ScoreShift { delta } => {
                            DriftKindFile::ScoreShift { delta: *delta }
                        }
                        DriftKind::Remix { weights, magnitude } => DriftKindFile::Remix {
                            weights: weights.iter().copied().map(Decimal).collect(),
                            magnitude: *magnitude,
                        },
                    },
                })
                .collect(),
            seed_space: SeedSpaceFile {
                streams: b.seed_space.streams,
            },
            resource_budget: resources_to_file(&b.resource_budget),
        }
    }
}

fn check_schema(path: &Path, found: &str, want: &str) -> Result<(), FormatError> {
    if found == want {
        Ok(())
    } else {
        Err(FormatError::invalid(
            path,
            "schema",
            format!("expected `{want}`, found `{found}`"),
        ))
    }
}

/// Converts and validates; every broken invariant is reported at once.
pub fn battery_from_file(f: BatteryFile, path: &Path) -> Result<Battery, FormatError> {
    check_schema(path, &f.schema, BATTERY_SCHEMA)?;
    let mut violations = Vec::new();
    let mut tasks = Vec::with_capacity(f.tasks.len());
    for (i, t) in f.tasks.into_iter().enumerate() {
        let mut transforms = Vec::new();
        for m in &t.transforms {
            match MonotoneMap::from_id(m) {
                Some(m) => transforms.push(m),
                None => violations.push(Violation::new(
                    format!("tasks[{i}].transforms"),
                    format!("unknown monotone map `{m}`"),
                )),
            }
        }
        tasks.push(TaskInstance {
            id: t.id,
            family_id: t.family_id,
            score_map: match t.score_map {
                ScoreMapFile::Constant { value } => ScoreMap::Constant { value },
                ScoreMapFile::Quadratic {
                    center,
                    sharpness,
                    noise_sd,
                } => ScoreMap::Quadratic {
                    center,
                    sharpness,
                    noise_sd,
                },
                ScoreMapFile::Bandit { means, rollout } => ScoreMap::Bandit { means, rollout },
            },
            transforms,
            threshold_qstar: t.threshold_qstar,
            resource_cost: resources_from_file(&t.resource_cost),
        });
    }
    let b = Battery {
        id: f.id,
        tasks,
        families: f
            .families
            .into_iter()
            .map(|x| Family {
                id: x.id,
                task_ids: x.task_ids,
            })
            .collect(),
        sampling_law: f
            .sampling_law
            .into_iter()
            .map(|e| SamplingEntry {
                task_id: e.task_id,
                seed_stream: e.seed_stream,
                drift_id: e.drift_id,
                weight: e.weight.0,
            })
            .collect(),
        drift_space: f
            .drift_space
            .into_iter()
            .map(|d| Drift {
                id: d.id,
                kind: match d.kind {
                    DriftKindFile::Identity => DriftKind::Identity,
                    DriftKindFile::InputShift { offset } => DriftKind::InputShift { offset },
                    DriftKindFile::ScoreShift { delta } => DriftKind::ScoreShift { delta },
                    DriftKindFile::Remix { weights, magnitude } => DriftKind::Remix {
                        weights: weights.into_iter().map(|w| w.0).collect(),
                        magnitude,
                    },
                },
            })
            .collect(),
        seed_space: SeedSpace {
            streams: f.seed_space.streams,
        },
        resource_budget: resources_from_file(&f.resource_budget),
    };
    let derived = battery_architecture(&b).map(|a| a.id());
    if f.architecture.as_deref() != derived {
        violations.push(Violation::new(
            "architecture",
            format!(
                "declared {:?} but the score maps imply {:?}",
                f.architecture.as_deref(),
                derived
            ),
        ));
    }
    violations.extend(validate_battery(&b));
    if violations.is_empty() {
        Ok(b)
    } else {
        Err(FormatError::Invalid {
            path: path.to_path_buf(),
            violations,
        })
    }
}

impl From<&Agent> for AgentFile {
    fn from(a: &Agent) -> Self {
        AgentFile {
            schema: AGENT_SCHEMA.into(),
            id: a.id.clone(),
            architecture: a.architecture_id.clone(),
            theta: wrap(&a.theta),
            metadata: a.metadata.clone(),
        }
    }
}

pub fn agent_from_file(f: AgentFile, path: &Path) -> Result<Agent, FormatError> {
    check_schema(path, &f.schema, AGENT_SCHEMA)?;
    let a = Agent {
        id: f.id,
        theta: unwrap(&f.theta),
        architecture_id: f.architecture,
        metadata: f.metadata,
    };
    induce_policy(&a).map_err(|e| FormatError::invalid(path, "agent", e.to_string()))?;
    Ok(a)
}

impl From<&GateTable> for GatesFile {
    fn from(g: &GateTable) -> Self {
        GatesFile {
            schema: GATES_SCHEMA.into(),
            rows: g
                .rows
                .iter()
                .map(|r| GateRowFile {
                    family: r.family.clone(),
                    thresholds: r.thresholds.clone(),
                })
                .collect(),
            drift_tolerance: g.drift_tolerance.clone(),
            kappa_requirement_level4: g.kappa_requirement_level4,
        }
    }
}

pub fn gates_from_file(f: GatesFile, path: &Path) -> Result<GateTable, FormatError> {
    check_schema(path, &f.schema, GATES_SCHEMA)?;
    let g = GateTable {
        rows: f
            .rows
            .into_iter()
            .map(|r| GateRow {
                family: r.family,
                thresholds: r.thresholds,
            })
            .collect(),
        drift_tolerance: f.drift_tolerance,
        kappa_requirement_level4: f.kappa_requirement_level4,
    };
    let violations = gate_table_validate(&g);
    if violations.is_empty() {
        Ok(g)
    } else {
        Err(FormatError::Invalid {
            path: path.to_path_buf(),
            violations,
        })
    }
}

fn cov_to_file(c: &CovarianceSpec) -> CovarianceFile {
    match c {
        CovarianceSpec::Zero => CovarianceFile::Zero,
        CovarianceSpec::Isotropic(v) => CovarianceFile::Isotropic(*v),
        CovarianceSpec::Diagonal(d) => CovarianceFile::Diagonal(d.clone()),
        CovarianceSpec::Full(m) => CovarianceFile::Full(m.clone()),
    }
}

fn cov_from_file(c: CovarianceFile) -> CovarianceSpec {
    match c {
        CovarianceFile::Zero => CovarianceSpec::Zero,
        CovarianceFile::Isotropic(v) => CovarianceSpec::Isotropic(v),
        CovarianceFile::Diagonal(d) => CovarianceSpec::Diagonal(d),
        CovarianceFile::Full(m) => CovarianceSpec::Full(m),
    }
}

pub fn feedback_id(f: BanditFeedback) -> &'static str {
    match f {
        BanditFeedback::Exact => "exact",
        BanditFeedback::MeanReward => "mean-reward",
        BanditFeedback::Bernoulli => "bernoulli",
    }
}

pub fn feedback_from_id(s: &str) -> Option<BanditFeedback> {
    [
        BanditFeedback::Exact,
        BanditFeedback::MeanReward,
        BanditFeedback::Bernoulli,
    ]
    .into_iter()
    .find(|f| feedback_id(*f) == s)
}

fn candidate_to_file(c: &CandidateSampling) -> CandidateFile {
    CandidateFile {
        center: c.center.clone(),
        sharpness: c.sharpness,
        scorer_center: c.scorer_center.clone(),
        probe_sd: c.probe_sd,
        scorer_noise_sd: c.scorer_noise_sd,
    }
}

fn candidate_from_file(c: CandidateFile) -> CandidateSampling {
    CandidateSampling {
        center: c.center,
        sharpness: c.sharpness,
        scorer_center: c.scorer_center,
        probe_sd: c.probe_sd,
        scorer_noise_sd: c.scorer_noise_sd,
    }
}

impl From<&GvuSetup> for GvuFile {
    fn from(s: &GvuSetup) -> Self {
        let c = &s.config;
        GvuFile {
            schema: GVU_SCHEMA.into(),
            eta: c.eta,
            generator_noise: cov_to_file(&c.generator_noise),
            verifier_noise: cov_to_file(&c.verifier_noise),
            updater: c.updater.id().into(),
            n_candidates: c.n_candidates,
            steps: c.steps,
            replicas: c.replicas,
            seed_root: c.seed_root,
            landscape: match &s.landscape {
                LandscapeBinding::Quadratic(q) => LandscapeFile::Quadratic {
                    center: q.center.clone(),
                    sharpness: q.sharpness,
                },
                LandscapeBinding::Bandit(b) => LandscapeFile::Bandit {
                    means: b.means.clone(),
                    feedback: feedback_id(b.feedback).into(),
                },
                LandscapeBinding::SelfPlay(p) => LandscapeFile::SelfPlay {
                    win: p.win.clone(),
                    opponent: wrap(&p.opponent),
                },
                LandscapeBinding::CandidateSampling(c) => {
                    LandscapeFile::CandidateSampling(candidate_to_file(c))
                }
                LandscapeBinding::Adversarial(a) => LandscapeFile::Adversarial {
                    generator: candidate_to_file(&a.generator),
                    verifier_eta: a.verifier_eta,
                    verifier_seed: a.verifier_seed,
                },
            },
            theta0: wrap(&s.theta0),
        }
    }
}

/// Structural checks on a landscape that its constructors leave to the
/// caller.
fn landscape_violations(l: &LandscapeBinding) -> Vec<Violation> {
    let mut v = Vec::new();
    let positive = |x: f64| x.is_finite() && x > 0.0;
    let nonneg = |x: f64| x.is_finite() && x >= 0.0;
    let candidate = |c: &CandidateSampling, v: &mut Vec<Violation>| {
        if c.center.is_empty() || c.center.len() != c.scorer_center.len() {
            v.push(Violation::new(
                "landscape",
                "center and scorer_center must be nonempty and of equal length",
            ));
        }
        if !positive(c.sharpness) || !positive(c.probe_sd) || !nonneg(c.scorer_noise_sd) {
            v.push(Violation::new(
                "landscape",
                "sharpness and probe_sd must be > 0, scorer_noise_sd >= 0",
            ));
        }
    };
    match l {
        LandscapeBinding::Quadratic(q) => {
            if q.center.is_empty() || !positive(q.sharpness) {
                v.push(Violation::new(
                    "landscape",
                    "quadratic needs a center and sharpness > 0",
                ));
            }
        }
        LandscapeBinding::Bandit(b) => {
            if b.means.is_empty() || b.means.iter().any(|m| !(0.0..=1.0).contains(m)) {
                v.push(Violation::new(
                    "landscape",
                    "bandit means must be nonempty and in [0,1]",
                ));
            }
        }
        LandscapeBinding::SelfPlay(p) => {
            let k = p.win.len();
            let square = k > 0 && p.win.iter().all(|r| r.len() == k) && p.opponent.len() == k;
            let zero_sum = square
                && (0..k).all(|a| {
                    (0..k).all(|b| {
                        let w = p.win[a][b];
                        (0.0..=1.0).contains(&w) && (w + p.win[b][a] - 1.0).abs() <= 1e-12
                    })
                });
            if !zero_sum {
                v.push(Violation::new(
                    "landscape",
                    "self-play win matrix must be square, in [0,1], with win[a][b] + win[b][a] = 1",
                ));
            }
        }
        LandscapeBinding::CandidateSampling(c) => candidate(c, &mut v),
        LandscapeBinding::Adversarial(a) => {
            candidate(&a.generator, &mut v);
            if !nonneg(a.verifier_eta) {
                v.push(Violation::new("landscape", "verifier_eta must be >= 0"));
            }
        }
    }
    v
}

pub fn gvu_from_file(f: GvuFile, path: &Path) -> Result<GvuSetup, FormatError> {
    check_schema(path, &f.schema, GVU_SCHEMA)?;
    let mut violations = Vec::new();
    let updater = UpdaterKind::from_id(&f.updater).unwrap_or_else(|| {
        violations.push(Violation::new(
            "updater",
            format!("unknown updater `{}`", f.updater),
        ));
        UpdaterKind::PlainGradient
    });
    let landscape = match f.landscape {
        LandscapeFile::Quadratic { center, sharpness } => {
            LandscapeBinding::Quadratic(QuadraticLandscape::new(center, sharpness))
        }
        LandscapeFile::Bandit { means, feedback } => {
            let fb = feedback_from_id(&feedback).unwrap_or_else(|| {
                violations.push(Violation::new(
                    "landscape.bandit.feedback",
                    format!("unknown feedback `{feedback}`"),
                ));
                BanditFeedback::Exact
            });
            LandscapeBinding::Bandit(BanditLandscape {
                means,
                feedback: fb,
            })
        }
        LandscapeFile::SelfPlay { win, opponent } => {
            LandscapeBinding::SelfPlay(SelfPlayLandscape::new(win, unwrap(&opponent)))
        }
        LandscapeFile::CandidateSampling(c) => {
            LandscapeBinding::CandidateSampling(candidate_from_file(c))
        }
        LandscapeFile::Adversarial {
            generator,
            verifier_eta,
            verifier_seed,
        } => LandscapeBinding::Adversarial(Adversarial::new(
            candidate_from_file(generator),
            verifier_eta,
            verifier_seed,
        )),
    };
    violations.extend(landscape_violations(&landscape));
    let config = GvuConfig {
        eta: f.eta,
        generator_noise: cov_from_file(f.generator_noise),
        verifier_noise: cov_from_file(f.verifier_noise),
        updater,
        n_candidates: f.n_candidates,
        steps: f.steps,
        replicas: f.replicas,
        seed_root: f.seed_root,
    };
    let theta0 = unwrap(&f.theta0);
    if !(config.eta.is_finite() && config.eta > 0.0) {
        violations.push(Violation::new(
            "eta",
            format!("eta must be > 0, got {}", config.eta),
        ));
    }
    for (field, n) in [
        ("n_candidates", config.n_candidates),
        ("steps", config.steps),
        ("replicas", config.replicas),
    ] {
        if n == 0 {
            violations.push(Violation::new(field, format!("{field} must be >= 1")));
        }
    }
    if violations.is_empty() {
        let dim = landscape.dim();
        if theta0.len() != dim {
            violations.push(Violation::new(
                "theta0",
                format!(
                    "theta0 has {} components, the landscape has {dim}",
                    theta0.len()
                ),
            ));
        } else if theta0.iter().any(|t| !t.is_finite()) {
            violations.push(Violation::new("theta0", "theta0 must be finite"));
        } else if updater == UpdaterKind::NaturalGradient
            && landscape.natural_direction(&theta0, &theta0).is_none()
        {
            violations.push(Violation::new(
                "updater",
                "natural-gradient needs a landscape with a Fisher metric",
            ));
        }
        if let Err(e) = GvuOperator::new(&config, dim) {
            violations.push(Violation::new("noise", e.to_string()));
        }
    }
    if violations.is_empty() {
        Ok(GvuSetup {
            config,
            landscape,
            theta0,
        })
    } else {
        Err(FormatError::Invalid {
            path: path.to_path_buf(),
            violations,
        })
    }
}

#[derive(Deserialize)]
struct SchemaProbe {
    schema: String,
}

/// Reads any spec file, dispatching on its `schema` tag.
pub fn parse_spec(path: &Path, mode: Mode) -> Result<Spec, FormatError> {
    let text = read_file(path)?;
    parse_spec_str(&text, path, mode)
}

pub fn parse_spec_str(text: &str, path: &Path, mode: Mode) -> Result<Spec, FormatError> {
    let probe: SchemaProbe = from_json(text, path, Mode::Permissive)?;
    match probe.schema.as_str() {
        BATTERY_SCHEMA => battery_from_file(from_json(text, path, mode)?, path).map(Spec::Battery),
        AGENT_SCHEMA => agent_from_file(from_json(text, path, mode)?, path).map(Spec::Agent),
        GATES_SCHEMA => gates_from_file(from_json(text, path, mode)?, path).map(Spec::Gates),
        GVU_SCHEMA => gvu_from_file(from_json(text, path, mode)?, path).map(Spec::Gvu),
        other => Err(FormatError::invalid(
            path,
            "schema",
            format!("unknown schema `{other}`"),
        )),
    }
}

fn expected(path: &Path, want: &str) -> FormatError {
    FormatError::invalid(path, "schema", format!("expected a {want} spec"))
}

pub fn read_battery(path: &Path, mode: Mode) -> Result<Battery, FormatError> {
    match parse_spec(path, mode)? {
        Spec::Battery(b) => Ok(b),
        _ => Err(expected(path, "battery")),
    }
}

pub fn read_agent(path: &Path, mode: Mode) -> Result<Agent, FormatError> {
    match parse_spec(path, mode)? {
        Spec::Agent(a) => Ok(a),
        _ => Err(expected(path, "agent")),
    }
}

pub fn read_gates(path: &Path, mode: Mode) -> Result<GateTable, FormatError> {
    match parse_spec(path, mode)? {
        Spec::Gates(g) => Ok(g),
        _ => Err(expected(path, "gate table")),
    }
}

pub fn read_gvu(path: &Path, mode: Mode) -> Result<GvuSetup, FormatError> {
    match parse_spec(path, mode)? {
        Spec::Gvu(g) => Ok(g),
        _ => Err(expected(path, "GVU")),
    }
}

/// Serializes any spec to its canonical JSON text.
pub fn serialize_spec(spec: &Spec) -> String {
    match spec {
        Spec::Battery(b) => super::to_json(&BatteryFile::from(b)),
        Spec::Agent(a) => super::to_json(&AgentFile::from(a)),
        Spec::Gates(g) => super::to_json(&GatesFile::from(g)),
        Spec::Gvu(s) => super::to_json(&GvuFile::from(s)),
    }
}
