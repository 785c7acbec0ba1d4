//! Generator-Verifier-Updater dynamics.
//!
//! One step: the landscape's generator proposes candidates and its verifier
//! scores them, producing a gradient estimate. Configured generator noise
//! ξ_G ~ N(0, Σ_G) and verifier noise ξ_V ~ N(0, Σ_V) are added, and the
//! updater moves θ by η·P·ĝ with P the identity or the Fisher
//! pseudo-inverse.

pub mod fd;
pub mod fisher;
pub mod kappa;
pub mod landscape;
pub mod presets;
pub mod variance;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::eval::Executor;
use crate::math::norm_sq;
use crate::rng::StreamKey;

pub use fd::{fd_gradient, grad_hess_fd, DEFAULT_FD_STEP};
pub use fisher::{fisher_metric, natural_direction_softmax, softmax_fisher};
pub use kappa::{kappa_estimate, kappa_from_series, KappaClass, KappaEstimate};
pub use landscape::{
    grad_norm_sq, Adversarial, BanditFeedback, BanditLandscape, CandidateSampling, GradientSample,
    Landscape, LandscapeBinding, QuadraticLandscape, SelfPlayLandscape,
};
pub use presets::{preset, Preset, PresetKind};
pub use variance::{variance_analysis, CurvePoint, VarianceOptions, VarianceReport};

/// Numerical tolerances used across the module.
pub mod tolerances {
    /// Smallest admissible covariance eigenvalue.
    pub const PSD_EIGEN_FLOOR: f64 = -1e-10;
    /// Relative asymmetry allowed in a covariance matrix.
    pub const SYMMETRY_REL: f64 = 1e-12;
    /// Singular values below this are treated as zero in pseudo-inverses.
    pub const PINV_EPS: f64 = 1e-12;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GvuError {
    #[error("learning rate must be finite and > 0, got {0}")]
    BadEta(f64),
    #[error("{which} covariance: {reason}")]
    BadCovariance { which: &'static str, reason: String },
    #[error("dimension mismatch: landscape has {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("steps must be >= 1")]
    NoSteps,
    #[error("non-finite evaluation at coordinate {coordinate}")]
    NonFiniteEvaluation { coordinate: usize },
    #[error("finite-difference step must be > 0, got {0}")]
    BadStep(f64),
    #[error("non-finite parameters after step {t}")]
    NonFiniteTheta { t: usize },
    #[error("window of {window} entries needs at least 2 and at most {len}")]
    BadWindow { window: usize, len: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("empty eta grid")]
    EmptyGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    Zero,
    Isotropic(f64),
    Diagonal(Vec<f64>),
    /// Row-major square matrix.
    Full(Vec<Vec<f64>>),
}

impl CovarianceSpec {
    /// Materializes the covariance at dimension `d`, checking symmetry and
    /// positive semidefiniteness.
    pub fn matrix(&self, d: usize, which: &'static str) -> Result<DMatrix<f64>, GvuError> {
        let bad = |reason: String| GvuError::BadCovariance { which, reason };
        let m = match self {
            CovarianceSpec::Zero => DMatrix::zeros(d, d),
            CovarianceSpec::Isotropic(s) => DMatrix::identity(d, d) * *s,
            CovarianceSpec::Diagonal(v) => {
                if v.len() != d {
                    return Err(bad(format!("diagonal has {} entries, need {d}", v.len())));
                }
                DMatrix::from_diagonal(&DVector::from_column_slice(v))
            }
            CovarianceSpec::Full(rows) => {
                if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                    return Err(bad(format!("matrix must be {d}x{d}")));
                }
                DMatrix::from_fn(d, d, |i, j| rows[i][j])
            }
        };
        if m.iter().any(|x| !x.is_finite()) {
            return Err(bad("non-finite entry".into()));
        }
        let scale = m.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for i in 0..d {
            for j in i + 1..d {
                if (m[(i, j)] - m[(j, i)]).abs() > tolerances::SYMMETRY_REL * scale {
                    return Err(bad(format!("not symmetric at ({i},{j})")));
                }
            }
        }
        if d > 0 {
            let min = SymmetricEigen::new(m.clone())
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if min < tolerances::PSD_EIGEN_FLOOR {
                return Err(bad(format!("not PSD, min eigenvalue {min:e}")));
            }
        }
        Ok(m)
    }
}

/// A factor L with L·Lᵀ = Σ.
fn sampling_factor(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let d = sigma.nrows();
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || sigma[(i, j)] == 0.0));
    if diagonal {
        return DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                libm::sqrt(sigma[(i, i)].max(0.0))
            } else {
                0.0
            }
        });
    }
    let eig = SymmetricEigen::new(sigma.clone());
    let mut l = eig.eigenvectors.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = libm::sqrt(lambda.max(0.0));
        for i in 0..d {
            l[(i, j)] *= s;
        }
    }
    l
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdaterKind {
    PlainGradient,
    NaturalGradient,
}

impl UpdaterKind {
    pub fn id(self) -> &'static str {
        match self {
            UpdaterKind::PlainGradient => "plain-gradient",
            UpdaterKind::NaturalGradient => "natural-gradient",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        match s {
            "plain-gradient" => Some(UpdaterKind::PlainGradient),
            "natural-gradient" => Some(UpdaterKind::NaturalGradient),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GvuConfig {
    pub eta: f64,
    pub generator_noise: CovarianceSpec,
    pub verifier_noise: CovarianceSpec,
    pub updater: UpdaterKind,
    pub n_candidates: usize,
    pub steps: usize,
    pub replicas: usize,
    pub seed_root: u64,
}

impl Default for GvuConfig {
    fn default() -> Self {
        GvuConfig {
            eta: 0.1,
            generator_noise: CovarianceSpec::Zero,
            verifier_noise: CovarianceSpec::Zero,
            updater: UpdaterKind::PlainGradient,
            n_candidates: 1,
            steps: 100,
            replicas: 1,
            seed_root: 0,
        }
    }
}

/// A validated configuration bound to a dimension. η = 0 is allowed here so
/// that the fixed-point case can be exercised; [`GvuConfig`] validation for
/// flows requires η > 0.
#[derive(Debug, Clone)]
pub struct GvuOperator {
    pub eta: f64,
    pub updater: UpdaterKind,
    pub n_candidates: usize,
    pub sigma_g: DMatrix<f64>,
    pub sigma_v: DMatrix<f64>,
    factor_g: DMatrix<f64>,
    factor_v: DMatrix<f64>,
}

impl GvuOperator {
    pub fn new(cfg: &GvuConfig, dim: usize) -> Result<Self, GvuError> {
        if !(cfg.eta.is_finite() && cfg.eta >= 0.0) {
            return Err(GvuError::BadEta(cfg.eta));
        }
        let sigma_g = cfg.generator_noise.matrix(dim, "generator")?;
        let sigma_v = cfg.verifier_noise.matrix(dim, "verifier")?;
        Ok(GvuOperator {
            eta: cfg.eta,
            updater: cfg.updater,
            n_candidates: cfg.n_candidates.max(1),
            factor_g: sampling_factor(&sigma_g),
            factor_v: sampling_factor(&sigma_v),
            sigma_g,
            sigma_v,
        })
    }

    pub fn with_eta(&self, eta: f64) -> Self {
        GvuOperator {
            eta,
            ..self.clone()
        }
    }

    /// Σ_GV = Σ_G + Σ_V.
    pub fn sigma_gv(&self) -> DMatrix<f64> {
        &self.sigma_g + &self.sigma_v
    }

    fn noise(factor: &DMatrix<f64>, rng: &mut dyn RngCore) -> DVector<f64> {
        let d = factor.nrows();
        let z = DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut *rng)));
        factor * z
    }

    /// One GVU step. Draw order: the landscape's own sampling, then d
    /// normals for ξ_G, then d normals for ξ_V.
    pub fn step<L: Landscape + ?Sized>(
        &self,
        theta: &[f64],
        landscape: &L,
        rng: &mut dyn RngCore,
    ) -> Result<(Vec<f64>, StepRecord), GvuError> {
        let d = landscape.dim();
        if theta.len() != d {
            return Err(GvuError::DimensionMismatch {
                expected: d,
                got: theta.len(),
            });
        }
        let sample = landscape.sample_gradient(theta, self.n_candidates, rng);
        let xi_g = Self::noise(&self.factor_g, rng);
        let xi_v = Self::noise(&self.factor_v, rng);
        let candidate: Vec<f64> = (0..d).map(|i| sample.gradient[i] + xi_g[i]).collect();
        let signal: Vec<f64> = (0..d).map(|i| candidate[i] + xi_v[i]).collect();
        let direction = match self.updater {
            UpdaterKind::PlainGradient => signal.clone(),
            UpdaterKind::NaturalGradient => {
                landscape.natural_direction(theta, &signal).ok_or_else(|| {
                    GvuError::Unsupported(
                        "natural-gradient updater needs a softmax-policy landscape".into(),
                    )
                })?
            }
        };
        let next: Vec<f64> = theta
            .iter()
            .zip(&direction)
            .map(|(t, g)| t + self.eta * g)
            .collect();
        let record = StepRecord {
            z_norm: libm::sqrt(norm_sq(&candidate)),
            r_mean: sample.mean_signal,
            signal,
            direction,
        };
        Ok((next, record))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// Norm of the generator's noisy proposal.
    pub z_norm: f64,
    /// Mean verifier signal over the candidates.
    pub r_mean: f64,
    /// ĝ after both noise sources.
    pub signal: Vec<f64>,
    /// P·ĝ.
    pub direction: Vec<f64>,
}

/// Single step with a fresh operator.
pub fn gvu_step<L: Landscape + ?Sized>(
    theta: &[f64],
    cfg: &GvuConfig,
    landscape: &L,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, StepRecord), GvuError> {
    GvuOperator::new(cfg, landscape.dim())?.step(theta, landscape, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub t: usize,
    pub theta: Vec<f64>,
    pub f: f64,
    pub grad_norm_sq: f64,
    /// Summaries of the step taken from this θ; `None` on the final entry.
    pub z_norm: Option<f64>,
    pub r_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub replica: u64,
    pub entries: Vec<TraceEntry>,
    /// Diagnostic when the flow stopped early.
    pub aborted: Option<String>,
}

impl FlowTrace {
    pub fn times(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.t as f64).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.f).collect()
    }

    /// F_{t+1} − F_t per step.
    pub fn delta_f(&self) -> Vec<f64> {
        self.entries.windows(2).map(|w| w[1].f - w[0].f).collect()
    }

    pub fn final_value(&self) -> Option<f64> {
        self.entries.last().map(|e| e.f)
    }
}

/// Per-step generator stream for one replica.
pub fn flow_stream(seed_root: u64, replica: u64) -> StreamKey {
    StreamKey::new(seed_root).with_str("gvu").with_u64(replica)
}

/// Runs `cfg.steps` steps from θ₀, recording T + 1 entries. F is the
/// noiseless landscape value at each θ_t, taken after the landscape is
/// refreshed for time t.
pub fn run_flow<L: Landscape + ?Sized>(
    theta0: &[f64],
    cfg: &GvuConfig,
    landscape: &mut L,
    replica: u64,
) -> Result<FlowTrace, GvuError> {
    if cfg.steps == 0 {
        return Err(GvuError::NoSteps);
    }
    if !(cfg.eta.is_finite() && cfg.eta > 0.0) {
        return Err(GvuError::BadEta(cfg.eta));
    }
    let op = GvuOperator::new(cfg, landscape.dim())?;
    if theta0.len() != landscape.dim() {
        return Err(GvuError::DimensionMismatch {
            expected: landscape.dim(),
            got: theta0.len(),
        });
    }
    let key = flow_stream(cfg.seed_root, replica);
    let mut trace = FlowTrace {
        replica,
        entries: Vec::with_capacity(cfg.steps + 1),
        aborted: None,
    };
    let mut theta = theta0.to_vec();
    for t in 0..=cfg.steps {
        landscape.refresh(&theta, t);
        let mut entry = TraceEntry {
            t,
            f: landscape.value(&theta),
            grad_norm_sq: grad_norm_sq(landscape, &theta),
            theta: theta.clone(),
            z_norm: None,
            r_mean: None,
        };
        if t == cfg.steps {
            trace.entries.push(entry);
            break;
        }
        let mut rng = key.rng(t as u64);
        match op.step(&theta, landscape, &mut rng) {
            Ok((next, rec)) => {
                entry.z_norm = Some(rec.z_norm);
                entry.r_mean = Some(rec.r_mean);
                trace.entries.push(entry);
                if next.iter().any(|x| !x.is_finite()) {
                    trace.aborted = Some(format!("{}", GvuError::NonFiniteTheta { t: t + 1 }));
                    break;
                }
                theta = next;
            }
            Err(e) => {
                trace.entries.push(entry);
                trace.aborted = Some(format!("{e}"));
                break;
            }
        }
    }
    Ok(trace)
}

/// `cfg.replicas` independent flows, each on its own clone of the
/// landscape, returned in replica order.
pub fn run_replicas<L, E>(
    theta0: &[f64],
    cfg: &GvuConfig,
    landscape: &L,
    exec: &E,
) -> Result<Vec<FlowTrace>, GvuError>
where
    L: Landscape + Clone + Sync,
    E: Executor,
{
    exec.map_indexed(cfg.replicas.max(1), |r| {
        let mut l = landscape.clone();
        run_flow(theta0, cfg, &mut l, r as u64)
    })
    .into_iter()
    .collect()
}

/// Mean of F_T over traces that ran to completion.
pub fn mean_final_value(traces: &[FlowTrace]) -> f64 {
    let finals: Vec<f64> = traces.iter().filter_map(|t| t.final_value()).collect();
    finals.iter().sum::<f64>() / finals.len().max(1) as f64
}
