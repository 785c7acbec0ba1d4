//! One-step expected improvement over a learning-rate grid: second-order
//! predictions against a Monte Carlo measurement.

use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::fd::{grad_hess_fd, DEFAULT_FD_STEP};
use super::{tolerances, GvuConfig, GvuError, GvuOperator, Landscape, UpdaterKind};
use crate::eval::Executor;
use crate::math::{mean_stderr, Z95};
use crate::rng::StreamKey;

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceOptions {
    pub eta_grid: Vec<f64>,
    pub replicas: usize,
    pub fd_step: f64,
}

impl VarianceOptions {
    /// `n` log-spaced points from `lo` to `hi` inclusive.
    pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n <= 1 {
            return alloc::vec![lo];
        }
        let (a, b) = (libm::log(lo), libm::log(hi));
        (0..n)
            .map(|i| libm::exp(a + (b - a) * i as f64 / (n - 1) as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub eta: f64,
    /// η‖∇F‖² − (η²/2)·Tr(H Σ_GV).
    pub predicted_closed_form: f64,
    /// η·∇Fᵀμ + (η²/2)·(μᵀHμ + Tr(H S)) with μ = E[P ĝ], S = Cov[P ĝ].
    pub predicted_taylor: f64,
    /// Deterministic noiseless step F(θ + η·P∇F) − F(θ).
    pub noiseless_exact: f64,
    pub measured_mean: f64,
    pub measured_stderr: f64,
    pub measured_lcb: f64,
    pub measured_ucb: f64,
    /// C·η³ with the calibrated C.
    pub taylor_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceReport {
    pub theta: Vec<f64>,
    pub updater: UpdaterKind,
    /// "analytic" or "finite-difference".
    pub derivative_source: String,
    pub grad: Vec<f64>,
    pub hessian: DMatrix<f64>,
    pub sigma_gv: DMatrix<f64>,
    /// Covariance of the landscape's own estimator, when it has a model.
    pub estimator_covariance: Option<DMatrix<f64>>,
    pub grad_norm_sq: f64,
    /// Tr(H Σ_GV).
    pub trace_h_sigma: f64,
    /// −(∇ᵀH∇ + Tr(H Σ_tot)) for the plain updater: the curvature-noise
    /// term that actually opposes improvement at second order.
    pub curvature_noise_load: f64,
    pub curve: Vec<CurvePoint>,
    /// Largest grid η whose measured LCB is > 0; 0 when none is.
    pub eta_star_hat: f64,
    /// 2 / η*_hat; `None` when η*_hat = 0.
    pub c_hat: Option<f64>,
    /// Tr(H Σ_GV) < c_hat·‖∇F‖².
    pub condition_holds: bool,
    /// curvature_noise_load < c_hat·‖∇F‖².
    pub taylor_condition_holds: bool,
    /// Remainder constant C calibrated on the noiseless step.
    pub slack_c: f64,
    pub replicas: usize,
    pub notes: Vec<String>,
}

fn quad_form(h: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (v.transpose() * h * v)[(0, 0)]
}

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b).trace()
}

/// Stream for replica `r` of the one-step measurement; shared across the
/// η grid so that curves use common random numbers.
pub fn analyze_stream(seed_root: u64, replica: u64) -> StreamKey {
    StreamKey::new(seed_root)
        .with_str("analyze")
        .with_u64(replica)
}

pub fn variance_analysis<L, E>(
    theta: &[f64],
    cfg: &GvuConfig,
    opts: &VarianceOptions,
    landscape: &mut L,
    exec: &E,
) -> Result<VarianceReport, GvuError>
where
    L: Landscape + Sync + ?Sized,
    E: Executor,
{
    if opts.eta_grid.is_empty() {
        return Err(GvuError::EmptyGrid);
    }
    if let Some(bad) = opts.eta_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(GvuError::BadEta(*bad));
    }
    let d = landscape.dim();
    if theta.len() != d {
        return Err(GvuError::DimensionMismatch {
            expected: d,
            got: theta.len(),
        });
    }
    landscape.refresh(theta, 0);
    let mut notes = Vec::new();
    let l: &L = landscape;
    let op = GvuOperator::new(cfg, d)?;

    let (grad, hessian, source) = match (l.gradient(theta), l.hessian(theta)) {
        (Some(g), Some(h)) => (g, h, "analytic"),
        _ => {
            let (g, h) = grad_hess_fd(&|x: &[f64]| l.value(x), theta, opts.fd_step)?;
            (g, h, "finite-difference")
        }
    };
    let g = DVector::from_column_slice(&grad);
    let grad_norm_sq = g.norm_squared();
    let sigma_gv = op.sigma_gv();
    let trace_h_sigma = trace_product(&hessian, &sigma_gv);

    let est_cov = l.estimator_covariance(theta, op.n_candidates);
    if est_cov.is_none() {
        notes.push("landscape estimator covariance unknown; treated as zero".into());
    }
    let sigma_tot = match &est_cov {
        Some(c) => &sigma_gv + c,
        None => sigma_gv.clone(),
    };
    let projector = match cfg.updater {
        UpdaterKind::PlainGradient => DMatrix::identity(d, d),
        UpdaterKind::NaturalGradient => {
            let fisher = l.fisher(theta).ok_or_else(|| {
                GvuError::Unsupported("natural-gradient updater needs a Fisher metric".into())
            })?;
            fisher
                .pseudo_inverse(tolerances::PINV_EPS)
                .map_err(|e| GvuError::Unsupported(alloc::format!("pseudo-inverse: {e}")))?
        }
    };
    let mu = &projector * &g;
    let s = &projector * &sigma_tot * projector.transpose();
    let linear = g.dot(&mu);
    let quadratic = quad_form(&hessian, &mu) + trace_product(&hessian, &s);
    let curvature_noise_load = -(quad_form(&hessian, &g) + trace_product(&hessian, &sigma_tot));
    if trace_h_sigma < 0.0 {
        notes.push(
            "Tr(H Σ_GV) < 0: the noise term of the two-term form adds to the gradient term, so its inequality holds for any c > 0; see curvature_noise_load".into(),
        );
    }

    // Noiseless deterministic steps calibrate the remainder constant.
    let f0 = l.value(theta);
    let f_at = |eta: f64| -> f64 {
        let x: Vec<f64> = (0..d).map(|i| theta[i] + eta * mu[i]).collect();
        l.value(&x) - f0
    };
    let noiseless_quadratic = quad_form(&hessian, &mu);
    let mut slack_c: f64 = 0.0;
    for &eta in &opts.eta_grid {
        let pred = eta * linear + 0.5 * eta * eta * noiseless_quadratic;
        let r = (f_at(eta) - pred).abs() / (eta * eta * eta);
        if r.is_finite() {
            slack_c = slack_c.max(r);
        }
    }

    let m = opts.replicas.max(1);
    let grid = &opts.eta_grid;
    let per_replica: Vec<Result<Vec<f64>, GvuError>> = exec.map_indexed(m, |r| {
        let key = analyze_stream(cfg.seed_root, r as u64);
        grid.iter()
            .map(|&eta| {
                let mut rng = key.rng(0);
                let (next, _) = op.with_eta(eta).step(theta, l, &mut rng)?;
                if next.iter().any(|x| !x.is_finite()) {
                    return Err(GvuError::NonFiniteTheta { t: 1 });
                }
                Ok(l.value(&next) - f0)
            })
            .collect()
    });
    let per_replica: Vec<Vec<f64>> = per_replica.into_iter().collect::<Result<_, _>>()?;

    let mut curve = Vec::with_capacity(grid.len());
    for (k, &eta) in grid.iter().enumerate() {
        let column: Vec<f64> = per_replica.iter().map(|row| row[k]).collect();
        let (mean, se) = mean_stderr(&column);
        curve.push(CurvePoint {
            eta,
            predicted_closed_form: eta * grad_norm_sq - 0.5 * eta * eta * trace_h_sigma,
            predicted_taylor: eta * linear + 0.5 * eta * eta * quadratic,
            noiseless_exact: f_at(eta),
            measured_mean: mean,
            measured_stderr: se,
            measured_lcb: mean - Z95 * se,
            measured_ucb: mean + Z95 * se,
            taylor_slack: slack_c * eta * eta * eta,
        });
    }

    let eta_star_hat = curve
        .iter()
        .filter(|c| c.measured_lcb > 0.0)
        .map(|c| c.eta)
        .fold(0.0, f64::max);
    let c_hat = if eta_star_hat > 0.0 {
        Some(2.0 / eta_star_hat)
    } else {
        notes.push("no grid η has measured LCB > 0".into());
        None
    };
    let condition_holds = c_hat.is_some_and(|c| trace_h_sigma < c * grad_norm_sq);
    let taylor_condition_holds = c_hat.is_some_and(|c| curvature_noise_load < c * grad_norm_sq);

    Ok(VarianceReport {
        theta: theta.to_vec(),
        updater: cfg.updater,
        derivative_source: source.into(),
        grad,
        hessian,
        sigma_gv,
        estimator_covariance: est_cov,
        grad_norm_sq,
        trace_h_sigma,
        curvature_noise_load,
        curve,
        eta_star_hat,
        c_hat,
        condition_holds,
        taylor_condition_holds,
        slack_c,
        replicas: m,
        notes,
    })
}

impl Default for VarianceOptions {
    fn default() -> Self {
        VarianceOptions {
            eta_grid: Self::log_grid(1e-3, 1e-1, 9),
            replicas: 1000,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}
