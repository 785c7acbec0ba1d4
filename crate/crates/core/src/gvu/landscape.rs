//! Capability landscapes the GVU operator climbs, each with the sampling
//! model its generator and verifier use.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use super::fisher::natural_direction_softmax;
use crate::math::{categorical, dot, norm_sq, softmax};
use crate::rng::StreamKey;

/// What the generator proposed and the verifier returned for one step,
/// before the configured Σ_G / Σ_V noise is added.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub gradient: Vec<f64>,
    /// Mean verifier signal over the candidates (return, win, score).
    pub mean_signal: f64,
}

pub trait Landscape {
    fn dim(&self) -> usize;

    /// Noiseless capability F(θ).
    fn value(&self, theta: &[f64]) -> f64;

    fn gradient(&self, _theta: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn hessian(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Draws `n_candidates` candidates, verifies them and returns the
    /// landscape's own gradient estimate.
    fn sample_gradient(
        &self,
        theta: &[f64],
        n_candidates: usize,
        rng: &mut dyn RngCore,
    ) -> GradientSample;

    /// Covariance of [`Landscape::sample_gradient`] at θ, when known.
    fn estimator_covariance(&self, _theta: &[f64], _n_candidates: usize) -> Option<DMatrix<f64>> {
        None
    }

    /// Fisher metric of the policy family at θ, when there is one.
    fn fisher(&self, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }

    /// Least-squares solution of g·x = v for the Fisher metric g.
    fn natural_direction(&self, _theta: &[f64], _v: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Called with the current parameters before the step at time `t`.
    fn refresh(&mut self, _theta: &[f64], _t: usize) {}
}

fn standard_normals(rng: &mut dyn RngCore, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

/// F(θ) = exp(−a‖θ−m‖²) with an exact gradient oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticLandscape {
    pub center: Vec<f64>,
    pub sharpness: f64,
}

impl QuadraticLandscape {
    pub fn new(center: Vec<f64>, sharpness: f64) -> Self {
        QuadraticLandscape { center, sharpness }
    }

    fn offset(&self, theta: &[f64]) -> Vec<f64> {
        theta.iter().zip(&self.center).map(|(t, m)| t - m).collect()
    }
}

pub(crate) fn quadratic_value(center: &[f64], a: f64, theta: &[f64]) -> f64 {
    let d2: f64 = theta
        .iter()
        .zip(center)
        .map(|(t, m)| (t - m) * (t - m))
        .sum();
    libm::exp(-a * d2)
}

impl Landscape for QuadraticLandscape {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        quadratic_value(&self.center, self.sharpness, theta)
    }

    fn gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        let f = self.value(theta);
        let a = self.sharpness;
        Some(
            self.offset(theta)
                .iter()
                .map(|x| -2.0 * a * x * f)
                .collect(),
        )
    }

    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let f = self.value(theta);
        let a = self.sharpness;
        let x = self.offset(theta);
        let d = x.len();
        Some(DMatrix::from_fn(d, d, |i, j| {
            let eye = if i == j { 1.0 } else { 0.0 };
            f * (4.0 * a * a * x[i] * x[j] - 2.0 * a * eye)
        }))
    }

    fn sample_gradient(&self, theta: &[f64], _n: usize, _rng: &mut dyn RngCore) -> GradientSample {
        GradientSample {
            gradient: self.gradient(theta).unwrap_or_default(),
            mean_signal: self.value(theta),
        }
    }

    fn estimator_covariance(&self, theta: &[f64], _n: usize) -> Option<DMatrix<f64>> {
        Some(DMatrix::zeros(theta.len(), theta.len()))
    }
}

/// Shared algebra for F = pᵀ·payoff with p = softmax(θ) and a fixed payoff
/// vector.
fn softmax_linear_gradient(p: &[f64], payoff: &[f64]) -> Vec<f64> {
    let f = dot(p, payoff);
    p.iter().zip(payoff).map(|(pi, ui)| pi * (ui - f)).collect()
}

fn softmax_linear_hessian(p: &[f64], payoff: &[f64]) -> DMatrix<f64> {
    let f = dot(p, payoff);
    let k = p.len();
    DMatrix::from_fn(k, k, |j, l| {
        let diag = if j == l { p[l] * (payoff[l] - f) } else { 0.0 };
        diag - p[j] * p[l] * (payoff[j] + payoff[l] - 2.0 * f)
    })
}

/// Covariance of one score-function sample r·(e_a − p), a ~ p, with
/// E[r | a] = `payoff[a]` and E[r² | a] = `second[a]`, divided by `n`.
fn score_function_covariance(p: &[f64], payoff: &[f64], second: &[f64], n: usize) -> DMatrix<f64> {
    let k = p.len();
    let grad = softmax_linear_gradient(p, payoff);
    let mut m = DMatrix::zeros(k, k);
    for a in 0..k {
        for i in 0..k {
            for j in 0..k {
                let ei = if i == a { 1.0 } else { 0.0 } - p[i];
                let ej = if j == a { 1.0 } else { 0.0 } - p[j];
                m[(i, j)] += p[a] * second[a] * ei * ej;
            }
        }
    }
    let outer = DMatrix::from_fn(k, k, |i, j| grad[i] * grad[j]);
    (m - outer) / n.max(1) as f64
}

/// What the bandit verifier returns for a sampled arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BanditFeedback {
    /// No rollouts: the exact gradient.
    Exact,
    /// The arm's mean reward.
    MeanReward,
    /// A Bernoulli reward with the arm's mean.
    Bernoulli,
}

/// Softmax bandit: F(θ) = softmax(θ)ᵀ·means. The generator samples arm
/// rollouts, the verifier returns their rewards, and the estimate is the
/// score-function (REINFORCE) gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditLandscape {
    pub means: Vec<f64>,
    pub feedback: BanditFeedback,
}

impl Landscape for BanditLandscape {
    fn dim(&self) -> usize {
        self.means.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        dot(&softmax(theta), &self.means)
    }

    fn gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        Some(softmax_linear_gradient(&softmax(theta), &self.means))
    }

    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(softmax_linear_hessian(&softmax(theta), &self.means))
    }

    fn sample_gradient(&self, theta: &[f64], n: usize, rng: &mut dyn RngCore) -> GradientSample {
        let p = softmax(theta);
        if self.feedback == BanditFeedback::Exact {
            return GradientSample {
                gradient: softmax_linear_gradient(&p, &self.means),
                mean_signal: dot(&p, &self.means),
            };
        }
        let k = p.len();
        let n = n.max(1);
        let mut g = vec![0.0; k];
        let mut total = 0.0;
        for _ in 0..n {
            let u_arm: f64 = rng.random();
            let u_reward: f64 = rng.random();
            let arm = categorical(&p, u_arm);
            let r = match self.feedback {
                BanditFeedback::Bernoulli if u_reward < self.means[arm] => 1.0,
                BanditFeedback::Bernoulli => 0.0,
                _ => self.means[arm],
            };
            total += r;
            for (i, gi) in g.iter_mut().enumerate() {
                let e = if i == arm { 1.0 } else { 0.0 };
                *gi += r * (e - p[i]);
            }
        }
        GradientSample {
            gradient: g.into_iter().map(|x| x / n as f64).collect(),
            mean_signal: total / n as f64,
        }
    }

    fn estimator_covariance(&self, theta: &[f64], n: usize) -> Option<DMatrix<f64>> {
        let p = softmax(theta);
        let second: Vec<f64> = match self.feedback {
            BanditFeedback::Exact => return Some(DMatrix::zeros(p.len(), p.len())),
            BanditFeedback::Bernoulli => self.means.clone(),
            BanditFeedback::MeanReward => self.means.iter().map(|m| m * m).collect(),
        };
        Some(score_function_covariance(&p, &self.means, &second, n))
    }

    fn fisher(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(super::fisher::softmax_fisher(&softmax(theta)))
    }

    fn natural_direction(&self, theta: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        Some(natural_direction_softmax(&softmax(theta), v))
    }
}

/// Zero-sum self-play on a symmetric game: `win[a][b]` is the probability
/// that arm `a` beats arm `b`, with win[a][b] + win[b][a] = 1. The
/// capability is the win rate against a frozen copy that is refreshed to the
/// current parameters before every step.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfPlayLandscape {
    pub win: Vec<Vec<f64>>,
    pub opponent: Vec<f64>,
}

impl SelfPlayLandscape {
    pub fn new(win: Vec<Vec<f64>>, opponent: Vec<f64>) -> Self {
        SelfPlayLandscape { win, opponent }
    }

    /// Expected win of each arm against the frozen opponent.
    fn payoff(&self) -> Vec<f64> {
        let q = softmax(&self.opponent);
        self.win.iter().map(|row| dot(row, &q)).collect()
    }
}

impl Landscape for SelfPlayLandscape {
    fn dim(&self) -> usize {
        self.win.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        dot(&softmax(theta), &self.payoff())
    }

    fn gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        Some(softmax_linear_gradient(&softmax(theta), &self.payoff()))
    }

    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(softmax_linear_hessian(&softmax(theta), &self.payoff()))
    }

    fn sample_gradient(&self, theta: &[f64], n: usize, rng: &mut dyn RngCore) -> GradientSample {
        let p = softmax(theta);
        let q = softmax(&self.opponent);
        let k = p.len();
        let n = n.max(1);
        let mut g = vec![0.0; k];
        let mut wins = 0.0;
        for _ in 0..n {
            let a = categorical(&p, rng.random());
            let b = categorical(&q, rng.random());
            let u: f64 = rng.random();
            let r = if u < self.win[a][b] { 1.0 } else { 0.0 };
            wins += r;
            for (i, gi) in g.iter_mut().enumerate() {
                let e = if i == a { 1.0 } else { 0.0 };
                *gi += r * (e - p[i]);
            }
        }
        GradientSample {
            gradient: g.into_iter().map(|x| x / n as f64).collect(),
            mean_signal: wins / n as f64,
        }
    }

    fn estimator_covariance(&self, theta: &[f64], n: usize) -> Option<DMatrix<f64>> {
        let payoff = self.payoff();
        Some(score_function_covariance(
            &softmax(theta),
            &payoff,
            &payoff,
            n,
        ))
    }

    fn fisher(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(super::fisher::softmax_fisher(&softmax(theta)))
    }

    fn natural_direction(&self, theta: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        Some(natural_direction_softmax(&softmax(theta), v))
    }

    fn refresh(&mut self, theta: &[f64], _t: usize) {
        self.opponent = theta.to_vec();
    }
}

/// Candidate sampling with a scalar scorer: the generator proposes
/// antithetic parameter candidates θ ± σ·ε, the verifier scores each with a
/// quadratic scorer centered at `scorer_center` plus Gaussian noise, and the
/// updater forms the antithetic finite-difference estimate. The capability
/// itself is the quadratic field around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSampling {
    pub center: Vec<f64>,
    pub sharpness: f64,
    pub scorer_center: Vec<f64>,
    pub probe_sd: f64,
    pub scorer_noise_sd: f64,
}

impl CandidateSampling {
    fn truth(&self) -> QuadraticLandscape {
        QuadraticLandscape::new(self.center.clone(), self.sharpness)
    }

    fn score(&self, x: &[f64], rng: &mut dyn RngCore) -> f64 {
        let z: f64 = StandardNormal.sample(&mut *rng);
        quadratic_value(&self.scorer_center, self.sharpness, x) + self.scorer_noise_sd * z
    }
}

impl Landscape for CandidateSampling {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.truth().value(theta)
    }

    fn gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        self.truth().gradient(theta)
    }

    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        self.truth().hessian(theta)
    }

    fn sample_gradient(&self, theta: &[f64], n: usize, rng: &mut dyn RngCore) -> GradientSample {
        let d = theta.len();
        let n = n.max(1);
        let mut g = vec![0.0; d];
        let mut total = 0.0;
        for _ in 0..n {
            let eps = standard_normals(rng, d);
            let plus: Vec<f64> = theta
                .iter()
                .zip(&eps)
                .map(|(t, e)| t + self.probe_sd * e)
                .collect();
            let minus: Vec<f64> = theta
                .iter()
                .zip(&eps)
                .map(|(t, e)| t - self.probe_sd * e)
                .collect();
            let rp = self.score(&plus, rng);
            let rm = self.score(&minus, rng);
            total += rp + rm;
            let w = (rp - rm) / (2.0 * self.probe_sd);
            for (gi, e) in g.iter_mut().zip(&eps) {
                *gi += w * e;
            }
        }
        GradientSample {
            gradient: g.into_iter().map(|x| x / n as f64).collect(),
            mean_signal: total / (2 * n) as f64,
        }
    }
}

/// Two coupled flows: the generator climbs the candidate-sampling
/// landscape while the verifier's scorer center φ is updated adversarially
/// by gradient ascent on D_φ(real) − D_φ(generated), with
/// D_φ(x) = exp(−a‖x − φ‖²).
#[derive(Debug, Clone, PartialEq)]
pub struct Adversarial {
    pub generator: CandidateSampling,
    pub verifier_eta: f64,
    pub verifier_seed: u64,
    /// φ_t for every refreshed step.
    pub verifier_history: Vec<Vec<f64>>,
}

impl Adversarial {
    pub fn new(generator: CandidateSampling, verifier_eta: f64, verifier_seed: u64) -> Self {
        Adversarial {
            generator,
            verifier_eta,
            verifier_seed,
            verifier_history: Vec::new(),
        }
    }

    fn verifier_step(&mut self, theta: &[f64], t: usize) {
        let g = &self.generator;
        let a = g.sharpness;
        let phi = g.scorer_center.clone();
        let mut rng = StreamKey::new(self.verifier_seed)
            .with_str("verifier")
            .rng(t as u64);
        let eps = standard_normals(&mut rng, theta.len());
        let fake: Vec<f64> = theta
            .iter()
            .zip(&eps)
            .map(|(t, e)| t + g.probe_sd * e)
            .collect();
        let d_real = quadratic_value(&phi, a, &g.center);
        let d_fake = quadratic_value(&phi, a, &fake);
        let step: Vec<f64> = (0..phi.len())
            .map(|i| 2.0 * a * ((g.center[i] - phi[i]) * d_real - (fake[i] - phi[i]) * d_fake))
            .collect();
        for (p, s) in self.generator.scorer_center.iter_mut().zip(step) {
            *p += self.verifier_eta * s;
        }
    }
}

impl Landscape for Adversarial {
    fn dim(&self) -> usize {
        self.generator.dim()
    }

    fn value(&self, theta: &[f64]) -> f64 {
        self.generator.value(theta)
    }

    fn gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        self.generator.gradient(theta)
    }

    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        self.generator.hessian(theta)
    }

    fn sample_gradient(&self, theta: &[f64], n: usize, rng: &mut dyn RngCore) -> GradientSample {
        self.generator.sample_gradient(theta, n, rng)
    }

    fn refresh(&mut self, theta: &[f64], t: usize) {
        if t > 0 && self.verifier_eta != 0.0 {
            self.verifier_step(theta, t);
        }
        self.verifier_history
            .push(self.generator.scorer_center.clone());
    }
}

/// Every shipped landscape behind one type.
#[derive(Debug, Clone, PartialEq)]
pub enum LandscapeBinding {
    Quadratic(QuadraticLandscape),
    Bandit(BanditLandscape),
    SelfPlay(SelfPlayLandscape),
    CandidateSampling(CandidateSampling),
    Adversarial(Adversarial),
}

macro_rules! delegate {
    ($self:ident, $l:ident => $e:expr) => {
        match $self {
            LandscapeBinding::Quadratic($l) => $e,
            LandscapeBinding::Bandit($l) => $e,
            LandscapeBinding::SelfPlay($l) => $e,
            LandscapeBinding::CandidateSampling($l) => $e,
            LandscapeBinding::Adversarial($l) => $e,
        }
    };
}

impl Landscape for LandscapeBinding {
    fn dim(&self) -> usize {
        delegate!(self, l => l.dim())
    }
    fn value(&self, theta: &[f64]) -> f64 {
        delegate!(self, l => l.value(theta))
    }
    fn gradient(&self, theta: &[f64]) -> Option<Vec<f64>> {
        delegate!(self, l => l.gradient(theta))
    }
    fn hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        delegate!(self, l => l.hessian(theta))
    }
    fn sample_gradient(&self, theta: &[f64], n: usize, rng: &mut dyn RngCore) -> GradientSample {
        delegate!(self, l => l.sample_gradient(theta, n, rng))
    }
    fn estimator_covariance(&self, theta: &[f64], n: usize) -> Option<DMatrix<f64>> {
        delegate!(self, l => l.estimator_covariance(theta, n))
    }
    fn fisher(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        delegate!(self, l => l.fisher(theta))
    }
    fn natural_direction(&self, theta: &[f64], v: &[f64]) -> Option<Vec<f64>> {
        delegate!(self, l => l.natural_direction(theta, v))
    }
    fn refresh(&mut self, theta: &[f64], t: usize) {
        delegate!(self, l => l.refresh(theta, t))
    }
}

/// ‖∇F(θ)‖² from the analytic gradient, or central differences.
pub fn grad_norm_sq<L: Landscape + ?Sized>(landscape: &L, theta: &[f64]) -> f64 {
    match landscape.gradient(theta) {
        Some(g) => norm_sq(&g),
        None => super::fd::fd_gradient(
            &|x: &[f64]| landscape.value(x),
            theta,
            super::fd::DEFAULT_FD_STEP,
        )
        .map(|g| norm_sq(&g))
        .unwrap_or(f64::NAN),
    }
}
