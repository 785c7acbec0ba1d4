//! Fisher information of the softmax policy family.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::GvuError;
use crate::math::softmax;
use crate::model::Architecture;

/// g = diag(p) − p·pᵀ.
pub fn softmax_fisher(p: &[f64]) -> DMatrix<f64> {
    let k = p.len();
    DMatrix::from_fn(k, k, |i, j| {
        let diag = if i == j { p[i] } else { 0.0 };
        diag - p[i] * p[j]
    })
}

pub fn fisher_metric(architecture: Architecture, theta: &[f64]) -> Result<DMatrix<f64>, GvuError> {
    match architecture {
        Architecture::SoftmaxBandit => Ok(softmax_fisher(&softmax(theta))),
        other => Err(GvuError::Unsupported(alloc::format!(
            "no Fisher metric for architecture `{}`",
            other.id()
        ))),
    }
}

/// Minimum-norm least-squares solution of (diag(p) − ppᵀ)·x = v for p with
/// positive entries.
///
/// The metric's null space is the all-ones direction and its range is the
/// sum-zero subspace, so with v⊥ = v − mean(v): x₀ = v⊥ / p solves
/// g·x₀ = v⊥ exactly, and removing the mean of x₀ makes it orthogonal to
/// the null space.
///
/// Probabilities below `PINV_EPS` are floored there, which truncates the
/// near-singular directions instead of dividing rounding error by them.
pub fn natural_direction_softmax(p: &[f64], v: &[f64]) -> Vec<f64> {
    let k = p.len() as f64;
    let v_mean = v.iter().sum::<f64>() / k;
    let x0: Vec<f64> = v
        .iter()
        .zip(p)
        .map(|(vi, pi)| (vi - v_mean) / pi.max(super::tolerances::PINV_EPS))
        .collect();
    let x_mean = x0.iter().sum::<f64>() / k;
    x0.into_iter().map(|x| x - x_mean).collect()
}
