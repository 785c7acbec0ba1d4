//! Central finite differences for gradients and Hessians.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use super::GvuError;

/// Default step on unit-scaled parameters.
pub const DEFAULT_FD_STEP: f64 = 1e-4;

fn eval(f: &dyn Fn(&[f64]) -> f64, x: &[f64], coordinate: usize) -> Result<f64, GvuError> {
    let v = f(x);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GvuError::NonFiniteEvaluation { coordinate })
    }
}

/// (F(θ + h·eᵢ) − F(θ − h·eᵢ)) / 2h per coordinate.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Result<Vec<f64>, GvuError> {
    if h.is_nan() || h <= 0.0 {
        return Err(GvuError::BadStep(h));
    }
    let mut x = theta.to_vec();
    let mut g = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        x[i] = theta[i] + h;
        let up = eval(f, &x, i)?;
        x[i] = theta[i] - h;
        let down = eval(f, &x, i)?;
        x[i] = theta[i];
        g.push((up - down) / (2.0 * h));
    }
    Ok(g)
}

/// Central-difference gradient and Hessian. The Hessian is symmetrized by
/// averaging with its transpose.
pub fn grad_hess_fd(
    f: &dyn Fn(&[f64]) -> f64,
    theta: &[f64],
    h: f64,
) -> Result<(Vec<f64>, DMatrix<f64>), GvuError> {
    let g = fd_gradient(f, theta, h)?;
    let d = theta.len();
    let f0 = eval(f, theta, 0)?;
    let mut hess = DMatrix::zeros(d, d);
    let mut x = theta.to_vec();
    for i in 0..d {
        x[i] = theta[i] + h;
        let up = eval(f, &x, i)?;
        x[i] = theta[i] - h;
        let down = eval(f, &x, i)?;
        x[i] = theta[i];
        hess[(i, i)] = (up - 2.0 * f0 + down) / (h * h);
        for j in i + 1..d {
            let mut corner = |si: f64, sj: f64| -> Result<f64, GvuError> {
                x[i] = theta[i] + si * h;
                x[j] = theta[j] + sj * h;
                let v = eval(f, &x, if si != 0.0 { i } else { j });
                x[i] = theta[i];
                x[j] = theta[j];
                v
            };
            let pp = corner(1.0, 1.0)?;
            let pm = corner(1.0, -1.0)?;
            let mp = corner(-1.0, 1.0)?;
            let mm = corner(-1.0, -1.0)?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let sym = (&hess + hess.transpose()) * 0.5;
    Ok((g, sym))
}
