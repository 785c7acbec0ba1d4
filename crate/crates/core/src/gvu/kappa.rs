//! Self-improvement coefficient κ as an OLS slope of F_t on t.

use super::{FlowTrace, GvuError};
use crate::math::Z95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaClass {
    Improving,
    Plateau,
    Degrading,
}

impl KappaClass {
    pub fn id(self) -> &'static str {
        match self {
            KappaClass::Improving => "improving",
            KappaClass::Plateau => "plateau",
            KappaClass::Degrading => "degrading",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub kappa_hat: f64,
    pub stderr: f64,
    pub ci_halfwidth: f64,
    pub lcb: f64,
    pub ucb: f64,
    pub class: KappaClass,
    pub window: usize,
}

/// OLS slope with a normal-approximation 95% interval. With exactly two
/// points the residual variance is undefined and the interval is infinite.
pub fn kappa_from_series(ts: &[f64], fs: &[f64]) -> Result<KappaEstimate, GvuError> {
    let n = ts.len();
    if n < 2 || fs.len() != n {
        return Err(GvuError::BadWindow {
            window: n,
            len: fs.len(),
        });
    }
    let nf = n as f64;
    let t_bar = ts.iter().sum::<f64>() / nf;
    let f_bar = fs.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (t, f) in ts.iter().zip(fs) {
        sxx += (t - t_bar) * (t - t_bar);
        sxy += (t - t_bar) * (f - f_bar);
    }
    if sxx == 0.0 {
        return Err(GvuError::BadWindow { window: n, len: n });
    }
    let slope = sxy / sxx;
    let stderr = if n > 2 {
        let intercept = f_bar - slope * t_bar;
        let rss: f64 = ts
            .iter()
            .zip(fs)
            .map(|(t, f)| {
                let r = f - intercept - slope * t;
                r * r
            })
            .sum();
        libm::sqrt(rss / (nf - 2.0) / sxx)
    } else {
        f64::INFINITY
    };
    let half = Z95 * stderr;
    let (lcb, ucb) = (slope - half, slope + half);
    let class = if lcb > 0.0 {
        KappaClass::Improving
    } else if ucb < 0.0 {
        KappaClass::Degrading
    } else {
        KappaClass::Plateau
    };
    Ok(KappaEstimate {
        kappa_hat: slope,
        stderr,
        ci_halfwidth: half,
        lcb,
        ucb,
        class,
        window: n,
    })
}

/// κ over the last `window` entries of the trace.
pub fn kappa_estimate(trace: &FlowTrace, window: usize) -> Result<KappaEstimate, GvuError> {
    let len = trace.entries.len();
    if window < 2 || window > len {
        return Err(GvuError::BadWindow { window, len });
    }
    let tail = &trace.entries[len - window..];
    let ts: alloc::vec::Vec<f64> = tail.iter().map(|e| e.t as f64).collect();
    let fs: alloc::vec::Vec<f64> = tail.iter().map(|e| e.f).collect();
    kappa_from_series(&ts, &fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gvu::TraceEntry;
    use alloc::vec;
    use alloc::vec::Vec;

    fn trace(fs: &[f64]) -> FlowTrace {
        FlowTrace {
            replica: 0,
            entries: fs
                .iter()
                .enumerate()
                .map(|(t, f)| TraceEntry {
                    t,
                    theta: vec![],
                    f: *f,
                    grad_norm_sq: 0.0,
                    z_norm: None,
                    r_mean: None,
                })
                .collect(),
            aborted: None,
        }
    }

    #[test]
    fn constant_is_plateau() {
        let k = kappa_estimate(&trace(&[0.4; 10]), 10).unwrap();
        assert_eq!(k.kappa_hat, 0.0);
        assert_eq!(k.class, KappaClass::Plateau);
    }

    #[test]
    fn noiseless_ramp() {
        let fs: Vec<f64> = (0..50).map(|t| 0.01 * t as f64).collect();
        let k = kappa_estimate(&trace(&fs), 50).unwrap();
        assert!((k.kappa_hat - 0.01).abs() < 1e-15);
        assert!(k.ci_halfwidth < 1e-15);
        assert_eq!(k.class, KappaClass::Improving);
    }

    #[test]
    fn window_errors() {
        let t = trace(&[0.0, 1.0, 2.0]);
        assert!(kappa_estimate(&t, 4).is_err());
        assert!(kappa_estimate(&t, 1).is_err());
        let two = kappa_estimate(&t, 2).unwrap();
        assert_eq!(two.kappa_hat, 1.0);
        assert_eq!(two.class, KappaClass::Plateau);
    }

    #[test]
    fn decreasing_is_degrading() {
        let fs: Vec<f64> = (0..20)
            .map(|t| 1.0 - 0.02 * t as f64 + if t % 2 == 0 { 1e-3 } else { 0.0 })
            .collect();
        assert_eq!(
            kappa_estimate(&trace(&fs), 20).unwrap().class,
            KappaClass::Degrading
        );
    }
}
