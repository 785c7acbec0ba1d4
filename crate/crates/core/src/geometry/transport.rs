//! Wasserstein-1 distances between canonical forms.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use super::{CanonicalForm, GeometryError};
use crate::rng::StreamKey;

/// Largest sample count accepted by [`w1_exact`] unless configured.
pub const DEFAULT_EXACT_CAP: usize = 512;

/// Min-cost perfect matching on a square row-major cost matrix by shortest
/// augmenting paths with potentials. Returns `assignment[row] = col`.
/// O(n³).
pub fn min_cost_assignment(n: usize, cost: &[f64]) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n×n");
    // 1-based; column 0 is the virtual source
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn check_comparable(c1: &CanonicalForm, c2: &CanonicalForm) -> Result<(), GeometryError> {
    if c1.dim != c2.dim {
        return Err(GeometryError::DimensionMismatch(c1.dim, c2.dim));
    }
    if c1.panel_id != c2.panel_id {
        return Err(GeometryError::PanelMismatch(
            c1.panel_id.clone(),
            c2.panel_id.clone(),
        ));
    }
    if c1.n == 0 || c2.n == 0 {
        return Err(GeometryError::Empty);
    }
    Ok(())
}

fn sorted_rows(c: &CanonicalForm) -> Vec<&[f64]> {
    let mut rows: Vec<&[f64]> = (0..c.n).map(|i| c.point(i)).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    rows
}

/// Exact W1 with Euclidean ground cost between two uniform empirical laws
/// of equal size, via min-cost assignment.
pub fn w1_exact(c1: &CanonicalForm, c2: &CanonicalForm, cap: usize) -> Result<f64, GeometryError> {
    check_comparable(c1, c2)?;
    if c1.n != c2.n {
        return Err(GeometryError::SampleCountMismatch(c1.n, c2.n));
    }
    let n = c1.n;
    if n > cap {
        return Err(GeometryError::TooLarge { n, cap });
    }
    if sorted_rows(c1) == sorted_rows(c2) {
        return Ok(0.0);
    }
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            cost[i * n + j] = euclidean(c1.point(i), c2.point(j));
        }
    }
    let assignment = min_cost_assignment(n, &cost);
    let total: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok(total / n as f64)
}

/// W1 between two 1-D empirical laws: ∫|F − G|.
pub fn w1_1d(xs: &[f64], ys: &[f64]) -> f64 {
    let mut a = xs.to_vec();
    let mut b = ys.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    if a.len() == b.len() {
        let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
        return s / a.len() as f64;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut prev = a[0].min(b[0]);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => x.min(*y),
            (Some(x), None) => *x,
            (None, Some(y)) => *y,
            (None, None) => unreachable!(),
        };
        let fa = i as f64 / na;
        let fb = j as f64 / nb;
        total += (fa - fb).abs() * (next - prev);
        while i < a.len() && a[i] == next {
            i += 1;
        }
        while j < b.len() && b[j] == next {
            j += 1;
        }
        prev = next;
    }
    total
}

/// Sliced W1: the mean over random unit directions of the 1-D W1 between
/// projected samples. Direction `k` comes from stream `k` under `seed`.
pub fn w1_sliced(
    c1: &CanonicalForm,
    c2: &CanonicalForm,
    n_projections: usize,
    seed: u64,
) -> Result<f64, GeometryError> {
    check_comparable(c1, c2)?;
    if n_projections == 0 {
        return Err(GeometryError::NoProjections);
    }
    let key = StreamKey::new(seed).with_str("sliced");
    let dim = c1.dim;
    let mut total = 0.0;
    for k in 0..n_projections {
        let mut rng = key.rng(k as u64);
        let dir = loop {
            let d: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = libm::sqrt(d.iter().map(|x| x * x).sum());
            if norm > 1e-12 {
                break d.into_iter().map(|x| x / norm).collect::<Vec<f64>>();
            }
        };
        let project = |c: &CanonicalForm| -> Vec<f64> {
            (0..c.n)
                .map(|i| crate::math::dot(c.point(i), &dir))
                .collect()
        };
        total += w1_1d(&project(c1), &project(c2));
    }
    Ok(total / n_projections as f64)
}

/// Which W1 route to use for distance computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Exact { cap: usize },
    Sliced { projections: usize, seed: u64 },
}

impl Default for Metric {
    fn default() -> Self {
        Metric::Exact {
            cap: DEFAULT_EXACT_CAP,
        }
    }
}

impl Metric {
    pub fn distance(&self, a: &CanonicalForm, b: &CanonicalForm) -> Result<f64, GeometryError> {
        match *self {
            Metric::Exact { cap } => w1_exact(a, b, cap),
            Metric::Sliced { projections, seed } => w1_sliced(a, b, projections, seed),
        }
    }
}
