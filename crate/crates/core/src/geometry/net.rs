use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{CanonicalForm, GeometryError, Metric};
use crate::eval::Executor;

/// Absolute slack added to every Lipschitz check.
pub const COVERAGE_TOL: f64 = 1e-9;

/// A battery class placed in the moduli space.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuliPoint {
    pub canonical: CanonicalForm,
    pub battery_id: String,
    pub region_tag: String,
}

impl ModuliPoint {
    pub fn new(
        canonical: CanonicalForm,
        battery_id: impl Into<String>,
        region_tag: impl Into<String>,
        vocabulary: &[String],
    ) -> Result<Self, GeometryError> {
        let region_tag = region_tag.into();
        if !vocabulary.contains(&region_tag) {
            return Err(GeometryError::UnknownRegion(region_tag));
        }
        Ok(ModuliPoint {
            canonical,
            battery_id: battery_id.into(),
            region_tag,
        })
    }
}

/// Symmetric pairwise distances, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    pub values: Vec<f64>,
}

impl DistanceMatrix {
    /// Computes all pairs i < j (in parallel under `exec`) and mirrors them.
    pub fn compute<E: Executor>(
        points: &[ModuliPoint],
        metric: &Metric,
        exec: &E,
    ) -> Result<Self, GeometryError> {
        let n = points.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let dists = exec.map_indexed(pairs.len(), |k| {
            let (i, j) = pairs[k];
            metric.distance(&points[i].canonical, &points[j].canonical)
        });
        let mut values = alloc::vec![0.0; n * n];
        for (&(i, j), d) in pairs.iter().zip(dists) {
            let d = d?;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
        Ok(DistanceMatrix {
            ids: points.iter().map(|p| p.battery_id.clone()).collect(),
            values,
        })
    }

    pub fn from_values(ids: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), ids.len() * ids.len());
        DistanceMatrix { ids, values }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetReport {
    pub centers: Vec<String>,
    pub center_indices: Vec<usize>,
    /// Max over all input points of the distance to the nearest center.
    pub radius: f64,
    pub epsilon_target: f64,
}

/// Farthest-point traversal from point 0; ties go to the lowest index.
/// The radius is within a factor 2 of the optimal k-center radius.
pub fn greedy_net(
    dm: &DistanceMatrix,
    k: usize,
    epsilon_target: f64,
) -> Result<NetReport, GeometryError> {
    let n = dm.len();
    if n == 0 {
        return Err(GeometryError::NoPoints);
    }
    if k == 0 || k > n {
        return Err(GeometryError::BadK { k, n });
    }
    let mut centers = alloc::vec![0usize];
    let mut nearest: Vec<f64> = (0..n).map(|i| dm.get(0, i)).collect();
    while centers.len() < k {
        let mut far = 0;
        for i in 1..n {
            if nearest[i] > nearest[far] {
                far = i;
            }
        }
        centers.push(far);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dm.get(far, i));
        }
    }
    let radius = nearest.iter().copied().fold(0.0, f64::max);
    Ok(NetReport {
        centers: centers.iter().map(|&i| dm.ids[i].clone()).collect(),
        center_indices: centers,
        radius,
        epsilon_target,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzEstimate {
    pub l_hat: f64,
    /// Pair attaining `l_hat`, if any pair has positive distance.
    pub worst_pair: Option<(usize, usize)>,
    /// Pairs at distance 0 whose field values differ: the field is not a
    /// function of the equivalence class there.
    pub violations: Vec<(usize, usize)>,
}

/// L̂ = max over pairs of |Φ(x) − Φ(y)| / d(x, y).
pub fn lipschitz_estimate(
    values: &[f64],
    dm: &DistanceMatrix,
) -> Result<LipschitzEstimate, GeometryError> {
    let n = dm.len();
    assert_eq!(values.len(), n, "one field value per point");
    if n < 2 {
        return Err(GeometryError::TooFewPoints);
    }
    let mut out = LipschitzEstimate {
        l_hat: 0.0,
        worst_pair: None,
        violations: Vec::new(),
    };
    for i in 0..n {
        for j in i + 1..n {
            let d = dm.get(i, j);
            let dv = (values[i] - values[j]).abs();
            if d == 0.0 {
                if dv != 0.0 {
                    out.violations.push((i, j));
                }
                continue;
            }
            let ratio = dv / d;
            if ratio > out.l_hat || out.worst_pair.is_none() {
                out.l_hat = out.l_hat.max(ratio);
                out.worst_pair = Some((i, j));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCertificate {
    pub pass: bool,
    /// Largest residual |ΔΦ| − L·d over held-out points, each taken at its
    /// best center within ε (or its nearest center when none is within ε).
    pub max_residual: f64,
    /// Largest distance from a held-out point to its nearest center.
    pub max_distance: f64,
    pub worst_offender: Option<String>,
    pub uncovered: Vec<String>,
}

/// Checks that every held-out point has a center within `epsilon` whose
/// field value bounds its own: |Φ(p) − Φ(c)| ≤ L·d(p, c) + tol, where
/// tol = [`COVERAGE_TOL`] + `ci_slack`.
pub fn coverage_certificate(
    centers: &[(ModuliPoint, f64)],
    heldout: &[(ModuliPoint, f64)],
    lipschitz: f64,
    epsilon: f64,
    ci_slack: f64,
    metric: &Metric,
) -> Result<CoverageCertificate, GeometryError> {
    if centers.is_empty() {
        return Err(GeometryError::NoPoints);
    }
    let tol = COVERAGE_TOL + ci_slack;
    let mut cert = CoverageCertificate {
        pass: true,
        max_residual: f64::NEG_INFINITY,
        max_distance: 0.0,
        worst_offender: None,
        uncovered: Vec::new(),
    };
    for (p, phi) in heldout {
        let mut nearest = (f64::INFINITY, f64::INFINITY);
        let mut best_within: Option<f64> = None;
        for (c, phi_c) in centers {
            let d = metric.distance(&p.canonical, &c.canonical)?;
            let residual = (phi - phi_c).abs() - lipschitz * d;
            if d < nearest.0 {
                nearest = (d, residual);
            }
            if d <= epsilon {
                best_within = Some(best_within.map_or(residual, |r: f64| r.min(residual)));
            }
        }
        cert.max_distance = cert.max_distance.max(nearest.0);
        let (residual, ok) = match best_within {
            Some(r) => (r, r <= tol),
            None => (nearest.1, false),
        };
        if !ok {
            cert.pass = false;
            cert.uncovered.push(p.battery_id.clone());
        }
        if residual > cert.max_residual || cert.worst_offender.is_none() {
            cert.max_residual = cert.max_residual.max(residual);
            cert.worst_offender = Some(p.battery_id.to_string());
        }
    }
    if heldout.is_empty() {
        cert.max_residual = 0.0;
    }
    Ok(cert)
}
