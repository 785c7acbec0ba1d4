use alloc::string::String;
use alloc::vec::Vec;

use crate::eval::ScoreLaw;

/// Rank-normalized representative of a score law's equivalence class.
/// Points are stored row-major (`n × dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub dim: usize,
    pub points: Vec<f64>,
    pub panel_id: String,
    pub n: usize,
}

impl CanonicalForm {
    /// Builds a form directly from points, e.g. point masses in tests.
    pub fn from_points(dim: usize, points: Vec<f64>, panel_id: impl Into<String>) -> Self {
        assert!(dim > 0 && points.len().is_multiple_of(dim), "ragged points");
        let n = points.len() / dim;
        CanonicalForm {
            dim,
            points,
            panel_id: panel_id.into(),
            n,
        }
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Mean of one coordinate: the rank-normalized capability of that panel
    /// member. 1-Lipschitz in W1.
    pub fn coordinate_mean(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.point(i)[j]).sum::<f64>() / self.n as f64
    }
}

/// Replaces every score by its mid-rank in the pooled multiset of all
/// components of all samples, divided by the pool size.
///
/// A value whose tie group occupies sorted positions `lo..hi` maps to
/// `(lo + hi) / (2·N)`; a strictly increasing map of the scores leaves the
/// output bit-identical.
pub fn canonicalize(law: &ScoreLaw) -> CanonicalForm {
    let pool = &law.samples;
    let total = pool.len();
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| pool[a].total_cmp(&pool[b]));
    let mut out = alloc::vec![0.0; total];
    let mut lo = 0;
    while lo < total {
        let mut hi = lo + 1;
        while hi < total && pool[order[hi]] == pool[order[lo]] {
            hi += 1;
        }
        let value = (lo + hi) as f64 / (2.0 * total as f64);
        for &k in &order[lo..hi] {
            out[k] = value;
        }
        lo = hi;
    }
    CanonicalForm {
        dim: law.dim,
        points: out,
        panel_id: law.provenance.panel_ids.join("+"),
        n: law.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Provenance;
    use alloc::vec;

    fn law(dim: usize, samples: Vec<f64>) -> ScoreLaw {
        let n = samples.len() / dim;
        ScoreLaw {
            dim,
            samples,
            provenance: Provenance {
                battery_id: "b".into(),
                panel_ids: vec!["p".into()],
                n_samples: n,
                seed_root: 0,
            },
        }
    }

    #[test]
    fn three_point_mid_ranks() {
        let c = canonicalize(&law(1, vec![0.2, 0.4, 0.6]));
        assert_eq!(c.points, vec![1.0 / 6.0, 3.0 / 6.0, 5.0 / 6.0]);
    }

    #[test]
    fn cubed_law_is_identical() {
        let xs = vec![0.31, 0.05, 0.77, 0.42, 0.9, 0.12];
        let cubed: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
        assert_eq!(canonicalize(&law(2, xs)), canonicalize(&law(2, cubed)));
    }

    #[test]
    fn all_equal_maps_to_half() {
        let c = canonicalize(&law(3, vec![0.7; 12]));
        assert!(c.points.iter().all(|p| *p == 0.5));
    }

    #[test]
    fn ties_share_mid_rank() {
        // sorted: 0.1 | 0.5 0.5 | 0.9, pool of 4
        let c = canonicalize(&law(1, vec![0.5, 0.1, 0.9, 0.5]));
        assert_eq!(c.points, vec![0.5, 0.125, 0.875, 0.5]);
    }
}
