use moduli_core::eval::{probe_panel_scores, Sequential};
use moduli_core::geometry::{
    canonicalize, coverage_certificate, greedy_net, w1_exact, CanonicalForm, DistanceMatrix,
    Metric, ModuliPoint, DEFAULT_EXACT_CAP,
};
use moduli_core::model::Architecture;
use moduli_core::testbed::{
    make_quadratic_battery, monotone_twin, probe_panel_v1, QuadraticFieldSpec,
};
use proptest::prelude::*;

fn point(id: &str, xs: &[f64]) -> ModuliPoint {
    ModuliPoint {
        canonical: CanonicalForm::from_points(xs.len(), xs.to_vec(), "p"),
        battery_id: id.into(),
        region_tag: "r".into(),
    }
}

fn matrix(points: &[ModuliPoint]) -> DistanceMatrix {
    DistanceMatrix::compute(points, &Metric::default(), &Sequential).unwrap()
}

/// Optimal k-center radius by enumerating all k-subsets.
fn brute_k_center(dm: &DistanceMatrix, k: usize) -> f64 {
    let n = dm.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let r = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|c| mask & (1 << c) != 0)
                    .map(|c| dm.get(i, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        best = best.min(r);
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn greedy_within_twice_optimum(coords in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..=10)) {
        let pts: Vec<ModuliPoint> = coords
            .iter()
            .enumerate()
            .map(|(i, (x, y))| point(&format!("b{i}"), &[*x, *y]))
            .collect();
        let dm = matrix(&pts);
        for k in 1..=pts.len() {
            let net = greedy_net(&dm, k, 0.0).unwrap();
            let opt = brute_k_center(&dm, k);
            prop_assert!(net.radius <= 2.0 * opt + 1e-12, "k={} greedy {} opt {}", k, net.radius, opt);
        }
    }

    #[test]
    fn coverage_is_monotone_in_the_net(
        centers in prop::collection::vec(0.0f64..1.0, 1..6),
        extra in prop::collection::vec(0.0f64..1.0, 1..4),
        held in prop::collection::vec(0.0f64..1.0, 1..8),
        eps in 0.0f64..0.5,
        lip in 0.0f64..2.0,
    ) {
        // field: the point mass location, so |ΔΦ| = d and L = 1 certifies
        let field = |x: f64| x;
        let mk = |xs: &[f64], tag: &str| -> Vec<(ModuliPoint, f64)> {
            xs.iter()
                .enumerate()
                .map(|(i, x)| (point(&format!("{tag}{i}"), &[*x]), field(*x)))
                .collect()
        };
        let small = mk(&centers, "c");
        let mut big = small.clone();
        big.extend(mk(&extra, "e"));
        let heldout = mk(&held, "h");
        let metric = Metric::default();
        let a = coverage_certificate(&small, &heldout, lip, eps, 0.0, &metric).unwrap();
        let b = coverage_certificate(&big, &heldout, lip, eps, 0.0, &metric).unwrap();
        prop_assert!(!a.pass || b.pass);
        for id in &b.uncovered {
            prop_assert!(a.uncovered.contains(id));
        }
    }

    #[test]
    fn monotone_twin_is_at_distance_zero(
        cx in -1.0f64..1.0,
        cy in -1.0f64..1.0,
        sharp in 0.5f64..3.0,
        noise in 0.01f64..0.2,
        map in prop::sample::select(vec!["cube", "logistic", "affine"]),
        seed in any::<u64>(),
    ) {
        let spec = QuadraticFieldSpec::new(vec![cx, cy], sharp, noise);
        let b = make_quadratic_battery(&spec, 4, "reasoning", &format!("q{seed}")).unwrap();
        let twin = monotone_twin(&b, map).unwrap();
        let panel = probe_panel_v1(Architecture::QuadraticField, 2);
        let law = probe_panel_scores(&panel, &b, 40, seed, &Sequential).unwrap();
        let law_t = probe_panel_scores(&panel, &twin, 40, seed, &Sequential).unwrap();
        let mut sorted = law.samples.clone();
        sorted.sort_by(f64::total_cmp);
        prop_assume!(sorted.windows(2).all(|w| w[0] < w[1]));
        let d = w1_exact(&canonicalize(&law), &canonicalize(&law_t), DEFAULT_EXACT_CAP).unwrap();
        prop_assert_eq!(d, 0.0);
    }
}

#[test]
fn held_in_points_certify_themselves() {
    let pts: Vec<(ModuliPoint, f64)> = [0.1, 0.4, 0.8]
        .iter()
        .enumerate()
        .map(|(i, x)| (point(&format!("b{i}"), &[*x]), *x))
        .collect();
    let cert = coverage_certificate(&pts, &pts, 0.0, 0.0, 0.0, &Metric::default()).unwrap();
    assert!(cert.pass);
    assert_eq!(cert.max_distance, 0.0);
}
