use dicke_core::coherent::coherent_overlap_sq;
use dicke_core::metrics::{max_renyi_occupation, occupation_from_values};
use dicke_core::params::ModelParams;
use dicke_core::phase::{h_cl, PhasePoint};
use dicke_core::shell::sample_energy_shell;
use proptest::prelude::*;

fn point() -> impl Strategy<Value = PhasePoint> {
    (-4.0..4.0f64, -4.0..4.0f64, 0.0..1.99f64, -3.2..3.2f64)
        .prop_map(|(q, p, r, phi)| PhasePoint::new(q, p, r * phi.cos(), r * phi.sin()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn energy_is_mirror_and_parity_invariant(x in point(), gamma in -2.0..2.0f64) {
        let p = ModelParams::new(1.0, 1.0, gamma, 10.0).unwrap();
        let e = h_cl(&x, &p).unwrap();
        prop_assert!((h_cl(&x.mirror(), &p).unwrap() - e).abs() <= 1e-13 * e.abs().max(1.0));
        prop_assert!((h_cl(&x.parity_image(), &p).unwrap() - e).abs() <= 1e-13 * e.abs().max(1.0));
    }

    #[test]
    fn coherent_overlaps_are_symmetric_and_bounded(x in point(), y in point(), j in 0.5..60.0f64) {
        let a = coherent_overlap_sq(&x, &y, j);
        let b = coherent_overlap_sq(&y, &x, j);
        prop_assert!((a - b).abs() <= 1e-14);
        prop_assert!((0.0..=1.0 + 1e-14).contains(&a));
        prop_assert!((coherent_overlap_sq(&x, &x, j) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn maximal_occupation_is_at_most_one(alpha in 0.0..6.0f64) {
        let m = max_renyi_occupation(alpha).unwrap();
        prop_assert!(m > 0.0 && m <= 1.0 + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn occupations_are_scale_invariant(seed in 0u64..1000, c in 1e-6..1e6f64, alpha in 0.1..4.5f64) {
        let p = ModelParams::resonant(1.0, 10.0).unwrap();
        let sample = sample_energy_shell(-0.5, 4096, &p, seed).unwrap();
        let centre = sample.points[0];
        let values: Vec<f64> = sample.points.iter().map(|x| coherent_overlap_sq(x, &centre, 10.0)).collect();
        let scaled: Vec<f64> = values.iter().map(|v| c * v).collect();
        let a = occupation_from_values(&values, &sample, alpha).unwrap();
        let b = occupation_from_values(&scaled, &sample, alpha).unwrap();
        prop_assert!((a.value / b.value - 1.0).abs() < 1e-12);
        prop_assert!(a.value > 0.0 && a.value <= 1.0);
    }
}
