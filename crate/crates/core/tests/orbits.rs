mod common;

use std::f64::consts::PI;

use common::{asymmetric_orbit, chaotic, distance_to_orbit, symmetric_orbit, EPS};
use dicke_core::basis::{BasisSpec, Sector};
use dicke_core::coherent::StateVector;
use dicke_core::dynamics::{integrate_tangent, symplectic_defect};
use dicke_core::metrics::{projected_husimi_moment, GridSpec, HusimiGrid};
use dicke_core::orbits::{
    dedupe_orbits, detect_return, find_husimi_peaks, lift_to_shell, lyapunov_from, mirror_orbit, monodromy_eigenvalues,
    monodromy_refine, orbit_distance, orbit_violations, reciprocal_pair_defect, same_orbit, unit_pair_defect,
    OrbitCandidate,
};
use dicke_core::params::ModelParams;
use dicke_core::phase::{eom, h_cl, PhasePoint};
use dicke_core::spectrum::default_n_max;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic_grid(cells: usize, bumps: &[(f64, f64, f64, f64)]) -> HusimiGrid {
    let spec = GridSpec { cells };
    let mut values = vec![None; cells * cells];
    for iq in 0..cells {
        for ip in 0..cells {
            let (q, p) = spec.center(iq, ip);
            if q * q + p * p < 4.0 {
                let v = bumps
                    .iter()
                    .map(|&(cq, cp, h, w)| h * (-((q - cq).powi(2) + (p - cp).powi(2)) / (2.0 * w * w)).exp())
                    .sum();
                values[iq * cells + ip] = Some(v);
            }
        }
    }
    HusimiGrid {
        spec,
        alpha: 4.0,
        eps: EPS,
        label: "synthetic".into(),
        values,
        unconverged: vec![false; cells * cells],
        nodes: 0,
    }
}

#[test]
fn single_and_double_peaks() {
    let g = synthetic_grid(40, &[(0.55, -0.35, 1.0, 0.3)]);
    let peaks = find_husimi_peaks(&g, 0.1, 2);
    assert_eq!(peaks.len(), 1);
    let h = g.spec.cell_size();
    assert!((peaks[0].0 - 0.55).abs() <= 0.5 * h && (peaks[0].1 + 0.35).abs() <= 0.5 * h);

    let g = synthetic_grid(40, &[(-1.0, 0.0, 0.6, 0.15), (0.8, 0.5, 1.0, 0.15)]);
    let peaks = find_husimi_peaks(&g, 0.1, 2);
    assert_eq!(peaks.len(), 2);
    assert!(peaks[0].2 > peaks[1].2);
    assert!((peaks[0].0 - 0.8).abs() <= h && (peaks[1].0 + 1.0).abs() <= h);
}

#[test]
fn tube_peaks_sit_on_the_orbit_projection() {
    let p = chaotic(30.0);
    let orbit = asymmetric_orbit(&p);
    let tube = orbit.tube(&p, 200).unwrap();
    let spec = GridSpec { cells: 40 };
    let grid = projected_husimi_moment(&tube, "tube", 4.0, EPS, &p, spec, 128).unwrap();
    let peaks = find_husimi_peaks(&grid, 0.3, 2);
    assert!(!peaks.is_empty());
    let line = orbit.sample(&p, 4000).unwrap();
    let h = spec.cell_size();
    for (q, pp, _) in peaks {
        let d = line.iter().map(|x| (x.atom_q - q).hypot(x.atom_p - pp)).fold(f64::INFINITY, f64::min);
        assert!(d <= h, "peak ({q}, {pp}) is {d} from the orbit");
    }
}

#[test]
fn lifted_points_lie_on_the_shell() {
    let p = chaotic(10.0);
    let basis = BasisSpec::new(&p, default_n_max(&p, 0.5), Sector::Both);
    let target = dicke_core::shell::sample_energy_shell(EPS, 16, &p, 3).unwrap().points[5];
    let state = StateVector::coherent(basis, &target).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let atom = (target.atom_q + rng.random_range(-0.3..0.3), target.atom_p + rng.random_range(-0.3..0.3));
        let Ok(pts) = lift_to_shell(atom, EPS, &state, &p, 360) else { continue };
        assert!(!pts.is_empty() && pts.len() <= 2);
        for x in pts {
            assert!((h_cl(&x, &p).unwrap() - EPS).abs() < 1e-12);
        }
    }
    let best = lift_to_shell((target.atom_q, target.atom_p), EPS, &state, &p, 360).unwrap();
    let d = best.iter().map(|x| x.distance(&target)).fold(f64::INFINITY, f64::min);
    assert!(d < 1e-4, "planted point missed by {d}");
    assert!(lift_to_shell((1.99, 0.0), EPS, &state, &p, 360).is_err());
}

#[test]
fn uncoupled_returns() {
    let p = ModelParams::new(1.0, 1.0, 0.0, 10.0).unwrap();
    let cand = detect_return(&p, PhasePoint::new(1.0, 0.0, 0.5, 0.0), 20.0, 0.1).unwrap().unwrap();
    assert!((cand.t_approx - 2.0 * PI).abs() < 1e-6);
    let orbit = monodromy_refine(&p, &cand, h_cl(&cand.seed, &p).unwrap(), 1e-10, 50).unwrap();
    assert!(orbit.iterations <= 1, "{} iterations", orbit.iterations);
    assert!(orbit.lyapunov.abs() < 1e-6);

    let q = ModelParams::new(1.0, 2f64.sqrt(), 0.0, 10.0).unwrap();
    assert!(detect_return(&q, PhasePoint::new(0.9, 0.2, 0.7, -0.4), 40.0, 0.1).unwrap().is_none());
}

#[test]
fn refined_orbits_satisfy_their_invariants() {
    let p = chaotic(30.0);
    for orbit in [symmetric_orbit(&p), asymmetric_orbit(&p)] {
        assert!(orbit_violations(&orbit).is_empty());
        assert!(orbit.residual < 1e-8);
        assert!(symplectic_defect(&orbit.monodromy) < 1e-6);
        assert!(reciprocal_pair_defect(&orbit.monodromy) < 1e-5);
        assert!(unit_pair_defect(&orbit.monodromy) < 1e-4);
        assert!((h_cl(&orbit.x0, &p).unwrap() - EPS).abs() < 1e-8);
        assert!(orbit.lyapunov > 0.0);
        let top = monodromy_eigenvalues(&orbit.monodromy).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((orbit.lyapunov - top.ln() / orbit.period).abs() < 1e-12);
    }
}

#[test]
fn return_detection_reproduces_the_period() {
    let p = chaotic(30.0);
    let orbit = asymmetric_orbit(&p);
    let cand = detect_return(&p, orbit.x0, orbit.period + 2.0, 0.1).unwrap().unwrap();
    assert!((cand.t_approx - orbit.period).abs() < 1e-6, "{} vs {}", cand.t_approx, orbit.period);
}

#[test]
fn refinement_is_idempotent() {
    let p = chaotic(30.0);
    let orbit = symmetric_orbit(&p);
    let cand = OrbitCandidate { seed: orbit.x0, t_approx: orbit.period, residual: orbit.residual };
    let again = monodromy_refine(&p, &cand, EPS, 1e-10, 50).unwrap();
    assert!(again.x0.distance(&orbit.x0) < 1e-10);
    assert!((again.period - orbit.period).abs() < 1e-10);
}

#[test]
fn perturbed_seeds_fall_back_onto_the_orbit() {
    let p = chaotic(30.0);
    let orbit = asymmetric_orbit(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let dir = PhasePoint::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let x = orbit.x0 + (1e-3 / dir.norm()) * dir;
        let cand = OrbitCandidate { seed: x, t_approx: orbit.period, residual: f64::NAN };
        let r = monodromy_refine(&p, &cand, EPS, 1e-10, 50).unwrap();
        assert!((r.period - orbit.period).abs() < 1e-8);
        assert!(distance_to_orbit(&p, &orbit, &r.x0, 2000) < 1e-8);
        assert!(same_orbit(&p, &r, &orbit).unwrap());
    }
}

#[test]
fn lyapunov_arithmetic() {
    let e = std::f64::consts::E;
    let m = [[e, 0.0, 0.0, 0.0], [0.0, 1.0 / e, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    assert!((lyapunov_from(&m, 2.0) - 0.5).abs() < 1e-14);
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let rot = [[c, -s, 0.0, 0.0], [s, c, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];
    assert!(lyapunov_from(&rot, 3.0) < 1e-14);
}

#[test]
fn mirror_map() {
    let p = chaotic(30.0);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..1000 {
        let x = PhasePoint::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-1.4..1.4),
            rng.random_range(-1.4..1.4),
        );
        assert!((h_cl(&x, &p).unwrap() - h_cl(&x.mirror(), &p).unwrap()).abs() < 1e-14);
        // The mirror reverses time: ẋ(Sx) = −S ẋ(x).
        let v = eom(&x, &p).unwrap();
        assert!(eom(&x.mirror(), &p).unwrap().distance(&(-1.0 * v.mirror())) < 1e-13);
    }
    let orbit = asymmetric_orbit(&p);
    assert_eq!(mirror_orbit(&mirror_orbit(&orbit)), orbit);
    let m = mirror_orbit(&orbit);
    assert!(orbit_violations(&m).is_empty());
    let direct = integrate_tangent(&p, m.x0, m.period, 1e-13).unwrap();
    assert!(direct.point.distance(&m.x0) < 1e-8);
    let scale = m.monodromy.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for (r, d) in m.monodromy.iter().zip(&direct.matrix) {
        for (a, b) in r.iter().zip(d) {
            assert!((a - b).abs() < 1e-6 * scale, "{a} vs {b}");
        }
    }
    assert!(orbit_distance(&p, &orbit, &m, 400).unwrap() > 0.1);
}

#[test]
fn symmetric_orbit_is_its_own_mirror() {
    let p = chaotic(30.0);
    let orbit = symmetric_orbit(&p);
    let image = mirror_orbit(&orbit);
    let worst = image
        .sample(&p, 40)
        .unwrap()
        .iter()
        .map(|x| distance_to_orbit(&p, &orbit, x, 2000))
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn duplicates_collapse() {
    let p = chaotic(30.0);
    let a = asymmetric_orbit(&p);
    let shifted_x0 = a.sample(&p, 7).unwrap()[3];
    let cand = OrbitCandidate { seed: shifted_x0, t_approx: a.period, residual: 0.0 };
    let b = monodromy_refine(&p, &cand, EPS, 1e-10, 50).unwrap();
    assert!(b.x0.distance(&a.x0) > 0.1);
    let c = symmetric_orbit(&p);
    let kept = dedupe_orbits(&p, vec![a.clone(), b, c.clone(), mirror_orbit(&a)]).unwrap();
    assert_eq!(kept.len(), 3);
    assert_eq!(kept[0], a);
    assert_eq!(kept[1], c);
}
