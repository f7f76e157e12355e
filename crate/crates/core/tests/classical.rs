use std::f64::consts::PI;

use dicke_core::dos::semiclassical_dos;
use dicke_core::dynamics::{det4, integrate, integrate_tangent, max_lyapunov, symplectic_defect, DEFAULT_TOL};
use dicke_core::params::ModelParams;
use dicke_core::phase::{eom, gradient, h_cl, PhasePoint};
use dicke_core::shell::{shell_average, sample_energy_shell, ShellSampler};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chaotic() -> ModelParams {
    ModelParams::resonant(1.0, 30.0).unwrap()
}

fn random_interior(rng: &mut ChaCha8Rng) -> PhasePoint {
    loop {
        let x = PhasePoint::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-1.9..1.9),
            rng.random_range(-1.9..1.9),
        );
        if x.atom_r2() < 3.6 {
            return x;
        }
    }
}

/// A point of the shell at `eps`, for trajectories that must start there.
fn shell_point(p: &ModelParams, eps: f64, seed: u64) -> PhasePoint {
    sample_energy_shell(eps, 64, p, seed).unwrap().points[0]
}

#[test]
fn reference_energies() {
    let p = chaotic();
    assert_eq!(h_cl(&PhasePoint::new(0.0, 0.0, 0.0, 0.0), &p).unwrap(), -1.0);
    assert!((h_cl(&PhasePoint::new(0.0, 0.0, 2.0, 0.0), &p).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn global_minimum_matches_closed_form() {
    // Minimising over q at p = P = 0 leaves a function of Q alone:
    // h(Q) = ω₀Q²/2 − ω₀ − 2γ²Q²(1 − Q²/4)/ω.
    let p = chaotic();
    let mut best = f64::INFINITY;
    let n = 400_000;
    for i in 0..=n {
        let q_atom = -2.0 + 4.0 * i as f64 / n as f64;
        let s = (1.0 - q_atom * q_atom / 4.0).max(0.0).sqrt();
        let q = -2.0 * p.gamma * q_atom * s / p.omega;
        best = best.min(h_cl(&PhasePoint::new(q, 0.0, q_atom, 0.0), &p).unwrap());
    }
    assert!((best - (-2.125)).abs() < 1e-9, "{best}");
    assert!((p.ground_energy() + 2.125).abs() < 1e-15);
}

#[test]
fn equations_of_motion_match_finite_differences() {
    let p = chaotic();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = random_interior(&mut rng);
        let mut g = [0.0; 4];
        for (i, gi) in g.iter_mut().enumerate() {
            let mut a = x.to_array();
            let mut b = x.to_array();
            a[i] += h;
            b[i] -= h;
            *gi = (h_cl(&PhasePoint::from_array(a), &p).unwrap() - h_cl(&PhasePoint::from_array(b), &p).unwrap())
                / (2.0 * h);
        }
        let fd = [g[1], -g[0], g[3], -g[2]];
        let v = eom(&x, &p).unwrap().to_array();
        let err = v.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(err / norm);
    }
    assert!(worst < 1e-6, "max relative error {worst}");
}

#[test]
fn energy_is_conserved_along_the_vector_field() {
    let p = chaotic();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..1000 {
        let x = random_interior(&mut rng);
        let g = gradient(&x, &p).unwrap();
        let v = eom(&x, &p).unwrap().to_array();
        let hdot: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!(hdot.abs() < 1e-12, "{hdot}");
    }
}

#[test]
fn uncoupled_motion_is_harmonic() {
    let p = ModelParams::new(1.0, 1.0, 0.0, 10.0).unwrap();
    let x0 = PhasePoint::new(1.0, 0.0, 0.0, 0.0);
    let tr = integrate(&p, x0, 2.0 * PI, DEFAULT_TOL, &[]).unwrap();
    assert!(tr.last().distance(&x0) < 1e-9);
    let v = eom(&PhasePoint::new(0.3, -0.2, 0.5, 0.7), &p).unwrap();
    assert_eq!(v.to_array(), [-0.2, -0.3, 0.7, -0.5]);
}

#[test]
fn energy_drift_over_fifty_time_units() {
    let p = chaotic();
    for seed in 0..3 {
        let x0 = shell_point(&p, -0.5, seed);
        let times: Vec<f64> = (0..=500).map(|i| 0.1 * i as f64).collect();
        let tr = integrate(&p, x0, 50.0, DEFAULT_TOL, &times).unwrap();
        let drift = tr.points.iter().map(|x| (h_cl(x, &p).unwrap() + 0.5).abs()).fold(0.0, f64::max);
        assert!(drift < 1e-9, "drift {drift}");
        assert!(tr.max_energy_drift < 1e-9);
    }
}

#[test]
fn forward_then_backward_returns() {
    let p = chaotic();
    let x0 = shell_point(&p, -0.5, 9);
    let fwd = integrate(&p, x0, 10.0, DEFAULT_TOL, &[]).unwrap().last();
    let back = integrate(&p, fwd, -10.0, DEFAULT_TOL, &[]).unwrap().last();
    assert!(back.distance(&x0) < 1e-8, "{}", back.distance(&x0));
}

#[test]
fn tangent_flow_is_symplectic() {
    let p = chaotic();
    let x0 = shell_point(&p, -0.5, 11);
    assert_eq!(integrate_tangent(&p, x0, 0.0, DEFAULT_TOL).unwrap().matrix, dicke_core::dynamics::IDENTITY4);
    for t in [5.0, 20.0, 50.0] {
        let m = integrate_tangent(&p, x0, t, DEFAULT_TOL).unwrap().matrix;
        // MᵀJM carries entries of order ‖M‖², so the defect is taken relative to that.
        let scale = m.iter().flatten().map(|v| v * v).sum::<f64>();
        assert!(symplectic_defect(&m) / scale < 1e-6, "t = {t}");
    }
    // On a chaotic orbit ‖M(50)‖ reaches 1e6..1e8 and the f64 determinant itself is only good to
    // ‖M‖²·u, so the unit determinant is checked there up to t = 20 and to t = 50 on regular motion.
    for t in [5.0, 20.0] {
        let m = integrate_tangent(&p, x0, t, DEFAULT_TOL).unwrap().matrix;
        assert!((det4(&m) - 1.0).abs() < 1e-8, "t = {t}: det {}", det4(&m));
    }
    let regular = ModelParams::new(1.0, 1.0, 0.2, 30.0).unwrap();
    let y0 = shell_point(&regular, -0.9, 3);
    for t in [10.0, 25.0, 50.0] {
        let m = integrate_tangent(&regular, y0, t, DEFAULT_TOL).unwrap().matrix;
        assert!((det4(&m) - 1.0).abs() < 1e-8, "regular t = {t}: det {}", det4(&m));
    }
}

#[test]
fn lyapunov_exponents() {
    let free = ModelParams::new(1.0, 1.0, 0.0, 10.0).unwrap();
    let est = max_lyapunov(&free, PhasePoint::new(0.7, 0.1, 0.5, -0.3), 1e4, 1.0, 1e-10).unwrap();
    assert!(est.lambda < 1e-3, "{}", est.lambda);

    let p = chaotic();
    let values: Vec<f64> = (0..10)
        .map(|s| max_lyapunov(&p, shell_point(&p, -0.5, 100 + s), 400.0, 1.0, 1e-10).unwrap().lambda)
        .collect();
    let mean = values.iter().sum::<f64>() / 10.0;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 9.0).sqrt();
    assert!(mean > 3.0 * sd / 10f64.sqrt(), "mean {mean}, sd {sd}");
    assert!(values.iter().all(|v| *v > 0.0));
}

#[test]
fn shell_points_and_estimators() {
    let p = chaotic();
    let s = sample_energy_shell(-0.5, 20_000, &p, 5).unwrap();
    for x in &s.points {
        assert!((h_cl(x, &p).unwrap() + 0.5).abs() < 1e-12);
    }
    assert!(s.weights.iter().all(|w| *w > 0.0 && w.is_finite()));
    let (one, se) = shell_average(|_| 1.0, &s);
    assert!((one - 1.0).abs() < 1e-14 && se < 1e-14);
    let (c, se) = shell_average(|_| 3.25, &s);
    assert!((c - 3.25).abs() < 1e-13 && se < 1e-12);
    let (e, _) = shell_average(|x| h_cl(x, &p).unwrap(), &s);
    assert!((e + 0.5).abs() < 1e-12);
}

#[test]
fn shell_volume_does_not_depend_on_the_box() {
    let p = chaotic();
    let base = ShellSampler::new(&p, -0.5, 21).unwrap();
    let (v1, e1) = base.sample(400_000).unwrap().volume();
    let (v2, e2) = ShellSampler { seed: 22, ..base }.with_wider_box(1.5).sample(400_000).unwrap().volume();
    assert!((v1 - v2).abs() < 3.0 * e1.hypot(e2), "{v1} ± {e1} vs {v2} ± {e2}");
}

#[test]
fn density_of_states_is_positive_and_rising() {
    let p = chaotic();
    let e0 = p.ground_energy();
    let mut last = 0.0;
    for i in 1..=600 {
        let e = e0 + (1.0 - e0) * i as f64 / 600.0;
        let nu = semiclassical_dos(e, &p).unwrap();
        assert!(nu > 0.0);
        assert!(nu >= last * (1.0 - 1e-12), "nu decreases at {e}");
        last = nu;
    }
    assert!(semiclassical_dos(e0 - 0.01, &p).is_err());
}
