#![allow(dead_code)]

use dicke_core::orbits::{process_seed, HuntSettings, PeriodicOrbit, SeedOutcome};
use dicke_core::params::ModelParams;
use dicke_core::phase::PhasePoint;
use dicke_core::shell::sample_energy_shell;

pub const EPS: f64 = -0.5;

pub fn chaotic(j: f64) -> ModelParams {
    ModelParams::resonant(1.0, j).unwrap()
}

/// Orbit grown from point `index` of a fixed random shell sample at ε = −0.5.
/// Index 30 gives a self-mirror-symmetric orbit (T ≈ 12.28), 39 an
/// asymmetric one (T ≈ 4.92).
pub fn orbit_from_shell(params: &ModelParams, index: usize) -> PeriodicOrbit {
    let sample = sample_energy_shell(EPS, 200, params, 77).unwrap();
    match process_seed(params, sample.points[index], EPS, &HuntSettings::default()) {
        SeedOutcome::Converged(o) => o,
        other => panic!("seed {index} did not converge: {other:?}"),
    }
}

pub fn symmetric_orbit(params: &ModelParams) -> PeriodicOrbit {
    orbit_from_shell(params, 30)
}

pub fn asymmetric_orbit(params: &ModelParams) -> PeriodicOrbit {
    orbit_from_shell(params, 39)
}

/// Distance from `x` to the continuous orbit: nearest of `n` samples, then
/// golden-section search in time around it.
pub fn distance_to_orbit(params: &ModelParams, orbit: &PeriodicOrbit, x: &PhasePoint, n: usize) -> f64 {
    use dicke_core::dynamics::integrate;
    let pts = orbit.sample(params, n).unwrap();
    let (i, _) = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.distance(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let dt = orbit.period / n as f64;
    let at = |s: f64| integrate(params, pts[i], s, 1e-13, &[]).unwrap().last().distance(x);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (-dt, dt);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (at(c), at(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = at(d);
        }
    }
    fc.min(fd).min(pts[i].distance(x))
}
