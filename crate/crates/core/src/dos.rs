//! Semiclassical density of states from the classical shell volume.
//!
//! Integrating out the boson gives `2π/ω` of shell volume for every Bloch
//! point `(Q, P)` whose boson-minimised energy lies below `ε`. In Bloch
//! variables `y = (Q² + P²)/2 − 1`, `φ = arg(Q + iP)` (unit Jacobian) that
//! condition reads `cos²φ > s²(y)` with
//! `s² = (2γ_c²/γ²)(y − ε/ω₀)/(1 − y²)`, hence
//!
//! `ν(ε) = (2j²/ω) [ min(max(1 + ε/ω₀, 0), 2)/2 + (1/π) ∫ arccos s(y) dy ]`,
//!
//! the integral running over `y > ε/ω₀` with `s < 1`, i.e. between
//! `max(ε/ω₀, y₋)` and `y₊`, the roots of `y² + κy − κε/ω₀ − 1` with
//! `κ = 2γ_c²/γ²`. This covers the three regimes (below `−ω₀`, between
//! `∓ω₀`, above `ω₀`) in one expression and is valid for any `γ ≠ 0`.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::quad::{integrate, integrate_sqrt_endpoints};

const TOL: f64 = 1e-13;

/// Bracketing roots `y₋ ≤ y₊` of `y² + κy − κε/ω₀ − 1 = 0`.
pub fn y_roots(eps: f64, params: &ModelParams) -> (f64, f64) {
    let kappa = 2.0 * (params.gamma_c() / params.gamma).powi(2);
    let e = eps / params.omega0;
    let disc = (0.25 * kappa * kappa + kappa * e + 1.0).max(0.0).sqrt();
    (-0.5 * kappa - disc, -0.5 * kappa + disc)
}

/// Bracketed quantity of `ν(ε) = (2j²/ω)·bracket`: the fraction of the
/// uncoupled plateau.
pub fn dos_fraction(eps: f64, params: &ModelParams) -> Result<f64> {
    let e0 = params.ground_energy();
    if eps < e0 {
        return Err(Error::BelowGroundEnergy { eps, min: e0 });
    }
    let e = eps / params.omega0;
    let flat = 0.5 * (1.0 + e).clamp(0.0, 2.0);
    if e >= 1.0 {
        return Ok(flat);
    }
    if params.gamma == 0.0 {
        return Ok(flat);
    }
    let kappa = 2.0 * (params.gamma_c() / params.gamma).powi(2);
    let (ym, yp) = y_roots(eps, params);
    let lo = ym.max(e).max(-1.0);
    let hi = yp.min(1.0);
    let integrand = |y: f64| {
        let s2 = kappa * (y - e) / (1.0 - y * y);
        if s2 <= 0.0 {
            core::f64::consts::FRAC_PI_2
        } else if s2 >= 1.0 || !s2.is_finite() {
            0.0
        } else {
            s2.sqrt().acos()
        }
    };
    let r = integrate_sqrt_endpoints(integrand, lo, hi, TOL, TOL);
    Ok(flat + r.value / core::f64::consts::PI)
}

/// `ν(ε)`: number of states (both parities) per unit rescaled energy.
pub fn semiclassical_dos(eps: f64, params: &ModelParams) -> Result<f64> {
    let j = params.j();
    Ok(2.0 * j * j / params.omega * dos_fraction(eps, params)?)
}

/// Classical shell volume `∫ δ(h_cl − ε) dx = (2π/j)² ν(ε)`.
pub fn shell_volume(eps: f64, params: &ModelParams) -> Result<f64> {
    let two_pi = 2.0 * core::f64::consts::PI;
    Ok(two_pi * two_pi * 2.0 / params.omega * dos_fraction(eps, params)?)
}

/// `∫_a^b ν(ε) dε`, split at the seams `±ω₀` where `ν` has kinks.
pub fn integrated_dos(a: f64, b: f64, params: &ModelParams) -> Result<f64> {
    let e0 = params.ground_energy();
    if a < e0 {
        return Err(Error::BelowGroundEnergy { eps: a, min: e0 });
    }
    if b <= a {
        return Ok(0.0);
    }
    let mut cuts = alloc::vec![a];
    for seam in [-params.omega0, params.omega0] {
        if seam > a && seam < b {
            cuts.push(seam);
        }
    }
    cuts.push(b);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        // ν rises like √(ε − ε₀) from the ground state; the endpoint
        // substitution keeps the quadrature smooth there.
        let r = if w[0] == e0 {
            integrate_sqrt_endpoints(|x| semiclassical_dos(x, params).unwrap_or(0.0), w[0], w[1], 1e-10, 1e-12)
        } else {
            integrate(|x| semiclassical_dos(x, params).unwrap_or(0.0), w[0], w[1], 1e-10, 1e-12)
        };
        total += r.value;
    }
    Ok(total)
}
