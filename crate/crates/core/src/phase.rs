//! Classical limit of the Dicke Hamiltonian on the four-dimensional phase
//! space `x = (q, p; Q, P)` with the atomic coordinates confined to the Bloch
//! disk `Q² + P² ≤ 4`.

use core::ops::{Add, Mul, Sub};

use num_traits::Float;

use crate::error::{Error, Result};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
    /// Atomic coordinate `Q`.
    pub atom_q: f64,
    /// Atomic coordinate `P`.
    pub atom_p: f64,
}

impl PhasePoint {
    pub const fn new(q: f64, p: f64, atom_q: f64, atom_p: f64) -> Self {
        Self { q, p, atom_q, atom_p }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.q, self.p, self.atom_q, self.atom_p]
    }

    /// `Q² + P²`.
    pub fn atom_r2(&self) -> f64 {
        self.atom_q * self.atom_q + self.atom_p * self.atom_p
    }

    pub fn is_in_bloch_disk(&self) -> bool {
        self.atom_r2() <= 4.0
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.q * o.q + self.p * o.p + self.atom_q * o.atom_q + self.atom_p * o.atom_p
    }

    pub fn distance(&self, o: &Self) -> f64 {
        (*self - *o).norm()
    }

    /// The map `(q, Q) → (−q, −Q)`, a symmetry of the classical Hamiltonian.
    pub fn mirror(self) -> Self {
        Self::new(-self.q, self.p, -self.atom_q, self.atom_p)
    }

    /// Image under the parity operator, `x → −x`.
    pub fn parity_image(self) -> Self {
        Self::new(-self.q, -self.p, -self.atom_q, -self.atom_p)
    }
}

impl Add for PhasePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.q + o.q, self.p + o.p, self.atom_q + o.atom_q, self.atom_p + o.atom_p)
    }
}

impl Sub for PhasePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.q - o.q, self.p - o.p, self.atom_q - o.atom_q, self.atom_p - o.atom_p)
    }
}

impl Mul<PhasePoint> for f64 {
    type Output = PhasePoint;
    fn mul(self, x: PhasePoint) -> PhasePoint {
        PhasePoint::new(self * x.q, self * x.p, self * x.atom_q, self * x.atom_p)
    }
}

fn check_disk(x: &PhasePoint) -> Result<()> {
    let r2 = x.atom_r2();
    if r2 > 4.0 || !r2.is_finite() {
        return Err(Error::OutsideBlochDisk(r2));
    }
    Ok(())
}

fn check_interior(x: &PhasePoint) -> Result<()> {
    let r2 = x.atom_r2();
    if r2 >= 4.0 || !r2.is_finite() {
        return Err(Error::OutsideBlochDisk(r2));
    }
    Ok(())
}

/// Classical energy per atom-pair, `h_cl = H/j`.
pub fn h_cl(x: &PhasePoint, params: &ModelParams) -> Result<f64> {
    check_disk(x)?;
    Ok(h_cl_unchecked(x, params))
}

#[inline]
pub(crate) fn h_cl_unchecked(x: &PhasePoint, params: &ModelParams) -> f64 {
    let r2 = x.atom_r2();
    let s = (1.0 - r2 / 4.0).max(0.0).sqrt();
    0.5 * params.omega * (x.q * x.q + x.p * x.p) + 0.5 * params.omega0 * r2
        + 2.0 * params.gamma * x.q * x.atom_q * s
        - params.omega0
}

/// `∇h_cl = (∂h/∂q, ∂h/∂p, ∂h/∂Q, ∂h/∂P)`.
pub fn gradient(x: &PhasePoint, params: &ModelParams) -> Result<[f64; 4]> {
    check_interior(x)?;
    Ok(gradient_unchecked(x, params))
}

#[inline]
pub(crate) fn gradient_unchecked(x: &PhasePoint, params: &ModelParams) -> [f64; 4] {
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let (q, p, aq, ap) = (x.q, x.p, x.atom_q, x.atom_p);
    let s = (1.0 - (aq * aq + ap * ap) / 4.0).sqrt();
    [
        w * q + 2.0 * g * aq * s,
        w * p,
        w0 * aq + 2.0 * g * q * (s - aq * aq / (4.0 * s)),
        w0 * ap - g * q * aq * ap / (2.0 * s),
    ]
}

/// Hamilton's equations `ẋ = J∇h`.
pub fn eom(x: &PhasePoint, params: &ModelParams) -> Result<PhasePoint> {
    check_interior(x)?;
    Ok(eom_unchecked(x, params))
}

#[inline]
pub(crate) fn eom_unchecked(x: &PhasePoint, params: &ModelParams) -> PhasePoint {
    let g = gradient_unchecked(x, params);
    PhasePoint::new(g[1], -g[0], g[3], -g[2])
}

/// Hessian of `h_cl`, row-major.
pub fn hessian(x: &PhasePoint, params: &ModelParams) -> Result<[[f64; 4]; 4]> {
    check_interior(x)?;
    Ok(hessian_unchecked(x, params))
}

pub(crate) fn hessian_unchecked(x: &PhasePoint, params: &ModelParams) -> [[f64; 4]; 4] {
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let (q, aq, ap) = (x.q, x.atom_q, x.atom_p);
    let s = (1.0 - (aq * aq + ap * ap) / 4.0).sqrt();
    let s3 = s * s * s;
    let h_qq_atom = 2.0 * g * (s - aq * aq / (4.0 * s));
    let h_qp_atom = -g * aq * ap / (2.0 * s);
    let h_big_qq = w0 + 2.0 * g * q * (-3.0 * aq / (4.0 * s) - aq * aq * aq / (16.0 * s3));
    let h_big_qp = 2.0 * g * q * (-ap / (4.0 * s) - aq * aq * ap / (16.0 * s3));
    let h_big_pp = w0 - g * q * aq * (1.0 / (2.0 * s) + ap * ap / (8.0 * s3));
    [
        [w, 0.0, h_qq_atom, h_qp_atom],
        [0.0, w, 0.0, 0.0],
        [h_qq_atom, 0.0, h_big_qq, h_big_qp],
        [h_qp_atom, 0.0, h_big_qp, h_big_pp],
    ]
}

/// Jacobian of the flow field, `J · Hess h`.
pub(crate) fn flow_jacobian_unchecked(x: &PhasePoint, params: &ModelParams) -> [[f64; 4]; 4] {
    let h = hessian_unchecked(x, params);
    [h[1], h[0].map(|v| -v), h[3], h[2].map(|v| -v)]
}

/// The symplectic form, `J = [[0, I], [−I, 0]]` per degree of freedom.
pub const SYMPLECTIC: [[f64; 4]; 4] =
    [[0.0, 1.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.0, 0.0, -1.0, 0.0]];

/// Bosonic `q` roots of `h_cl(q, p, Q, P) = ε` at fixed `(p, Q, P)`.
///
/// `h_cl` is quadratic in `q`: `(ω/2)q² + b q + (c − ε)` with
/// `b = 2γQ√(1 − (Q² + P²)/4)`. Returns the roots together with
/// `|∂h/∂q| = √Δ` at either root, or `None` when the discriminant falls below
/// `1e−12` (no crossing, or a tangency).
pub fn q_roots(eps: f64, p: f64, atom_q: f64, atom_p: f64, params: &ModelParams) -> Option<([f64; 2], f64)> {
    let r2 = atom_q * atom_q + atom_p * atom_p;
    if r2 > 4.0 {
        return None;
    }
    let w = params.omega;
    let b = 2.0 * params.gamma * atom_q * (1.0 - r2 / 4.0).max(0.0).sqrt();
    let c = 0.5 * w * p * p + 0.5 * params.omega0 * r2 - params.omega0;
    let disc = b * b - 2.0 * w * (c - eps);
    if !(disc >= 1e-12) {
        return None;
    }
    let sd = disc.sqrt();
    // Cancellation-free pair: one root from the quadratic formula, the other
    // from the product of roots.
    let big = if b >= 0.0 { -b - sd } else { -b + sd };
    let r1 = big / w;
    let r2 = if big != 0.0 { 2.0 * (c - eps) / big } else { -r1 };
    let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    Some(([lo, hi], sd))
}

/// Largest `|p|` reachable on the shell `ε`: from `h ≥ (ω/2)p² + ε₀`.
pub fn p_max(eps: f64, params: &ModelParams) -> f64 {
    let e0 = params.ground_energy();
    (2.0 * (eps - e0).max(0.0) / params.omega).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::resonant(1.0, 30.0).unwrap()
    }

    #[test]
    fn reference_energies() {
        let p = params();
        assert_eq!(h_cl(&PhasePoint::default(), &p).unwrap(), -1.0);
        assert_eq!(h_cl(&PhasePoint::new(0.0, 0.0, 2.0, 0.0), &p).unwrap(), 1.0);
        assert!(h_cl(&PhasePoint::new(0.0, 0.0, 2.0, 0.1), &p).is_err());
        assert!(eom(&PhasePoint::new(0.0, 0.0, 2.0, 0.0), &p).is_err());
    }

    #[test]
    fn uncoupled_flow_is_harmonic() {
        let p = ModelParams::new(1.3, 0.7, 0.0, 1.0).unwrap();
        let x = PhasePoint::new(0.3, -0.2, 0.5, 1.1);
        let f = eom(&x, &p).unwrap();
        assert_eq!(f, PhasePoint::new(1.3 * -0.2, -1.3 * 0.3, 0.7 * 1.1, -0.7 * 0.5));
    }

    #[test]
    fn roots_lie_on_shell() {
        let p = params();
        let (roots, sd) = q_roots(-0.5, 0.3, 0.8, -0.4, &p).unwrap();
        for q in roots {
            let x = PhasePoint::new(q, 0.3, 0.8, -0.4);
            assert!((h_cl(&x, &p).unwrap() + 0.5).abs() < 1e-13);
            assert!((gradient(&x, &p).unwrap()[0].abs() - sd).abs() < 1e-12);
        }
    }

    #[test]
    fn mirror_is_a_symmetry() {
        let p = params();
        let x = PhasePoint::new(0.4, -0.7, 1.1, 0.3);
        let a = h_cl(&x, &p).unwrap();
        let b = h_cl(&x.mirror(), &p).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert_eq!(x.mirror().mirror(), x);
    }
}
