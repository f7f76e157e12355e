use alloc::format;

use num_traits::Float;

use crate::error::{Error, Result};

/// Couplings and system size of the Dicke Hamiltonian
/// `H = ω a†a + ω₀ J_z + (γ/√N)(a† + a)(J₊ + J₋)` with `N = 2j` atoms.
///
/// The pseudo-spin length is stored as the integer `2j` so half-integer sizes
/// are represented exactly. The sign of `γ` is a gauge choice (it can be
/// absorbed into `a → −a`), so negative couplings are accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub omega: f64,
    pub omega0: f64,
    pub gamma: f64,
    two_j: u32,
}

impl ModelParams {
    pub fn new(omega: f64, omega0: f64, gamma: f64, j: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::InvalidParams(format!("omega0 must be positive, got {omega0}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidParams(format!("gamma must be finite, got {gamma}")));
        }
        let two_j = 2.0 * j;
        if !(two_j.is_finite() && two_j >= 1.0 && two_j == two_j.round() && two_j < u32::MAX as f64) {
            return Err(Error::InvalidParams(format!(
                "j must be a positive integer or half-integer, got {j}"
            )));
        }
        Ok(Self { omega, omega0, gamma, two_j: two_j as u32 })
    }

    /// Resonant parameters `ω = ω₀ = 1` used throughout the analysis.
    pub fn resonant(gamma: f64, j: f64) -> Result<Self> {
        Self::new(1.0, 1.0, gamma, j)
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    /// Number of atoms `N = 2j`.
    pub fn atoms(&self) -> f64 {
        self.two_j as f64
    }

    pub fn gamma_c(&self) -> f64 {
        (self.omega * self.omega0).sqrt() / 2.0
    }

    pub fn hbar_eff(&self) -> f64 {
        1.0 / self.j()
    }

    pub fn is_superradiant(&self) -> bool {
        self.gamma.abs() > self.gamma_c()
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    /// Minimum of the classical energy surface, `ε₀`.
    ///
    /// In the superradiant phase `ε₀ = −(ω₀/2)(γ_c²/γ² + γ²/γ_c²)`; otherwise
    /// the minimum sits at the origin with `ε₀ = −ω₀`.
    pub fn ground_energy(&self) -> f64 {
        if self.is_superradiant() {
            let r = (self.gamma_c() / self.gamma).powi(2);
            -0.5 * self.omega0 * (r + 1.0 / r)
        } else {
            -self.omega0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ModelParams::resonant(1.0, 100.0).unwrap();
        assert_eq!(p.gamma_c(), 0.5);
        assert_eq!(p.hbar_eff(), 0.01);
        assert!(p.is_superradiant());
        assert!((p.ground_energy() + 2.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(ModelParams::resonant(1.0, 0.0).is_err());
        assert!(ModelParams::resonant(1.0, 0.3).is_err());
        assert!(ModelParams::resonant(1.0, -1.0).is_err());
        assert!(ModelParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(ModelParams::resonant(f64::NAN, 1.0).is_err());
        assert_eq!(ModelParams::resonant(1.0, 0.5).unwrap().two_j(), 1);
        assert_eq!(ModelParams::resonant(1.0, 2.5).unwrap().two_j(), 5);
    }

    #[test]
    fn normal_phase_minimum() {
        let p = ModelParams::resonant(0.3, 4.0).unwrap();
        assert_eq!(p.ground_energy(), -1.0);
    }
}
