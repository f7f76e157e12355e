//! Eigenstates of the Dicke Hamiltonian and their cutoff convergence.

use alloc::vec::Vec;

use num_traits::Float;

use crate::basis::{BasisSpec, Parity, Sector};
use crate::error::{Error, Result};
use crate::linalg::{eigh_band, Selection, SymBandMatrix};
use crate::params::ModelParams;

/// Rescaled energies `ε = E/j` to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnergyRange {
    All,
    /// Half-open interval `[lo, hi)`.
    Window { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub params: ModelParams,
    pub basis: BasisSpec,
    energies: Vec<f64>,
    coefficients: Vec<f64>,
    converged: Vec<bool>,
}

impl Spectrum {
    /// Assembles a spectrum from raw parts, e.g. when reading a cache.
    pub fn from_parts(
        params: ModelParams,
        basis: BasisSpec,
        energies: Vec<f64>,
        coefficients: Vec<f64>,
        converged: Vec<bool>,
    ) -> Result<Self> {
        basis.check_params(&params)?;
        let n = energies.len();
        if coefficients.len() != n * basis.dim() || converged.len() != n {
            return Err(Error::InvalidArgument("spectrum arrays have inconsistent lengths".into()));
        }
        Ok(Self { params, basis, energies, coefficients, converged })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn energy(&self, k: usize) -> f64 {
        self.energies[k]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Coefficient vector of eigenstate `k` in basis order.
    pub fn state(&self, k: usize) -> &[f64] {
        let d = self.basis.dim();
        &self.coefficients[k * d..(k + 1) * d]
    }

    pub fn converged_mask(&self) -> &[bool] {
        &self.converged
    }

    pub fn is_converged(&self, k: usize) -> bool {
        self.converged[k]
    }

    /// Indices of converged states with `lo ≤ ε < hi`.
    pub fn converged_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.converged[k] && self.energies[k] >= lo && self.energies[k] < hi)
            .collect()
    }

    /// Summed `|c|²` over photon numbers `n > n_max − tail_width`.
    pub fn tail_weight(&self, k: usize, tail_width: usize) -> f64 {
        let first = (self.basis.n_max() + 1).saturating_sub(tail_width);
        let start = self.basis.row(first).start;
        self.state(k)[start..].iter().map(|c| c * c).sum()
    }
}

/// Tail width used by [`filter_converged`] when none is configured:
/// `max(10, n_max/10)`, capped below `n_max + 1`.
pub fn default_tail_width(n_max: usize) -> usize {
    (n_max / 10).max(10).min(n_max)
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-8;

/// Bosonic cutoff that comfortably contains every classical state up to
/// `eps_top`.
///
/// At fixed boson radius `ρ² = q² + p²` the energy is bounded below by
/// `(ω/2)ρ² − √(ω₀² + 4γ²ρ²)`, so no point of the shell has `ρ` beyond the
/// largest root `ρ_max` of that bound. The photon number of such points is
/// `n ≈ jρ²/2`; six Poisson standard deviations plus a margin of ten quanta
/// are added so that the Fock tail of converged eigenstates is negligible.
pub fn default_n_max(params: &ModelParams, eps_top: f64) -> usize {
    let (w, w0, g) = (params.omega, params.omega0, params.gamma);
    let bound = |r2: f64| 0.5 * w * r2 - (w0 * w0 + 4.0 * g * g * r2).sqrt() - eps_top;
    let mut hi = 1.0;
    while bound(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let n_cl = params.j() * hi / 2.0;
    (n_cl + 6.0 * n_cl.sqrt() + 10.0).ceil() as usize
}

/// Eigenpairs of `h` with energies in `range`. All states start out marked
/// converged; see [`filter_converged`].
pub fn diagonalize(
    h: &SymBandMatrix,
    params: &ModelParams,
    basis: &BasisSpec,
    range: EnergyRange,
) -> Result<Spectrum> {
    basis.check_params(params)?;
    if h.dim() != basis.dim() {
        return Err(Error::InvalidArgument(alloc::format!(
            "matrix dimension {} does not match basis dimension {}",
            h.dim(),
            basis.dim()
        )));
    }
    let j = params.j();
    let selection = match range {
        EnergyRange::All => Selection::All,
        EnergyRange::Window { lo, hi } => Selection::Values { lo: lo * j, hi: hi * j },
    };
    let pairs = eigh_band(h, selection, true)?;
    let energies: Vec<f64> = pairs.values.iter().map(|e| e / j).collect();
    let n = energies.len();
    Ok(Spectrum {
        params: *params,
        basis: basis.clone(),
        energies,
        coefficients: pairs.vectors.unwrap_or_default(),
        converged: alloc::vec![true; n],
    })
}

/// Marks states whose Fock-tail weight over the last `tail_width` photon rows
/// reaches `tail_tol` as unconverged. With `tail_tol = 0` only states whose
/// tail vanishes identically pass.
pub fn filter_converged(mut spec: Spectrum, tail_width: usize, tail_tol: f64) -> Spectrum {
    for k in 0..spec.len() {
        let w = spec.tail_weight(k, tail_width);
        spec.converged[k] = w == 0.0 || w < tail_tol;
    }
    spec
}

/// Parity content of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityLabel {
    Definite(Parity),
    Mixed,
}

/// Parity of `state`, or `Mixed` if more than `1e−10` of its weight lies
/// outside the dominant sector.
pub fn parity_quantum_number(basis: &BasisSpec, state: &[f64]) -> ParityLabel {
    if let Sector::Only(p) = basis.sector() {
        return ParityLabel::Definite(p);
    }
    let (mut plus, mut minus) = (0.0, 0.0);
    for ((n, k), c) in basis.states().zip(state) {
        match Parity::of(n, k) {
            Parity::Positive => plus += c * c,
            Parity::Negative => minus += c * c,
        }
    }
    let total = plus + minus;
    if minus <= 1e-10 * total {
        ParityLabel::Definite(Parity::Positive)
    } else if plus <= 1e-10 * total {
        ParityLabel::Definite(Parity::Negative)
    } else {
        ParityLabel::Mixed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_hamiltonian;
    use alloc::vec;

    fn solve(p: &ModelParams, n_max: usize, sector: Sector) -> Spectrum {
        let b = BasisSpec::new(p, n_max, sector);
        let h = build_hamiltonian(p, &b).unwrap();
        diagonalize(&h, p, &b, EnergyRange::All).unwrap()
    }

    #[test]
    fn uncoupled_energies_are_exact() {
        let p = ModelParams::new(1.0, 0.6, 0.0, 2.0).unwrap();
        let s = solve(&p, 5, Sector::Both);
        let mut want: Vec<f64> =
            s.basis.states().map(|(n, k)| (n as f64 + 0.6 * (k as f64 - 2.0)) / 2.0).collect();
        want.sort_by(f64::total_cmp);
        assert_eq!(s.energies(), &want[..]);
        let s = filter_converged(s, 2, 1e-8);
        // Uncoupled eigenstates are basis vectors; those in the tail rows fail.
        let tail_states = 2 * 5;
        assert_eq!(s.converged_mask().iter().filter(|&&c| !c).count(), tail_states);
    }

    #[test]
    fn zero_tolerance_needs_vanishing_tail() {
        let p = ModelParams::resonant(0.0, 1.0).unwrap();
        let s = filter_converged(solve(&p, 4, Sector::Both), 1, 0.0);
        for k in 0..s.len() {
            assert_eq!(s.is_converged(k), s.tail_weight(k, 1) == 0.0);
        }
        let p = ModelParams::resonant(0.7, 1.0).unwrap();
        let s = filter_converged(solve(&p, 4, Sector::Both), 1, 0.0);
        assert!(s.converged_mask().iter().all(|&c| !c));
    }

    #[test]
    fn sector_spectra_union_to_full_spectrum() {
        for two_j in [1u32, 2, 5, 10] {
            let p = ModelParams::resonant(0.9, two_j as f64 / 2.0).unwrap();
            let full = solve(&p, 20, Sector::Both);
            let mut union: Vec<f64> = [Parity::Positive, Parity::Negative]
                .iter()
                .flat_map(|&par| solve(&p, 20, Sector::Only(par)).energies().to_vec())
                .collect();
            union.sort_by(f64::total_cmp);
            assert_eq!(union.len(), full.len());
            for (a, b) in union.iter().zip(full.energies()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn gamma_sign_is_a_gauge() {
        let p = ModelParams::resonant(1.0, 2.0).unwrap();
        let a = solve(&p, 15, Sector::Both);
        let b = solve(&p.with_gamma(-1.0), 15, Sector::Both);
        for (x, y) in a.energies().iter().zip(b.energies()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn eigenstates_have_definite_parity() {
        let p = ModelParams::resonant(1.0, 1.5).unwrap();
        let s = solve(&p, 12, Sector::Both);
        for k in 0..s.len() {
            assert_ne!(parity_quantum_number(&s.basis, s.state(k)), ParityLabel::Mixed);
        }
    }

    #[test]
    fn parity_labels_of_basis_states() {
        let b = BasisSpec::from_two_j(4, 3, Sector::Both);
        let mut v = vec![0.0; b.dim()];
        v[b.index_of(0, 0).unwrap()] = 1.0;
        assert_eq!(parity_quantum_number(&b, &v), ParityLabel::Definite(Parity::Positive));
        v[b.index_of(0, 1).unwrap()] = 1.0;
        assert_eq!(parity_quantum_number(&b, &v), ParityLabel::Mixed);
    }

    #[test]
    fn cutoff_heuristic_grows_with_energy() {
        let p = ModelParams::resonant(1.0, 30.0).unwrap();
        let low = default_n_max(&p, -1.0);
        let high = default_n_max(&p, -0.35);
        assert!(low < high);
        assert!((300..340).contains(&high), "{high}");
    }
}
