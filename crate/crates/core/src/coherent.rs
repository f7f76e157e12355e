//! Glauber ⊗ Bloch coherent states and Husimi functions.
//!
//! The coherent state at `x = (q, p; Q, P)` is `|x⟩ = Σ G_n B_k |n⟩|j, k − j⟩`
//! with
//!
//! * `G_n = e^{−j(q²+p²)/4} αⁿ/√n!`, `α = √(j/2)(q + ip)`,
//! * `B_k = (1 − (Q²+P²)/4)^j √C(2j, k) w^k`, `w = (Q + iP)/√(4 − Q² − P²)`.
//!
//! Both are evaluated from their logarithms, so large `j` and points near the
//! Bloch-sphere rim neither underflow nor overflow. Entries whose modulus is
//! below `e^{−25}` of the largest one are dropped; the discarded amplitude is
//! far below any statistical resolution used downstream.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::basis::{BasisSpec, Sector};
use crate::error::{Error, Result};
use crate::phase::PhasePoint;
use crate::spectrum::{parity_quantum_number, ParityLabel, Spectrum};

/// Log-modulus span kept when pruning overlap vectors.
const LOG_CUT: f64 = 25.0;

/// Distance kept from the Bloch-disk rim, where `w` diverges.
pub const RIM_MARGIN: f64 = 1e-12;

fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

fn ln_binomial(n: u32, k: u32) -> f64 {
    ln_factorial(n as usize) - ln_factorial(k as usize) - ln_factorial((n - k) as usize)
}

/// `⟨n|q, p⟩` for `n = 0..=n_max`.
pub fn glauber_overlap_vector(q: f64, p: f64, j: f64, n_max: usize) -> Vec<Complex64> {
    let rho2 = q * q + p * p;
    let mut out = vec![Complex64::new(0.0, 0.0); n_max + 1];
    if rho2 == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let ln_abs_alpha = 0.5 * (0.5 * j * rho2).ln();
    let theta = p.atan2(q);
    for (n, g) in out.iter_mut().enumerate() {
        let lg = -0.25 * j * rho2 + n as f64 * ln_abs_alpha - 0.5 * ln_factorial(n);
        *g = Complex64::from_polar(lg.exp(), n as f64 * theta);
    }
    out
}

/// `⟨j, k − j|Q, P⟩` for `k = 0..=2j`. Requires `Q² + P² < 4`.
pub fn bloch_overlap_vector(atom_q: f64, atom_p: f64, j: f64) -> Result<Vec<Complex64>> {
    let two_j = (2.0 * j).round() as u32;
    let r2 = atom_q * atom_q + atom_p * atom_p;
    if !(r2 < 4.0) {
        return Err(Error::OutsideBlochDisk(r2));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); two_j as usize + 1];
    let base = j * (1.0 - r2 / 4.0).ln();
    if r2 == 0.0 {
        out[0] = Complex64::new(1.0, 0.0);
        return Ok(out);
    }
    let ln_abs_w = 0.5 * (r2 / (4.0 - r2)).ln();
    let phi = atom_p.atan2(atom_q);
    for (k, b) in out.iter_mut().enumerate() {
        let lb = base + 0.5 * ln_binomial(two_j, k as u32) + k as f64 * ln_abs_w;
        *b = Complex64::from_polar(lb.exp(), k as f64 * phi);
    }
    Ok(out)
}

/// `|⟨x|y⟩|²` for two coherent states, in closed form: the Glauber factor
/// `exp(−j(Δq² + Δp²)/2)` times the Bloch factor `((1 + n·n′)/2)^{2j}`,
/// where `n = (Q s, P s, (Q² + P²)/2 − 1)`, `s = √(1 − (Q² + P²)/4)`, is the
/// unit Bloch vector of `(Q, P)`.
pub fn coherent_overlap_sq(x: &PhasePoint, y: &PhasePoint, j: f64) -> f64 {
    let (dq, dp) = (x.q - y.q, x.p - y.p);
    let bloch = |z: &PhasePoint| {
        let r2 = z.atom_r2().min(4.0);
        let s = (1.0 - r2 / 4.0).sqrt();
        [z.atom_q * s, z.atom_p * s, r2 / 2.0 - 1.0]
    };
    let (a, b) = (bloch(x), bloch(y));
    let cos = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
    let half = 0.5 * (1.0 + cos);
    (-0.5 * j * (dq * dq + dp * dp) + 2.0 * j * half.ln()).exp()
}

/// Precomputed factorial and binomial logarithms for one `(j, n_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapTables {
    two_j: u32,
    n_max: usize,
    half_ln_fact: Vec<f64>,
    half_ln_binom: Vec<f64>,
}

impl OverlapTables {
    pub fn new(two_j: u32, n_max: usize) -> Self {
        // Photon numbers beyond the cutoff are needed for the tail estimate.
        let len = 2 * n_max + 64;
        let half_ln_fact = (0..len).map(|n| 0.5 * ln_factorial(n)).collect();
        let half_ln_binom = (0..=two_j).map(|k| 0.5 * ln_binomial(two_j, k)).collect();
        Self { two_j, n_max, half_ln_fact, half_ln_binom }
    }

    pub fn for_basis(basis: &BasisSpec) -> Self {
        Self::new(basis.two_j(), basis.n_max())
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    /// Pruned overlap vectors at `x`. Points within [`RIM_MARGIN`] of the
    /// Bloch-disk rim are pulled inward radially.
    pub fn point(&self, x: &PhasePoint) -> CoherentPoint {
        let j = self.j();
        let mut x = *x;
        let r2 = x.atom_r2();
        if r2 > 4.0 - RIM_MARGIN {
            let f = ((4.0 - RIM_MARGIN) / r2).sqrt();
            x.atom_q *= f;
            x.atom_p *= f;
        }

        // Glauber part: log-modulus is concave in n with its peak near |α|².
        let rho2 = x.q * x.q + x.p * x.p;
        let (g_start, g, tail) = if rho2 == 0.0 {
            (0, vec![Complex64::new(1.0, 0.0)], 0.0)
        } else {
            let mean = 0.5 * j * rho2;
            let ln_a = 0.5 * mean.ln();
            let lg = |n: usize| -0.5 * mean + n as f64 * ln_a - self.half_ln_fact[n];
            let peak = (mean.floor() as usize).min(self.half_ln_fact.len() - 1);
            let top = lg(peak).max(lg((peak + 1).min(self.half_ln_fact.len() - 1)));
            let mut lo = peak;
            while lo > 0 && lg(lo - 1) > top - LOG_CUT {
                lo -= 1;
            }
            let mut hi = peak;
            while hi + 1 < self.half_ln_fact.len() && lg(hi + 1) > top - LOG_CUT {
                hi += 1;
            }
            let theta = x.p.atan2(x.q);
            let mut tail = 0.0;
            for n in (self.n_max + 1).max(lo)..=hi {
                tail += (2.0 * lg(n)).exp();
            }
            let last = hi.min(self.n_max);
            let g: Vec<Complex64> = if lo > last {
                Vec::new()
            } else {
                (lo..=last).map(|n| Complex64::from_polar(lg(n).exp(), n as f64 * theta)).collect()
            };
            (lo, g, tail)
        };

        // Bloch part.
        let r2 = x.atom_r2();
        let (b_start, b) = if r2 == 0.0 {
            (0, vec![Complex64::new(1.0, 0.0)])
        } else {
            let base = j * (1.0 - r2 / 4.0).ln();
            let ln_w = 0.5 * (r2 / (4.0 - r2)).ln();
            let lb = |k: usize| base + self.half_ln_binom[k] + k as f64 * ln_w;
            let mut peak = 0;
            let mut top = f64::NEG_INFINITY;
            for k in 0..=self.two_j as usize {
                let v = lb(k);
                if v > top {
                    top = v;
                    peak = k;
                }
            }
            let mut lo = peak;
            while lo > 0 && lb(lo - 1) > top - LOG_CUT {
                lo -= 1;
            }
            let mut hi = peak;
            while hi < self.two_j as usize && lb(hi + 1) > top - LOG_CUT {
                hi += 1;
            }
            let phi = x.atom_p.atan2(x.atom_q);
            (lo as u32, (lo..=hi).map(|k| Complex64::from_polar(lb(k).exp(), k as f64 * phi)).collect())
        };

        CoherentPoint { x, g_start, g, b_start, b, glauber_tail: tail }
    }
}

/// Overlap vectors of one coherent state, restricted to their significant
/// index ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentPoint {
    pub x: PhasePoint,
    g_start: usize,
    g: Vec<Complex64>,
    b_start: u32,
    b: Vec<Complex64>,
    /// `Σ_{n > n_max} |G_n|²`, the coherent-state weight the cutoff misses.
    pub glauber_tail: f64,
}

impl CoherentPoint {
    /// `Σ_{n,k} G_n B_k c_{nk}` over a real coefficient vector.
    pub fn amplitude_real(&self, basis: &BasisSpec, c: &[f64]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        let b_end = self.b_start + self.b.len() as u32;
        for (dn, g) in self.g.iter().enumerate() {
            let row = basis.row(self.g_start + dn);
            let (i0, i1) = row_span(row.k_first, row.k_step, row.len, self.b_start, b_end);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in i0..i1 {
                let k = row.k_first + row.k_step * i as u32;
                acc += self.b[(k - self.b_start) as usize] * c[row.start + i];
            }
            total += g * acc;
        }
        total
    }

    /// `⟨x|ψ⟩ = Σ_{n,k} conj(G_n B_k) c_{nk}` for complex coefficients.
    pub fn amplitude_complex(&self, basis: &BasisSpec, c: &[Complex64]) -> Complex64 {
        let mut total = Complex64::new(0.0, 0.0);
        let b_end = self.b_start + self.b.len() as u32;
        for (dn, g) in self.g.iter().enumerate() {
            let row = basis.row(self.g_start + dn);
            let (i0, i1) = row_span(row.k_first, row.k_step, row.len, self.b_start, b_end);
            let mut acc = Complex64::new(0.0, 0.0);
            for i in i0..i1 {
                let k = row.k_first + row.k_step * i as u32;
                acc += self.b[(k - self.b_start) as usize].conj() * c[row.start + i];
            }
            total += g.conj() * acc;
        }
        total
    }

    /// Husimi function `|⟨x|ψ⟩|²` of a real state.
    pub fn husimi_real(&self, basis: &BasisSpec, c: &[f64]) -> f64 {
        self.amplitude_real(basis, c).norm_sqr()
    }
}

/// Row positions `i0..i1` whose spin index lies in `[b_lo, b_hi)`.
fn row_span(k_first: u32, k_step: u32, len: usize, b_lo: u32, b_hi: u32) -> (usize, usize) {
    let i0 = if b_lo <= k_first { 0 } else { ((b_lo - k_first) + k_step - 1) / k_step } as usize;
    let i1 = if b_hi <= k_first { 0 } else { ((b_hi - k_first) + k_step - 1) / k_step } as usize;
    (i0.min(len), i1.min(len))
}

/// Anything with a Husimi function on phase space.
pub trait HusimiDensity {
    fn husimi(&self, x: &PhasePoint) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// A normalised pure state over a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub basis: BasisSpec,
    pub coefficients: Coefficients,
    pub label: String,
    tables: OverlapTables,
}

impl StateVector {
    /// Normalises the coefficients; an all-zero vector is rejected.
    pub fn new(basis: BasisSpec, coefficients: Coefficients, label: impl Into<String>) -> Result<Self> {
        let mut coefficients = coefficients;
        let norm = match &coefficients {
            Coefficients::Real(c) => c.iter().map(|v| v * v).sum::<f64>(),
            Coefficients::Complex(c) => c.iter().map(|v| v.norm_sqr()).sum::<f64>(),
        }
        .sqrt();
        let len = match &coefficients {
            Coefficients::Real(c) => c.len(),
            Coefficients::Complex(c) => c.len(),
        };
        if len != basis.dim() {
            return Err(Error::InvalidArgument(alloc::format!(
                "{len} coefficients for a basis of dimension {}",
                basis.dim()
            )));
        }
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidArgument("state vector has zero or non-finite norm".into()));
        }
        match &mut coefficients {
            Coefficients::Real(c) => c.iter_mut().for_each(|v| *v /= norm),
            Coefficients::Complex(c) => c.iter_mut().for_each(|v| *v /= norm),
        }
        let tables = OverlapTables::for_basis(&basis);
        Ok(Self { basis, coefficients, label: label.into(), tables })
    }

    /// Eigenstate `k` of a spectrum.
    pub fn eigenstate(spec: &Spectrum, k: usize) -> Self {
        let label = alloc::format!("eigenstate {k} (eps = {:.6})", spec.energy(k));
        Self::new(spec.basis.clone(), Coefficients::Real(spec.state(k).to_vec()), label)
            .expect("eigenvectors are normalised")
    }

    /// The coherent state `|x⟩` expanded in (and truncated to) `basis`.
    pub fn coherent(basis: BasisSpec, x: &PhasePoint) -> Result<Self> {
        let g = glauber_overlap_vector(x.q, x.p, basis.j(), basis.n_max());
        let b = bloch_overlap_vector(x.atom_q, x.atom_p, basis.j())?;
        let c = basis.states().map(|(n, k)| g[n] * b[k as usize]).collect();
        let label = alloc::format!("coherent state at ({}, {}; {}, {})", x.q, x.p, x.atom_q, x.atom_p);
        Self::new(basis, Coefficients::Complex(c), label)
    }

    pub fn tables(&self) -> &OverlapTables {
        &self.tables
    }

    /// Husimi function at precomputed overlap vectors.
    pub fn husimi_at(&self, cp: &CoherentPoint) -> f64 {
        match &self.coefficients {
            Coefficients::Real(c) => cp.amplitude_real(&self.basis, c).norm_sqr(),
            Coefficients::Complex(c) => cp.amplitude_complex(&self.basis, c).norm_sqr(),
        }
    }

    /// `⟨ψ|O|ψ⟩` for an operator diagonal in the basis.
    pub fn diagonal_expectation(&self, f: impl Fn(usize, u32) -> f64) -> f64 {
        let weights: Vec<f64> = match &self.coefficients {
            Coefficients::Real(c) => c.iter().map(|v| v * v).collect(),
            Coefficients::Complex(c) => c.iter().map(|v| v.norm_sqr()).collect(),
        };
        self.basis.states().zip(weights).map(|((n, k), w)| w * f(n, k)).sum()
    }
}

impl HusimiDensity for StateVector {
    fn husimi(&self, x: &PhasePoint) -> f64 {
        let cp = self.tables.point(x);
        if cp.glauber_tail > 1e-8 {
            log::warn!(
                "Fock cutoff n_max = {} misses {:.1e} of the coherent state at ({}, {}); Husimi value unreliable",
                self.basis.n_max(),
                cp.glauber_tail,
                x.q,
                x.p
            );
        }
        self.husimi_at(&cp)
    }
}

/// Incoherent mixture `Σ w_i |ψ_i⟩⟨ψ_i|`; its Husimi function is the
/// weighted sum of the pure-state ones.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub states: Vec<(f64, StateVector)>,
}

impl HusimiDensity for Mixture {
    fn husimi(&self, x: &PhasePoint) -> f64 {
        self.states.iter().map(|(w, s)| w * s.husimi(x)).sum()
    }
}

/// Random superposition `Σ c_k |E_k⟩` of the converged eigenstates of
/// `parity` with energies in `[center − width/2, center + width/2)`, with
/// i.i.d. standard-normal `c_k` (normalised afterwards).
pub fn random_goe_state(
    spec: &Spectrum,
    eps_center: f64,
    width: f64,
    parity: Sector,
    seed: u64,
) -> Result<StateVector> {
    let members = window_members(spec, eps_center, width, parity);
    if members.len() < 2 {
        return Err(Error::EmptyWindow { found: members.len(), needed: 2 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.basis.dim();
    let mut c = vec![0.0; d];
    for &k in &members {
        let a: f64 = StandardNormal.sample(&mut rng);
        for (ci, vi) in c.iter_mut().zip(spec.state(k)) {
            *ci += a * vi;
        }
    }
    let label = alloc::format!("random state seed {seed} ({} eigenstates around eps = {eps_center})", members.len());
    StateVector::new(spec.basis.clone(), Coefficients::Real(c), label)
}

/// Converged eigenstates of the requested parity in the window.
pub fn window_members(spec: &Spectrum, eps_center: f64, width: f64, parity: Sector) -> Vec<usize> {
    let (lo, hi) = (eps_center - 0.5 * width, eps_center + 0.5 * width);
    spec.converged_in(lo, hi)
        .into_iter()
        .filter(|&k| match parity {
            Sector::Both => true,
            Sector::Only(p) => match spec.basis.sector() {
                Sector::Only(q) => p == q,
                Sector::Both => parity_quantum_number(&spec.basis, spec.state(k)) == ParityLabel::Definite(p),
            },
        })
        .collect()
}
