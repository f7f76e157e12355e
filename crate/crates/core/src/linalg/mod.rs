//! Symmetric band eigensolver.
//!
//! The Hamiltonian is block-banded with a half-bandwidth of one photon row,
//! so a dense `O(n³)` decomposition wastes almost all of its work. The solver
//! here splits the matrix into exactly decoupled components, reduces each to
//! tridiagonal form by Givens bulge chasing (`O(n² kd)`), locates the wanted
//! eigenvalues by Sturm bisection and recovers their eigenvectors by inverse
//! iteration with a banded LU factorisation.

mod band;
mod lu;
mod tridiag;

use alloc::vec;
use alloc::vec::Vec;

pub use band::SymBandMatrix;
pub use tridiag::Tridiagonal;

use crate::error::{Error, Result};
use lu::BandLu;

/// Which eigenpairs to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    All,
    /// Eigenvalues in the half-open interval `[lo, hi)`.
    Values { lo: f64, hi: f64 },
}

/// Eigenvalues in ascending order with (optionally) their eigenvectors stored
/// row by row, `vectors[i * n .. (i + 1) * n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Option<Vec<f64>>,
}

impl EigenPairs {
    pub fn vector(&self, i: usize) -> Option<&[f64]> {
        self.vectors.as_ref().map(|v| &v[i * self.n..(i + 1) * self.n])
    }
}

/// Tridiagonal forms of the decoupled components, kept for repeated
/// eigenvalue counting.
#[derive(Debug, Clone)]
pub struct SpectralCounter {
    parts: Vec<Tridiagonal>,
}

impl SpectralCounter {
    pub fn new(a: &SymBandMatrix) -> Self {
        let parts = a
            .components()
            .iter()
            .map(|idx| a.submatrix(idx).tridiagonalize())
            .collect();
        Self { parts }
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        self.parts.iter().map(|t| t.count_below(x)).sum()
    }

    pub fn dim(&self) -> usize {
        self.parts.iter().map(|t| t.dim()).sum()
    }

    /// Smallest eigenvalue, `None` for an empty matrix.
    pub fn lowest(&self) -> Option<f64> {
        self.parts.iter().filter(|t| t.dim() > 0).map(|t| t.eigenvalues(0, 1)[0]).min_by(f64::total_cmp)
    }
}

/// Eigen-decomposition of a symmetric band matrix.
pub fn eigh_band(a: &SymBandMatrix, selection: Selection, vectors: bool) -> Result<EigenPairs> {
    let n = a.dim();
    let mut found: Vec<(f64, usize, Option<Vec<f64>>)> = Vec::new();

    for (c, idx) in a.components().iter().enumerate() {
        let sub = a.submatrix(idx);
        let values = if idx.len() == 1 {
            let v = sub.get(0, 0);
            match selection {
                Selection::All => vec![v],
                Selection::Values { lo, hi } if v >= lo && v < hi => vec![v],
                _ => Vec::new(),
            }
        } else {
            let t = sub.tridiagonalize();
            match selection {
                Selection::All => t.eigenvalues(0, t.dim()),
                Selection::Values { lo, hi } => {
                    let (il, iu) = (t.count_below(lo), t.count_below(hi));
                    t.eigenvalues(il, iu.max(il))
                }
            }
        };
        if values.is_empty() {
            continue;
        }
        let local = if vectors {
            Some(if idx.len() == 1 { vec![1.0] } else { inverse_iteration(&sub, &values, c as u64)? })
        } else {
            None
        };
        for (i, &lam) in values.iter().enumerate() {
            let vec = local.as_ref().map(|l| {
                let m = idx.len();
                let mut full = vec![0.0; n];
                for (pos, &g) in idx.iter().enumerate() {
                    full[g] = l[i * m + pos];
                }
                full
            });
            found.push((lam, c, vec));
        }
    }

    found.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let values = found.iter().map(|f| f.0).collect();
    let vectors = if vectors {
        let mut flat = Vec::with_capacity(found.len() * n);
        for f in &found {
            flat.extend_from_slice(f.2.as_ref().unwrap());
        }
        Some(flat)
    } else {
        None
    };
    Ok(EigenPairs { n, values, vectors })
}

/// Eigenvectors of `a` for the given (ascending) eigenvalues.
///
/// Vectors whose eigenvalues lie within `1e-3 ‖A‖` of each other are
/// re-orthogonalised against one another on every sweep; coincident shifts
/// are separated by a few ulps so each factorisation is distinct.
fn inverse_iteration(a: &SymBandMatrix, values: &[f64], seed: u64) -> Result<Vec<f64>> {
    const MAX_SWEEPS: usize = 8;
    let n = a.dim();
    let anorm = a.norm_inf().max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let ortol = 1e-3 * anorm;
    let sep = 10.0 * eps * anorm;
    let accept = 1.0 / (10.0 * eps * anorm * libm::sqrt(n as f64));

    let mut out = vec![0.0; values.len() * n];
    let mut rng = SplitMix64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut prev_shift = f64::NEG_INFINITY;
    let mut cluster_start = 0;

    for (t, &lam) in values.iter().enumerate() {
        let mut shift = lam;
        if t > 0 {
            if lam - values[t - 1] > ortol {
                cluster_start = t;
            }
            if shift - prev_shift < sep {
                shift = prev_shift + sep;
            }
        }
        prev_shift = shift;

        let lu = BandLu::factor(a, shift, eps * anorm);
        let mut x: Vec<f64> = (0..n).map(|_| rng.next_signed()).collect();
        normalize(&mut x);
        let mut converged_sweeps = 0;
        for _ in 0..MAX_SWEEPS {
            lu.solve(&mut x);
            let growth = norm2(&x);
            if !growth.is_finite() || growth == 0.0 {
                return Err(Error::Eigensolver(alloc::format!(
                    "inverse iteration broke down for eigenvalue {lam}"
                )));
            }
            for v in &mut x {
                *v /= growth;
            }
            for prev in cluster_start..t {
                let other = &out[prev * n..(prev + 1) * n];
                let d = dot(&x, other);
                for (xi, oi) in x.iter_mut().zip(other) {
                    *xi -= d * oi;
                }
            }
            normalize(&mut x);
            if growth >= accept {
                converged_sweeps += 1;
                if converged_sweeps >= 2 {
                    break;
                }
            }
        }
        fix_sign(&mut x);

        let residual = a.residual_norm(&x, lam);
        if !(residual <= 1e-9 * anorm) {
            return Err(Error::Eigensolver(alloc::format!(
                "eigenvector for eigenvalue {lam} did not converge (residual {residual:e})"
            )));
        }
        out[t * n..(t + 1) * n].copy_from_slice(&x);
    }
    Ok(out)
}

/// Largest-magnitude component made positive so results are reproducible.
fn fix_sign(x: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &v in x.iter() {
        if v.abs() > best {
            best = v.abs();
            sign = v.signum();
        }
    }
    if sign < 0.0 {
        for v in x {
            *v = -*v;
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn normalize(x: &mut [f64]) {
    let n = norm2(x);
    if n > 0.0 {
        for v in x {
            *v /= n;
        }
    }
}

struct SplitMix64(u64);

impl SplitMix64 {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn next_signed(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

#[cfg(test)]
mod tests;
