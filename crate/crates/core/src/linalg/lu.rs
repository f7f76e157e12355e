use alloc::vec;
use alloc::vec::Vec;

use super::SymBandMatrix;

/// LU factorisation with partial pivoting of `A − σI` for a symmetric band
/// matrix `A`, in the general-band layout: element `(i, j)` of the factors is
/// stored at `ab[(kv + i − j) + j * ldab]` with `kv = ku + kl`.
pub(crate) struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    /// Zero pivots are replaced by `tiny` so that nearly singular shifts,
    /// as used by inverse iteration, still yield a usable factorisation.
    pub(crate) fn factor(a: &SymBandMatrix, shift: f64, tiny: f64) -> Self {
        let n = a.dim();
        let kl = a.bandwidth();
        let ku = kl;
        let kv = ku + kl;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0; ldab * n];
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                let mut v = a.get(i, j);
                if i == j {
                    v -= shift;
                }
                ab[(kv + i - j) + j * ldab] = v;
            }
        }
        let tiny = if tiny > 0.0 { tiny } else { f64::MIN_POSITIVE };
        let mut ipiv = vec![0; n];
        let mut ju = 0;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab + kv;
            let mut jp = 0;
            let mut best = ab[col].abs();
            for i in 1..=km {
                let v = ab[col + i].abs();
                if v > best {
                    best = v;
                    jp = i;
                }
            }
            ipiv[j] = j + jp;
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv;
                    ab.swap(base + j - c, base + j + jp - c);
                }
            }
            let mut piv = ab[col];
            if piv.abs() < tiny {
                piv = if piv < 0.0 { -tiny } else { tiny };
                ab[col] = piv;
            }
            if km > 0 {
                let inv = 1.0 / piv;
                for i in 1..=km {
                    ab[col + i] *= inv;
                }
                for c in j + 1..=ju {
                    let base = c * ldab + kv;
                    let f = ab[base + j - c];
                    if f != 0.0 {
                        for i in 1..=km {
                            ab[base + j + i - c] -= ab[col + i] * f;
                        }
                    }
                }
            }
        }
        Self { n, kl, kv, ldab, ab, ipiv }
    }

    /// Solves `(A − σI) x = b` in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let (n, kl, kv, ldab) = (self.n, self.kl, self.kv, self.ldab);
        for j in 0..n {
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let col = j * ldab + kv;
                for i in 1..=km {
                    b[j + i] -= self.ab[col + i] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ldab + kv;
            b[j] /= self.ab[col];
            let t = b[j];
            if t != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= self.ab[col + i - j] * t;
                }
            }
        }
    }
}
