use alloc::vec;
use alloc::vec::Vec;

use super::tridiag::Tridiagonal;

/// Real symmetric matrix with half-bandwidth `kd`, lower triangle stored
/// column by column: element `(r, c)` with `0 ≤ r − c ≤ kd` lives at
/// `data[c * (kd + 1) + (r − c)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBandMatrix {
    n: usize,
    kd: usize,
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(n: usize, kd: usize) -> Self {
        let kd = kd.min(n.saturating_sub(1));
        Self { n, kd, data: vec![0.0; n * (kd + 1)] }
    }

    /// Band matrix from a dense row-major matrix; entries outside the band
    /// must be zero.
    pub fn from_dense(n: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), n * n);
        let mut kd = 0;
        for r in 0..n {
            for c in 0..r {
                if dense[r * n + c] != 0.0 || dense[c * n + r] != 0.0 {
                    kd = kd.max(r - c);
                }
            }
        }
        let mut m = Self::zeros(n, kd);
        for c in 0..n {
            for r in c..(c + kd + 1).min(n) {
                m.set(r, c, dense[r * n + c]);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.kd
    }

    fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let (r, c) = if r >= c { (r, c) } else { (c, r) };
        (r - c <= self.kd && r < self.n).then(|| c * (self.kd + 1) + (r - c))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.slot(r, c).map_or(0.0, |s| self.data[s])
    }

    /// Sets both `(r, c)` and `(c, r)`.
    ///
    /// # Panics
    /// If the position lies outside the band.
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        let s = self.slot(r, c).unwrap_or_else(|| panic!("({r}, {c}) outside the band"));
        self.data[s] = value;
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for c in 0..n {
            for r in c..(c + self.kd + 1).min(n) {
                let v = self.data[c * (self.kd + 1) + (r - c)];
                out[r * n + c] = v;
                out[c * n + r] = v;
            }
        }
        out
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        let (n, w) = (self.n, self.kd + 1);
        y.fill(0.0);
        for c in 0..n {
            let col = &self.data[c * w..(c + 1) * w];
            y[c] += col[0] * x[c];
            for d in 1..w.min(n - c) {
                let a = col[d];
                y[c + d] += a * x[c];
                y[c] += a * x[c + d];
            }
        }
    }

    /// `‖A x − λ x‖₂`.
    pub fn residual_norm(&self, x: &[f64], lambda: f64) -> f64 {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        let s: f64 = y.iter().zip(x).map(|(a, b)| (a - lambda * b) * (a - lambda * b)).sum();
        libm::sqrt(s)
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.n];
        let w = self.kd + 1;
        for c in 0..self.n {
            rows[c] += self.data[c * w].abs();
            for d in 1..w.min(self.n - c) {
                let a = self.data[c * w + d].abs();
                rows[c + d] += a;
                rows[c] += a;
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Index sets of the exactly decoupled diagonal blocks, each ascending,
    /// ordered by their smallest index.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let w = self.kd + 1;
        for c in 0..n {
            for d in 1..w.min(n - c) {
                if self.data[c * w + d] != 0.0 {
                    let (a, b) = (find(&mut parent, c), find(&mut parent, c + d));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut out: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            let root = find(&mut parent, i);
            if label[root] == usize::MAX {
                label[root] = out.len();
                out.push(Vec::new());
            }
            out[label[root]].push(i);
        }
        out
    }

    /// Principal submatrix on the ascending index set `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> SymBandMatrix {
        let m = idx.len();
        let mut kd = 0;
        let mut entries = Vec::new();
        for (a, &ga) in idx.iter().enumerate() {
            for (b, &gb) in idx.iter().enumerate().skip(a) {
                if gb - ga > self.kd {
                    break;
                }
                let v = self.get(gb, ga);
                if v != 0.0 || a == b {
                    kd = kd.max(b - a);
                    entries.push((b, a, v));
                }
            }
        }
        let mut sub = SymBandMatrix::zeros(m, kd);
        for (r, c, v) in entries {
            sub.set(r, c, v);
        }
        sub
    }

    /// Orthogonal similarity reduction to tridiagonal form.
    ///
    /// The bandwidth is lowered one diagonal at a time. For bandwidth `b`
    /// each outermost element `(i + b, i)` is annihilated by a rotation in
    /// the plane `(i + b − 1, i + b)`; the fill-in this creates one diagonal
    /// further out is chased down the band in steps of `b` rows.
    pub fn tridiagonalize(&self) -> Tridiagonal {
        let n = self.n;
        if self.kd <= 1 {
            let d = (0..n).map(|i| self.get(i, i)).collect();
            let e = (1..n).map(|i| self.get(i, i - 1)).collect();
            return Tridiagonal::new(d, e);
        }
        // Working copy with one extra diagonal for the bulge.
        let w = self.kd + 2;
        let mut a = vec![0.0; n * w];
        for c in 0..n {
            for d in 0..=self.kd.min(n - 1 - c) {
                a[c * w + d] = self.data[c * (self.kd + 1) + d];
            }
        }

        for b in (2..=self.kd).rev() {
            for i in 0..n.saturating_sub(b) {
                // Target element (q, c) with q = i + b, rotated against row q − 1.
                let mut q = i + b;
                let mut c = i;
                loop {
                    let p = q - 1;
                    let xp = a[c * w + (p - c)];
                    let xq = a[c * w + (q - c)];
                    if xq != 0.0 {
                        let r = libm::hypot(xp, xq);
                        let (cs, sn) = (xp / r, xq / r);
                        rotate(&mut a, w, n, b, p, c, cs, sn, r);
                    }
                    // Bulge now at (p + b + 1, p).
                    let next_q = p + b + 1;
                    if next_q >= n {
                        break;
                    }
                    if a[p * w + (b + 1)] == 0.0 {
                        break;
                    }
                    c = p;
                    q = next_q;
                }
            }
        }

        let d = (0..n).map(|i| a[i * w]).collect();
        let e = (0..n.saturating_sub(1)).map(|i| a[i * w + 1]).collect();
        Tridiagonal::new(d, e)
    }
}

/// Applies the rotation `(x_p, x_q) ← (cs x_p + sn x_q, −sn x_p + cs x_q)`
/// to rows and columns `p`, `q = p + 1` of the band working array, given
/// that it annihilates `(q, c)` and turns `(p, c)` into `r`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn rotate(a: &mut [f64], w: usize, n: usize, b: usize, p: usize, c: usize, cs: f64, sn: f64, r: f64) {
    let q = p + 1;
    a[c * w + (p - c)] = r;
    a[c * w + (q - c)] = 0.0;
    // Columns left of p (other than c): entries (p, k) and (q, k).
    let lo = q.saturating_sub(b + 1);
    for k in lo..p {
        if k == c {
            continue;
        }
        let base = k * w;
        let xp = a[base + (p - k)];
        let xq = a[base + (q - k)];
        a[base + (p - k)] = cs * xp + sn * xq;
        a[base + (q - k)] = -sn * xp + cs * xq;
    }
    // Rows below q: entries (k, p) and (k, q).
    let hi = (q + b).min(n - 1);
    for k in q + 1..=hi {
        let xp = a[p * w + (k - p)];
        let xq = a[q * w + (k - q)];
        a[p * w + (k - p)] = cs * xp + sn * xq;
        a[q * w + (k - q)] = -sn * xp + cs * xq;
    }
    // 2×2 diagonal block.
    let app = a[p * w];
    let aqq = a[q * w];
    let apq = a[p * w + 1];
    let (c2, s2, cssn) = (cs * cs, sn * sn, cs * sn);
    a[p * w] = c2 * app + 2.0 * cssn * apq + s2 * aqq;
    a[q * w] = s2 * app - 2.0 * cssn * apq + c2 * aqq;
    a[p * w + 1] = (c2 - s2) * apq + cssn * (aqq - app);
}
