use alloc::vec::Vec;

/// Symmetric tridiagonal matrix: diagonal `d` and sub-diagonal `e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
    pivmin: f64,
    lower: f64,
    upper: f64,
}

impl Tridiagonal {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len(), d.len().saturating_sub(1));
        let max_e2 = e.iter().map(|x| x * x).fold(0.0, f64::max);
        let pivmin = f64::MIN_POSITIVE * max_e2.max(1.0);
        // Gershgorin bounds.
        let (mut lower, mut upper) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..d.len() {
            let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + e.get(i).map_or(0.0, |x| x.abs());
            lower = lower.min(d[i] - r);
            upper = upper.max(d[i] + r);
        }
        let pad = 4.0 * f64::EPSILON * lower.abs().max(upper.abs()) + pivmin;
        Self { d, e, pivmin, lower: lower - pad, upper: upper + pad }
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    pub fn off_diagonal(&self) -> &[f64] {
        &self.e
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        if self.d.is_empty() {
            return 0;
        }
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q.abs() < self.pivmin {
            q = -self.pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.d.len() {
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q;
            if q.abs() < self.pivmin {
                q = -self.pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalues with ascending indices `il..iu`, by bisection.
    pub fn eigenvalues(&self, il: usize, iu: usize) -> Vec<f64> {
        let n = self.dim();
        let iu = iu.min(n);
        let mut out = Vec::with_capacity(iu.saturating_sub(il));
        let mut floor = self.lower;
        for k in il..iu {
            let (mut lo, mut hi) = (floor, self.upper);
            // Invariant: count_below(lo) <= k < count_below(hi).
            loop {
                let mid = 0.5 * (lo + hi);
                let tol = 2.0 * f64::EPSILON * (lo.abs().max(hi.abs())) + self.pivmin;
                if hi - lo <= tol || mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let lam = 0.5 * (lo + hi);
            out.push(lam);
            floor = lo;
        }
        out
    }
}
