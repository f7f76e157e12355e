//! Adaptive Gauss-Kronrod (7, 15) quadrature.

use num_traits::Float;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    /// `false` if some subinterval hit the depth limit before meeting its
    /// share of the tolerance.
    pub converged: bool,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` to within `max(abs_tol, rel_tol |∫f|)`, by recursive bisection.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    let (whole, err) = gk15(&mut f, a, b);
    let tol = abs_tol.max(rel_tol * whole.abs());
    let mut out = QuadResult { value: 0.0, error: 0.0, converged: true };
    recurse(&mut f, a, b, whole, err, tol, (b - a).abs(), 0, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    value: f64,
    err: f64,
    tol: f64,
    span: f64,
    depth: u32,
    out: &mut QuadResult,
) {
    let share = tol * ((b - a).abs() / span).max(1e-3);
    if err <= share || depth >= MAX_DEPTH || !err.is_finite() {
        if err > share {
            out.converged = false;
        }
        out.value += value;
        out.error += err;
        return;
    }
    let m = 0.5 * (a + b);
    let (l, le) = gk15(f, a, m);
    let (r, re) = gk15(f, m, b);
    recurse(f, a, m, l, le, tol, span, depth + 1, out);
    recurse(f, m, b, r, re, tol, span, depth + 1, out);
}

/// `∫_a^b f` for integrands with square-root behaviour at both ends:
/// `y = a + u²` on the left half and `y = b − u²` on the right half make the
/// transformed integrands smooth.
pub fn integrate_sqrt_endpoints(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> QuadResult {
    if !(b > a) {
        return QuadResult { value: 0.0, error: 0.0, converged: true };
    }
    let m = 0.5 * (a + b);
    let u = (m - a).sqrt();
    let left = integrate(|t| 2.0 * t * f(a + t * t), 0.0, u, 0.5 * abs_tol, rel_tol);
    let right = integrate(|t| 2.0 * t * f(b - t * t), 0.0, u, 0.5 * abs_tol, rel_tol);
    QuadResult {
        value: left.value + right.value,
        error: left.error + right.error,
        converged: left.converged && right.converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory() {
        let r = integrate(|x| x * x * x, 0.0, 2.0, 1e-14, 1e-14);
        assert!((r.value - 4.0).abs() < 1e-13);
        let r = integrate(|x| (10.0 * x).sin(), 0.0, 3.0, 1e-13, 1e-13);
        assert!((r.value - (1.0 - 30.0f64.cos()) / 10.0).abs() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn square_root_endpoints() {
        // ∫_0^1 √(x(1−x)) dx = π/8
        let r = integrate_sqrt_endpoints(|x| (x * (1.0 - x)).max(0.0).sqrt(), 0.0, 1.0, 1e-13, 1e-13);
        assert!((r.value - core::f64::consts::PI / 8.0).abs() < 1e-12);
    }
}
