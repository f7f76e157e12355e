//! Hamiltonian flow, variational equations and Lyapunov exponents.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::integrate::{Dop853, StepStats};
use crate::params::ModelParams;
use crate::phase::{eom_unchecked, flow_jacobian_unchecked, h_cl, h_cl_unchecked, PhasePoint};

/// Default integration tolerance (relative and absolute).
pub const DEFAULT_TOL: f64 = 1e-12;

pub type Matrix4 = [[f64; 4]; 4];

pub const IDENTITY4: Matrix4 =
    [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub energy: f64,
    pub stats: StepStats,
    /// Largest `|h_cl − ε|` over accepted steps and samples.
    pub max_energy_drift: f64,
}

impl Trajectory {
    pub fn last(&self) -> PhasePoint {
        *self.points.last().expect("trajectory has at least one sample")
    }
}

pub(crate) fn flow_field(params: ModelParams) -> impl FnMut(&[f64; 4]) -> [f64; 4] {
    move |y| eom_unchecked(&PhasePoint::from_array(*y), &params).to_array()
}

fn check_start(x0: &PhasePoint) -> Result<()> {
    let r2 = x0.atom_r2();
    if !(r2 < 4.0) {
        return Err(Error::OutsideBlochDisk(r2));
    }
    Ok(())
}

/// Integrates from `x0` over `[0, t_span]` (negative spans run backwards)
/// and samples the dense output at `times`, which must be monotone inside
/// the span. The final state is always appended.
pub fn integrate(
    params: &ModelParams,
    x0: PhasePoint,
    t_span: f64,
    tol: f64,
    times: &[f64],
) -> Result<Trajectory> {
    check_start(&x0)?;
    let energy = h_cl(&x0, params)?;
    let mut s = Dop853::new(flow_field(*params), x0.to_array(), 0.0, t_span, tol, tol);
    let mut out_t = Vec::with_capacity(times.len() + 1);
    let mut out_x = Vec::with_capacity(times.len() + 1);
    let mut drift = 0.0f64;
    let mut next = 0;
    loop {
        while next < times.len() && (times[next] - s.t()) * t_span.signum() <= 0.0 {
            let x = PhasePoint::from_array(s.dense(times[next]));
            drift = drift.max((h_cl_unchecked(&x, params) - energy).abs());
            out_t.push(times[next]);
            out_x.push(x);
            next += 1;
        }
        if s.is_finished() {
            break;
        }
        s.step()?;
        let x = PhasePoint::from_array(*s.y());
        drift = drift.max((h_cl_unchecked(&x, params) - energy).abs());
    }
    out_t.push(s.t());
    out_x.push(PhasePoint::from_array(*s.y()));
    Ok(Trajectory { times: out_t, points: out_x, energy, stats: s.stats, max_energy_drift: drift })
}

/// Final state and fundamental matrix of the linearised flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentState {
    pub point: PhasePoint,
    pub matrix: Matrix4,
}

pub(crate) fn tangent_field(params: ModelParams) -> impl FnMut(&[f64; 20]) -> [f64; 20] {
    move |y| {
        let x = PhasePoint::new(y[0], y[1], y[2], y[3]);
        let f = eom_unchecked(&x, &params).to_array();
        let df = flow_jacobian_unchecked(&x, &params);
        let mut out = [0.0; 20];
        out[..4].copy_from_slice(&f);
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = 0.0;
                for k in 0..4 {
                    acc += df[r][k] * y[4 + 4 * k + c];
                }
                out[4 + 4 * r + c] = acc;
            }
        }
        out
    }
}

pub(crate) fn pack_tangent(x: &PhasePoint, m: &Matrix4) -> [f64; 20] {
    let mut y = [0.0; 20];
    y[..4].copy_from_slice(&x.to_array());
    for r in 0..4 {
        y[4 + 4 * r..8 + 4 * r].copy_from_slice(&m[r]);
    }
    y
}

pub(crate) fn unpack_tangent(y: &[f64; 20]) -> TangentState {
    let mut m = [[0.0; 4]; 4];
    for r in 0..4 {
        m[r].copy_from_slice(&y[4 + 4 * r..8 + 4 * r]);
    }
    TangentState { point: PhasePoint::new(y[0], y[1], y[2], y[3]), matrix: m }
}

/// Co-integrates the flow and the variational equations `Ṁ = DF(x) M`
/// from `M(0) = I`.
pub fn integrate_tangent(params: &ModelParams, x0: PhasePoint, t_span: f64, tol: f64) -> Result<TangentState> {
    check_start(&x0)?;
    let mut s = Dop853::new(tangent_field(*params), pack_tangent(&x0, &IDENTITY4), 0.0, t_span, tol, tol);
    s.run(&[])?;
    Ok(unpack_tangent(s.y()))
}

/// `max |Mᵀ J M − J|`.
pub fn symplectic_defect(m: &Matrix4) -> f64 {
    use crate::phase::SYMPLECTIC as J;
    let mut worst = 0.0f64;
    for r in 0..4 {
        for c in 0..4 {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    acc += m[a][r] * J[a][b] * m[b][c];
                }
            }
            worst = worst.max((acc - J[r][c]).abs());
        }
    }
    worst
}

pub fn det4(m: &Matrix4) -> f64 {
    nalgebra::Matrix4::from_fn(|r, c| m[r][c]).determinant()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    /// Change of the running estimate over the final tenth of the run.
    pub drift: f64,
    /// `false` when that change exceeds 10% of the estimate (with an
    /// absolute floor of `1e−3` for near-zero exponents).
    pub converged: bool,
}

/// Benettin estimate of the largest Lyapunov exponent: a tangent vector is
/// evolved with the flow and renormalised every `renorm_dt`.
pub fn max_lyapunov(
    params: &ModelParams,
    x0: PhasePoint,
    t_total: f64,
    renorm_dt: f64,
    tol: f64,
) -> Result<LyapunovEstimate> {
    check_start(&x0)?;
    if !(t_total > 0.0 && renorm_dt > 0.0) {
        return Err(Error::InvalidArgument("t_total and renorm_dt must be positive".into()));
    }
    let p = *params;
    let field = move |y: &[f64; 8]| {
        let x = PhasePoint::new(y[0], y[1], y[2], y[3]);
        let f = eom_unchecked(&x, &p).to_array();
        let df = flow_jacobian_unchecked(&x, &p);
        let mut out = [0.0; 8];
        out[..4].copy_from_slice(&f);
        for r in 0..4 {
            out[4 + r] = (0..4).map(|k| df[r][k] * y[4 + k]).sum();
        }
        out
    };
    let mut y = [x0.q, x0.p, x0.atom_q, x0.atom_p, 0.5, 0.5, 0.5, 0.5];
    let mut t = 0.0;
    let mut log_sum = 0.0;
    let mut at_ninety = None;
    while t < t_total {
        let dt = renorm_dt.min(t_total - t);
        let mut s = Dop853::new(field, y, 0.0, dt, tol, tol);
        s.run(&[])?;
        y = *s.y();
        let norm = y[4..].iter().map(|v| v * v).sum::<f64>().sqrt();
        log_sum += norm.ln();
        for v in &mut y[4..] {
            *v /= norm;
        }
        t += dt;
        if at_ninety.is_none() && t >= 0.9 * t_total {
            at_ninety = Some(log_sum / t);
        }
    }
    let lambda = log_sum / t;
    let drift = (lambda - at_ninety.unwrap_or(lambda)).abs();
    Ok(LyapunovEstimate { lambda, drift, converged: drift <= (0.1 * lambda.abs()).max(1e-3) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn uncoupled_tangent_flow_is_a_rotation() {
        let p = ModelParams::new(1.0, 1.7, 0.0, 1.0).unwrap();
        let t = 0.9;
        let m = integrate_tangent(&p, PhasePoint::new(0.3, 0.1, 0.4, -0.2), t, 1e-12).unwrap().matrix;
        let (c1, s1) = (t.cos(), t.sin());
        let (c2, s2) = ((1.7 * t).cos(), (1.7 * t).sin());
        let want = [[c1, s1, 0.0, 0.0], [-s1, c1, 0.0, 0.0], [0.0, 0.0, c2, s2], [0.0, 0.0, -s2, c2]];
        for r in 0..4 {
            for c in 0..4 {
                assert!((m[r][c] - want[r][c]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_span_gives_identity() {
        let p = ModelParams::resonant(1.0, 1.0).unwrap();
        let s = integrate_tangent(&p, PhasePoint::new(0.3, 0.1, 0.4, -0.2), 0.0, 1e-12).unwrap();
        assert_eq!(s.matrix, IDENTITY4);
    }

    #[test]
    fn harmonic_return() {
        let p = ModelParams::resonant(0.0, 1.0).unwrap();
        let x0 = PhasePoint::new(1.0, 0.0, 0.0, 0.0);
        let tr = integrate(&p, x0, 2.0 * PI, 1e-12, &[]).unwrap();
        assert!(tr.last().distance(&x0) < 1e-9);
    }
}
