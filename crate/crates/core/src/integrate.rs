//! Adaptive Dormand-Prince 8(5,3) integrator with 7th-order dense output.
//!
//! Step-size control and the combined 5th/3rd-order error norm follow the
//! usual DOP853 conventions (safety 0.9, step factors clamped to
//! `[0.2, 10]`, exponent `−1/8`).

use num_traits::Float;

use crate::dop853_tableau::{A, B, D, E3, E5};
use crate::error::{Error, Result};

const STAGES: usize = 12;
const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
const ERROR_EXPONENT: f64 = -1.0 / 8.0;

/// Counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Stepper for the autonomous system `y' = f(y)` on `[t0, t_bound]`
/// (`t_bound < t0` integrates backwards).
///
/// `f` may return non-finite values to signal that `y` left the domain; the
/// step is then rejected and retried with a smaller size.
pub struct Dop853<F, const N: usize>
where
    F: FnMut(&[f64; N]) -> [f64; N],
{
    f: F,
    rtol: f64,
    atol: f64,
    t: f64,
    y: [f64; N],
    fy: [f64; N],
    t_bound: f64,
    dir: f64,
    h_abs: f64,
    t_old: f64,
    y_old: [f64; N],
    f_old: [f64; N],
    k: [[f64; N]; 16],
    dense: Option<[[f64; N]; 7]>,
    pub stats: StepStats,
}

impl<F, const N: usize> Dop853<F, N>
where
    F: FnMut(&[f64; N]) -> [f64; N],
{
    pub fn new(mut f: F, y0: [f64; N], t0: f64, t_bound: f64, rtol: f64, atol: f64) -> Self {
        let fy = f(&y0);
        let dir = if t_bound >= t0 { 1.0 } else { -1.0 };
        let mut s = Self {
            f,
            rtol,
            atol,
            t: t0,
            y: y0,
            fy,
            t_bound,
            dir,
            h_abs: 0.0,
            t_old: t0,
            y_old: y0,
            f_old: fy,
            k: [[0.0; N]; 16],
            dense: None,
            stats: StepStats { evaluations: 1, ..Default::default() },
        };
        s.h_abs = s.initial_step();
        s
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    pub fn is_finished(&self) -> bool {
        self.t == self.t_bound
    }

    fn scale(&self, a: &[f64; N], b: &[f64; N]) -> [f64; N] {
        core::array::from_fn(|i| self.atol + self.rtol * a[i].abs().max(b[i].abs()))
    }

    fn rms(v: &[f64; N], scale: &[f64; N]) -> f64 {
        let s: f64 = v.iter().zip(scale).map(|(x, s)| (x / s) * (x / s)).sum();
        (s / N as f64).sqrt()
    }

    fn initial_step(&mut self) -> f64 {
        let span = (self.t_bound - self.t).abs();
        if span == 0.0 {
            return 0.0;
        }
        let scale = self.scale(&self.y, &self.y);
        let d0 = Self::rms(&self.y, &scale);
        let d1 = Self::rms(&self.fy, &scale);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1: [f64; N] = core::array::from_fn(|i| self.y[i] + h0 * self.dir * self.fy[i]);
        let f1 = (self.f)(&y1);
        self.stats.evaluations += 1;
        let diff: [f64; N] = core::array::from_fn(|i| f1[i] - self.fy[i]);
        let d2 = Self::rms(&diff, &scale) / h0;
        let h1 = if !d2.is_finite() {
            h0 * 1e-3
        } else if d1 <= 1e-15 && d2 <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 8.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Attempts one RK step of signed size `h`; fills `k[0..13]`.
    fn rk_step(&mut self, h: f64) -> [f64; N] {
        self.k[0] = self.fy;
        for s in 1..STAGES {
            let yi: [f64; N] = core::array::from_fn(|i| {
                let mut acc = 0.0;
                for (r, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[r][i];
                }
                self.y[i] + h * acc
            });
            self.k[s] = (self.f)(&yi);
        }
        let y_new: [f64; N] = core::array::from_fn(|i| {
            let mut acc = 0.0;
            for (r, b) in B.iter().enumerate() {
                acc += b * self.k[r][i];
            }
            self.y[i] + h * acc
        });
        self.k[STAGES] = (self.f)(&y_new);
        self.stats.evaluations += STAGES;
        y_new
    }

    fn error_norm(&self, h: f64, scale: &[f64; N]) -> f64 {
        let (mut e5, mut e3) = (0.0, 0.0);
        for i in 0..N {
            let (mut a5, mut a3) = (0.0, 0.0);
            for r in 0..=STAGES {
                a5 += E5[r] * self.k[r][i];
                a3 += E3[r] * self.k[r][i];
            }
            e5 += (a5 / scale[i]) * (a5 / scale[i]);
            e3 += (a3 / scale[i]) * (a3 / scale[i]);
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        let denom = e5 + 0.01 * e3;
        h.abs() * e5 / (denom * N as f64).sqrt()
    }

    /// Advances by one accepted step.
    pub fn step(&mut self) -> Result<()> {
        if self.is_finished() {
            return Ok(());
        }
        let next = if self.dir > 0.0 { self.t.next_up() } else { self.t.next_down() };
        let min_step = 10.0 * (next - self.t).abs();
        let mut rejected = false;
        loop {
            if self.h_abs < min_step {
                return Err(Error::StepSizeCollapse { t: self.t, h: self.h_abs });
            }
            let mut t_new = self.t + self.dir * self.h_abs;
            if self.dir * (t_new - self.t_bound) > 0.0 {
                t_new = self.t_bound;
            }
            let h = t_new - self.t;
            let h_abs = h.abs();
            let y_new = self.rk_step(h);
            let scale = self.scale(&self.y, &y_new);
            let mut err = self.error_norm(h, &scale);
            if !err.is_finite() || !y_new.iter().all(|v| v.is_finite()) {
                err = f64::INFINITY;
            }
            if err < 1.0 {
                let mut factor =
                    if err == 0.0 { MAX_FACTOR } else { MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT)) };
                if rejected {
                    factor = factor.min(1.0);
                }
                self.t_old = self.t;
                self.y_old = self.y;
                self.f_old = self.fy;
                self.t = t_new;
                self.y = y_new;
                self.fy = self.k[STAGES];
                self.h_abs = h_abs * factor;
                self.dense = None;
                self.stats.accepted += 1;
                return Ok(());
            }
            let factor = if err.is_finite() { MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT)) } else { 0.25 };
            self.h_abs = h_abs * factor;
            rejected = true;
            self.stats.rejected += 1;
        }
    }

    fn build_dense(&mut self) -> [[f64; N]; 7] {
        let h = self.t - self.t_old;
        for s in (STAGES + 1)..16 {
            let yi: [f64; N] = core::array::from_fn(|i| {
                let mut acc = 0.0;
                for (r, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[r][i];
                }
                self.y_old[i] + h * acc
            });
            self.k[s] = (self.f)(&yi);
        }
        self.stats.evaluations += 3;
        let mut out = [[0.0; N]; 7];
        for i in 0..N {
            let dy = self.y[i] - self.y_old[i];
            out[0][i] = dy;
            out[1][i] = h * self.f_old[i] - dy;
            out[2][i] = 2.0 * dy - h * (self.fy[i] + self.f_old[i]);
            for (row, d) in D.iter().enumerate() {
                let mut acc = 0.0;
                for r in 0..16 {
                    acc += d[r] * self.k[r][i];
                }
                out[3 + row][i] = h * acc;
            }
        }
        out
    }

    /// Interpolated state at `t` within the last accepted step.
    pub fn dense(&mut self, t: f64) -> [f64; N] {
        if t == self.t {
            return self.y;
        }
        if t == self.t_old {
            return self.y_old;
        }
        if self.dense.is_none() {
            self.dense = Some(self.build_dense());
        }
        let f = self.dense.as_ref().unwrap();
        let x = (t - self.t_old) / (self.t - self.t_old);
        let mut y = [0.0; N];
        for (i, row) in f.iter().rev().enumerate() {
            for c in 0..N {
                y[c] += row[c];
                y[c] *= if i % 2 == 0 { x } else { 1.0 - x };
            }
        }
        for c in 0..N {
            y[c] += self.y_old[c];
        }
        y
    }

    /// Integrates to `t_bound`, returning the dense-output states at
    /// `times` (which must lie in the span and be monotone in the direction
    /// of integration).
    pub fn run(&mut self, times: &[f64]) -> Result<alloc::vec::Vec<[f64; N]>> {
        let mut out = alloc::vec::Vec::with_capacity(times.len());
        let mut next = 0;
        loop {
            while next < times.len() && self.dir * (times[next] - self.t) <= 0.0 {
                out.push(self.dense(times[next]));
                next += 1;
            }
            if self.is_finished() {
                break;
            }
            self.step()?;
        }
        while next < times.len() {
            out.push(self.y);
            next += 1;
        }
        Ok(out)
    }
}
