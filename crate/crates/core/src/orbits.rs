//! Periodic-orbit hunting: Husimi-moment peaks are lifted onto the energy
//! shell, approximate returns are detected along the flow, and candidates
//! are refined by Newton iteration with the monodromy matrix.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Complex, Matrix4 as NaMatrix4, SMatrix, SVector};
use num_traits::Float;

use crate::coherent::HusimiDensity;
use crate::dynamics::{integrate, integrate_tangent, symplectic_defect, Matrix4};
use crate::error::{Error, Result};
use crate::metrics::{shell_fiber, HusimiGrid, TubularState};
use crate::params::ModelParams;
use crate::phase::{eom, gradient, h_cl, PhasePoint};

/// Integration tolerance used throughout orbit refinement.
pub const ORBIT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitCandidate {
    pub seed: PhasePoint,
    pub t_approx: f64,
    /// `‖x(T_approx) − x(0)‖`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub x0: PhasePoint,
    pub period: f64,
    pub eps: f64,
    pub monodromy: Matrix4,
    pub lyapunov: f64,
    /// `‖Φ_T(x₀) − x₀‖` at the converged point.
    pub residual: f64,
    pub iterations: usize,
    pub label: String,
}

/// Knobs of the hunting pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuntSettings {
    pub t_max: f64,
    pub candidate_tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub peak_threshold: f64,
    pub peak_radius: usize,
    pub max_peaks: usize,
    /// θ nodes scanned per fibre when lifting a peak.
    pub lift_nodes: usize,
    /// Return candidates tried per seed.
    pub max_candidates: usize,
}

impl Default for HuntSettings {
    fn default() -> Self {
        Self {
            t_max: 40.0,
            candidate_tol: 0.3,
            newton_tol: 1e-10,
            max_iter: 50,
            peak_threshold: 0.3,
            peak_radius: 2,
            max_peaks: 8,
            lift_nodes: 720,
            max_candidates: 8,
        }
    }
}

/// Local maxima above `threshold_frac × max` with non-maximum suppression
/// within `radius` cells (Chebyshev distance), highest first. Returns
/// `(Q, P, value)`.
pub fn find_husimi_peaks(grid: &HusimiGrid, threshold_frac: f64, radius: usize) -> Vec<(f64, f64, f64)> {
    let n = grid.spec.cells;
    let top = grid.max();
    if !(top > 0.0) {
        return Vec::new();
    }
    let mut cand: Vec<(usize, usize, f64)> = Vec::new();
    for iq in 0..n {
        for ip in 0..n {
            let Some(v) = grid.get(iq, ip) else { continue };
            if v < threshold_frac * top {
                continue;
            }
            let is_max = neighbours(iq, ip, 1, n).all(|(a, b)| grid.get(a, b).is_none_or(|w| w <= v));
            if is_max {
                cand.push((iq, ip, v));
            }
        }
    }
    cand.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for c in cand {
        if kept.iter().all(|k| k.0.abs_diff(c.0).max(k.1.abs_diff(c.1)) > radius) {
            kept.push(c);
        }
    }
    kept.into_iter()
        .map(|(iq, ip, v)| {
            let (q, p) = grid.spec.center(iq, ip);
            (q, p, v)
        })
        .collect()
}

fn neighbours(iq: usize, ip: usize, r: usize, n: usize) -> impl Iterator<Item = (usize, usize)> {
    let qs = iq.saturating_sub(r)..(iq + r + 1).min(n);
    qs.flat_map(move |a| (ip.saturating_sub(r)..(ip + r + 1).min(n)).map(move |b| (a, b)))
        .filter(move |&(a, b)| (a, b) != (iq, ip))
}

/// Points of the shell above `(Q, P)` maximizing `density`, one per
/// `q`-branch. The fibre is scanned at `nodes` angles and the best node is
/// polished by golden-section search.
pub fn lift_to_shell(
    atom: (f64, f64),
    eps: f64,
    density: &impl HusimiDensity,
    params: &ModelParams,
    nodes: usize,
) -> Result<Vec<PhasePoint>> {
    let (aq, ap) = atom;
    let (q0, radius) = shell_fiber(eps, aq, ap, params).ok_or(Error::NoAdmissibleMomentum(aq, ap))?;
    let at = |theta: f64| PhasePoint::new(q0 + radius * theta.cos(), radius * theta.sin(), aq, ap);
    let value = |theta: f64| density.husimi(&at(theta));
    let nodes = nodes.max(16);
    let step = 2.0 * PI / nodes as f64;
    // cos θ ≥ 0 is the upper q-branch, cos θ < 0 the lower one.
    let mut best = [(f64::NEG_INFINITY, 0.0); 2];
    for i in 0..nodes {
        let theta = -PI + i as f64 * step;
        let branch = usize::from(theta.cos() < 0.0);
        let v = value(theta);
        if v > best[branch].0 {
            best[branch] = (v, theta);
        }
    }
    Ok(best
        .iter()
        .filter(|b| b.0.is_finite())
        .map(|&(_, theta)| at(golden_max(&value, theta - step, theta + step, 1e-10)))
        .collect())
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Return-time threshold below which distance minima are ignored.
pub fn min_return_time(params: &ModelParams) -> f64 {
    0.5 * 2.0 * PI / params.omega
}

/// First local minimum of `‖x(t) − x₀‖` after `min_return_time` with
/// residual below `candidate_tol`, up to `t_max`.
pub fn detect_return(
    params: &ModelParams,
    x0: PhasePoint,
    t_max: f64,
    candidate_tol: f64,
) -> Result<Option<OrbitCandidate>> {
    Ok(detect_returns(params, x0, t_max, candidate_tol, 1)?.into_iter().next())
}

/// Up to `limit` distance minima below `candidate_tol`, in time order.
pub fn detect_returns(
    params: &ModelParams,
    x0: PhasePoint,
    t_max: f64,
    candidate_tol: f64,
    limit: usize,
) -> Result<Vec<OrbitCandidate>> {
    let dt = 0.02;
    let count = (t_max / dt).floor() as usize;
    let times: Vec<f64> = (0..=count).map(|i| i as f64 * dt).collect();
    let traj = integrate(params, x0, t_max, ORBIT_TOL, &times)?;
    let d: Vec<f64> = traj.points[..times.len()].iter().map(|x| x.distance(&x0)).collect();
    let t_min = min_return_time(params);
    let mut out = Vec::new();
    for i in 1..d.len() - 1 {
        if out.len() >= limit {
            break;
        }
        if times[i] < t_min || !(d[i] <= d[i - 1] && d[i] <= d[i + 1]) || d[i] > 3.0 * candidate_tol {
            continue;
        }
        let (t, residual) = polish_return(params, x0, traj.points[i], times[i])?;
        if residual < candidate_tol && t >= t_min {
            out.push(OrbitCandidate { seed: x0, t_approx: t, residual });
        }
    }
    Ok(out)
}

/// Newton iteration on `g(t) = (x(t) − x₀)·ẋ(t)`, the derivative of the
/// squared distance, started from the sampled point `xs = x(ts)`.
fn polish_return(params: &ModelParams, x0: PhasePoint, xs: PhasePoint, ts: f64) -> Result<(f64, f64)> {
    let mut x = xs;
    let mut t = ts;
    for _ in 0..20 {
        let f = eom(&x, params)?;
        let jf = crate::phase::flow_jacobian_unchecked(&x, params);
        let dx = x - x0;
        let jfv = mat_vec(&jf, &f.to_array());
        let g = dx.dot(&f);
        let dg = f.dot(&f) + dx.dot(&PhasePoint::from_array(jfv));
        if !(dg > 0.0) {
            break;
        }
        let step = (-g / dg).clamp(-0.05, 0.05);
        x = integrate(params, x, step, ORBIT_TOL, &[])?.last();
        t += step;
        if step.abs() < 1e-14 * t.max(1.0) {
            break;
        }
    }
    Ok((t, x.distance(&x0)))
}

fn mat_vec(m: &Matrix4, v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// Newton refinement of `(x₀, T)` on the shell `eps`.
///
/// Each step solves, in the least-squares sense,
/// `[M − I, ẋ(T); ẋ(0)ᵀ, 0; ∇hᵀ, 0] (δx, δT) = (x₀ − Φ_T(x₀), 0, ε − h(x₀))`.
/// Rank-deficient systems (families of orbits, bifurcations) use the
/// minimum-norm step; if the iteration then fails the error is
/// [`Error::NewtonSingular`].
pub fn monodromy_refine(
    params: &ModelParams,
    cand: &OrbitCandidate,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PeriodicOrbit> {
    let (x0, period, iterations) = newton(params, cand.seed, cand.t_approx, eps, tol, max_iter)?;
    let (mut x0, mut period, mut iterations) = (x0, period, iterations);
    // Return detection can lock onto a repetition.
    let half = integrate(params, x0, 0.5 * period, ORBIT_TOL, &[])?.last();
    if half.distance(&x0) < 1e-6 && 0.5 * period >= min_return_time(params) * 0.5 {
        if let Ok(r) = newton(params, x0, 0.5 * period, eps, tol, max_iter) {
            (x0, period) = (r.0, r.1);
            iterations += r.2;
        }
    }
    finish_orbit(params, x0, period, eps, iterations)
}

fn finish_orbit(params: &ModelParams, x0: PhasePoint, period: f64, eps: f64, iterations: usize) -> Result<PeriodicOrbit> {
    let ts = integrate_tangent(params, x0, period, ORBIT_TOL)?;
    let orbit = PeriodicOrbit {
        x0,
        period,
        eps,
        monodromy: ts.matrix,
        lyapunov: 0.0,
        residual: ts.point.distance(&x0),
        iterations,
        label: String::new(),
    };
    let lyapunov = orbit_lyapunov(&orbit);
    Ok(PeriodicOrbit { lyapunov, ..orbit })
}

fn newton(
    params: &ModelParams,
    mut x: PhasePoint,
    mut t: f64,
    eps: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(PhasePoint, f64, usize)> {
    let mut prev = f64::INFINITY;
    let mut growth = 0;
    let mut rank_deficient = None;
    for it in 1..=max_iter {
        let ts = integrate_tangent(params, x, t, ORBIT_TOL).map_err(|_| Error::NewtonDiverged {
            iteration: it,
            residual: prev,
        })?;
        let r = ts.point - x;
        let energy_err = eps - h_cl(&x, params)?;
        let residual = r.norm();
        if residual < tol && energy_err.abs() < 1e-10 {
            return Ok((x, t, it));
        }
        if residual > prev {
            growth += 1;
            if growth >= 2 {
                return Err(match rank_deficient {
                    Some(sigma_min) => Error::NewtonSingular { iteration: it, sigma_min },
                    None => Error::NewtonDiverged { iteration: it, residual },
                });
            }
        } else {
            growth = 0;
        }
        prev = residual;
        let f0 = eom(&x, params)?.to_array();
        let ft = eom(&ts.point, params)?.to_array();
        let grad = gradient(&x, params)?;
        let mut a = SMatrix::<f64, 6, 5>::zeros();
        for i in 0..4 {
            for k in 0..4 {
                a[(i, k)] = ts.matrix[i][k] - if i == k { 1.0 } else { 0.0 };
            }
            a[(i, 4)] = ft[i];
            a[(4, i)] = f0[i];
            a[(5, i)] = grad[i];
        }
        let rhs = SVector::<f64, 6>::from_column_slice(&[-r.q, -r.p, -r.atom_q, -r.atom_p, 0.0, energy_err]);
        let svd = a.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        let cut = 1e-11 * smax;
        if smin < cut {
            rank_deficient = Some(smin);
        }
        let step = svd.solve(&rhs, cut).map_err(|_| Error::NewtonSingular { iteration: it, sigma_min: smin })?;
        let dx = PhasePoint::new(step[0], step[1], step[2], step[3]);
        x = x + dx;
        t += step[4];
        if !x.is_in_bloch_disk() || !(t > 0.0) || !t.is_finite() {
            return Err(Error::NewtonDiverged { iteration: it, residual });
        }
    }
    let residual = integrate(params, x, t, ORBIT_TOL, &[])?.last().distance(&x);
    if residual < tol {
        return Ok((x, t, max_iter));
    }
    Err(match rank_deficient {
        Some(sigma_min) => Error::NewtonSingular { iteration: max_iter, sigma_min },
        None => Error::NewtonMaxIterations { iterations: max_iter, residual },
    })
}

/// Eigenvalues of a monodromy matrix.
pub fn monodromy_eigenvalues(m: &Matrix4) -> [Complex<f64>; 4] {
    let na = NaMatrix4::from_fn(|i, k| m[i][k]);
    let e = na.complex_eigenvalues();
    [e[0], e[1], e[2], e[3]]
}

/// `λ = ln(max |eig M|)/T`, clamped at zero.
pub fn orbit_lyapunov(orbit: &PeriodicOrbit) -> f64 {
    lyapunov_from(&orbit.monodromy, orbit.period)
}

pub fn lyapunov_from(m: &Matrix4, period: f64) -> f64 {
    let top = monodromy_eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max);
    (top.ln() / period).max(0.0)
}

/// Largest `min_ν |μν − 1|` over eigenvalues `μ`: zero for a spectrum made
/// of reciprocal pairs.
pub fn reciprocal_pair_defect(m: &Matrix4) -> f64 {
    let e = monodromy_eigenvalues(m);
    (0..4)
        .map(|i| (0..4).filter(|&k| k != i).map(|k| (e[i] * e[k] - 1.0).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Distances to 1 of the two eigenvalues closest to 1.
pub fn unit_pair_defect(m: &Matrix4) -> f64 {
    let mut d: Vec<f64> = monodromy_eigenvalues(m).iter().map(|z| (z - 1.0).norm()).collect();
    d.sort_by(f64::total_cmp);
    d[1]
}

/// Type invariants of a converged orbit that failed, if any.
pub fn orbit_violations(orbit: &PeriodicOrbit) -> Vec<String> {
    let mut v = Vec::new();
    if !(orbit.residual < 1e-8) {
        v.push(alloc::format!("closure residual {:e}", orbit.residual));
    }
    let s = symplectic_defect(&orbit.monodromy);
    if !(s < 1e-6) {
        v.push(alloc::format!("symplectic defect {s:e}"));
    }
    let u = unit_pair_defect(&orbit.monodromy);
    if !(u < 1e-4) {
        v.push(alloc::format!("unit eigenvalue pair off by {u:e}"));
    }
    if !(orbit.lyapunov >= 0.0) {
        v.push(alloc::format!("negative Lyapunov exponent {}", orbit.lyapunov));
    }
    v
}

impl PeriodicOrbit {
    pub fn t_lambda(&self) -> f64 {
        self.period * self.lyapunov
    }

    /// `n` points uniformly spaced in time over one period, starting at `x₀`.
    pub fn sample(&self, params: &ModelParams, n: usize) -> Result<Vec<PhasePoint>> {
        let times: Vec<f64> = (0..n).map(|i| self.period * i as f64 / n as f64).collect();
        let traj = integrate(params, self.x0, self.period, ORBIT_TOL, &times)?;
        Ok(traj.points[..n].to_vec())
    }

    /// Tubular state built from `n_time` points along the orbit.
    pub fn tube(&self, params: &ModelParams, n_time: usize) -> Result<TubularState> {
        Ok(TubularState::new(self.sample(params, n_time.max(16))?, params.j()))
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// Image under `S: (q, Q) → (−q, −Q)`.
///
/// `S` reverses time (`SᵀJS = −J` and `h_cl` is invariant), so the image is
/// the same closed curve run backwards: same period and energy, monodromy
/// `S M⁻¹ S` at the mirrored start. `M⁻¹` is taken as the symplectic inverse
/// `−J Mᵀ J`, which keeps the spectrum of `M` and makes mirroring an exact
/// involution.
pub fn mirror_orbit(orbit: &PeriodicOrbit) -> PeriodicOrbit {
    use crate::phase::SYMPLECTIC as J;
    let s = [-1.0, 1.0, -1.0, 1.0];
    let m = &orbit.monodromy;
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, v) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..4 {
                for b in 0..4 {
                    acc -= J[i][a] * m[b][a] * J[b][k];
                }
            }
            *v = s[i] * acc * s[k];
        }
    }
    PeriodicOrbit { x0: orbit.x0.mirror(), monodromy: out, ..orbit.clone() }
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[PhasePoint], b: &[PhasePoint]) -> f64 {
    let one = |x: &[PhasePoint], y: &[PhasePoint]| {
        x.iter()
            .map(|p| y.iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Hausdorff distance between the two orbits as continuous curves. Each
/// orbit is sampled at `n` times and interpolated by cubic Hermite segments
/// built from the flow velocity, so the result is accurate well below the
/// sample spacing.
pub fn orbit_distance(params: &ModelParams, a: &PeriodicOrbit, b: &PeriodicOrbit, n: usize) -> Result<f64> {
    let ca = HermiteCurve::new(params, a, n)?;
    let cb = HermiteCurve::new(params, b, n)?;
    let one = |x: &HermiteCurve, y: &HermiteCurve| x.points.iter().map(|p| y.distance(p)).fold(0.0, f64::max);
    Ok(one(&ca, &cb).max(one(&cb, &ca)))
}

struct HermiteCurve {
    points: Vec<PhasePoint>,
    /// Velocities scaled by the sample spacing in time.
    tangents: Vec<PhasePoint>,
}

impl HermiteCurve {
    fn new(params: &ModelParams, orbit: &PeriodicOrbit, n: usize) -> Result<Self> {
        let points = orbit.sample(params, n)?;
        let dt = orbit.period / n as f64;
        let tangents = points.iter().map(|x| eom(x, params).map(|v| dt * v)).collect::<Result<Vec<_>>>()?;
        Ok(Self { points, tangents })
    }

    fn segment(&self, i: usize, s: f64) -> PhasePoint {
        let k = (i + 1) % self.points.len();
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.points[i]
            + (s3 - 2.0 * s2 + s) * self.tangents[i]
            + (-2.0 * s3 + 3.0 * s2) * self.points[k]
            + (s3 - s2) * self.tangents[k]
    }

    /// Distance from `p` to the curve: nearest sample, then a golden-section
    /// search on the two adjacent segments.
    fn distance(&self, p: &PhasePoint) -> f64 {
        let n = self.points.len();
        let near = (0..n)
            .min_by(|&x, &y| p.distance(&self.points[x]).total_cmp(&p.distance(&self.points[y])))
            .unwrap_or(0);
        let mut best = p.distance(&self.points[near]);
        for i in [(near + n - 1) % n, near] {
            let f = |s: f64| p.distance(&self.segment(i, s));
            let (mut lo, mut hi) = (0.0, 1.0);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..60 {
                let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
                if f(m1) < f(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            best = best.min(f(0.5 * (lo + hi)));
        }
        best
    }
}

/// Whether two orbits are the same: periods and energies agree and the
/// point sets are within `1e−4`.
pub fn same_orbit(params: &ModelParams, a: &PeriodicOrbit, b: &PeriodicOrbit) -> Result<bool> {
    if (a.eps - b.eps).abs() > 1e-6 || (a.period - b.period).abs() > 1e-4 {
        return Ok(false);
    }
    Ok(orbit_distance(params, a, b, 400)? < 1e-4)
}

/// Keeps the first of each set of identical orbits.
pub fn dedupe_orbits(params: &ModelParams, orbits: Vec<PeriodicOrbit>) -> Result<Vec<PeriodicOrbit>> {
    let mut out: Vec<PeriodicOrbit> = Vec::new();
    for o in orbits {
        let mut dup = false;
        for k in &out {
            if same_orbit(params, k, &o)? {
                dup = true;
                break;
            }
        }
        if !dup {
            out.push(o);
        }
    }
    Ok(out)
}

/// What happened to one seed.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedOutcome {
    Converged(PeriodicOrbit),
    NoReturn,
    Failed(Error),
}

/// Seed points for a density on the shell: peaks of `grid` lifted onto the
/// shell, highest peak first, at most two per peak.
pub fn hunt_seeds(
    grid: &HusimiGrid,
    density: &impl HusimiDensity,
    params: &ModelParams,
    settings: &HuntSettings,
) -> Vec<PhasePoint> {
    let mut seeds = Vec::new();
    for (q, p, _) in find_husimi_peaks(grid, settings.peak_threshold, settings.peak_radius)
        .into_iter()
        .take(settings.max_peaks)
    {
        if let Ok(pts) = lift_to_shell((q, p), grid.eps, density, params, settings.lift_nodes) {
            seeds.extend(pts);
        }
    }
    seeds
}

/// Return detection and refinement of one seed: every return candidate up
/// to `t_max` is tried in time order until one converges to a valid orbit.
pub fn process_seed(params: &ModelParams, seed: PhasePoint, eps: f64, settings: &HuntSettings) -> SeedOutcome {
    let cands = match detect_returns(params, seed, settings.t_max, settings.candidate_tol, settings.max_candidates) {
        Ok(c) if c.is_empty() => return SeedOutcome::NoReturn,
        Ok(c) => c,
        Err(e) => return SeedOutcome::Failed(e),
    };
    let mut last = None;
    for cand in &cands {
        match monodromy_refine(params, cand, eps, settings.newton_tol, settings.max_iter) {
            Ok(o) if orbit_violations(&o).is_empty() => return SeedOutcome::Converged(o),
            Ok(o) => {
                last = Some(Error::InvalidArgument(alloc::format!(
                    "refined orbit fails invariants: {}",
                    orbit_violations(&o).join(", ")
                )))
            }
            Err(e) => last = Some(e),
        }
    }
    SeedOutcome::Failed(last.expect("at least one candidate"))
}

/// Sequential hunt over all seeds; the catalog is deduplicated in seed
/// order.
pub fn hunt_orbits(
    params: &ModelParams,
    seeds: &[PhasePoint],
    eps: f64,
    settings: &HuntSettings,
) -> Result<(Vec<PeriodicOrbit>, Vec<SeedOutcome>)> {
    let outcomes: Vec<SeedOutcome> = seeds.iter().map(|s| process_seed(params, *s, eps, settings)).collect();
    let found = outcomes
        .iter()
        .filter_map(|o| match o {
            SeedOutcome::Converged(orbit) => Some(orbit.clone()),
            _ => None,
        })
        .collect();
    Ok((dedupe_orbits(params, found)?, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn eye() -> Matrix4 {
        crate::dynamics::IDENTITY4
    }

    #[test]
    fn lyapunov_arithmetic() {
        let mut m = eye();
        m[0][0] = core::f64::consts::E;
        m[1][1] = 1.0 / core::f64::consts::E;
        assert!((lyapunov_from(&m, 2.0) - 0.5).abs() < 1e-14);
        assert_eq!(lyapunov_from(&eye(), 3.0), 0.0);
        assert!(reciprocal_pair_defect(&m) < 1e-14);
        assert!(unit_pair_defect(&m) < 1e-14);
    }

    #[test]
    fn uncoupled_return_time() {
        let p = ModelParams::new(1.0, 1.0, 0.0, 10.0).unwrap();
        let x0 = PhasePoint::new(1.0, 0.0, 0.5, 0.0);
        let c = detect_return(&p, x0, 20.0, 0.1).unwrap().unwrap();
        assert!((c.t_approx - 2.0 * PI).abs() < 1e-6, "{}", c.t_approx);
        let o = monodromy_refine(&p, &c, h_cl(&x0, &p).unwrap(), 1e-10, 50).unwrap();
        assert!(o.lyapunov.abs() < 1e-6);
        assert!(o.iterations <= 1);
    }

    #[test]
    fn incommensurate_frequencies_do_not_return() {
        let p = ModelParams::new(1.0, 2f64.sqrt(), 0.0, 10.0).unwrap();
        let x0 = PhasePoint::new(0.7, 0.3, 0.4, -0.9);
        assert!(detect_return(&p, x0, 40.0, 0.1).unwrap().is_none());
    }

    #[test]
    fn peaks_of_two_blobs() {
        use crate::metrics::GridSpec;
        let spec = GridSpec { cells: 40 };
        let bump = |q: f64, p: f64, c: (f64, f64), h: f64| h * (-((q - c.0).powi(2) + (p - c.1).powi(2)) / 0.05).exp();
        let mut values = vec![None; 1600];
        for iq in 0..40 {
            for ip in 0..40 {
                let (q, p) = spec.center(iq, ip);
                if q * q + p * p < 4.0 {
                    values[iq * 40 + ip] = Some(bump(q, p, (-0.95, 0.05), 1.0) + bump(q, p, (0.85, -0.45), 0.7));
                }
            }
        }
        let grid = HusimiGrid {
            spec,
            alpha: 1.0,
            eps: -0.5,
            label: String::new(),
            unconverged: vec![false; 1600],
            values,
            nodes: 0,
        };
        let peaks = find_husimi_peaks(&grid, 0.2, 2);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].0 + 0.9).abs() < 0.11 && (peaks[0].1 - 0.1).abs() < 0.11);
        assert!(peaks[0].2 > peaks[1].2);
    }
}
