//! Rényi occupations, the localization measure `Λ_α`, projected Husimi
//! moments and the scarring measure.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::coherent::{coherent_overlap_sq, HusimiDensity, StateVector};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::phase::PhasePoint;
use crate::shell::{pairwise_sum, ShellSample};

/// Jackknife blocks used for occupation errors.
pub const JACKKNIFE_BLOCKS: usize = 32;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ZETA3: f64 = 1.202_056_903_159_594_3;

/// Occupation of a random pure state, `𝔏_α^max = Γ(1 + α)^{1/(1−α)}`.
///
/// Near `α = 1` the expression is replaced by its Taylor expansion about the
/// limit `exp(−ψ(2))`.
pub fn max_renyi_occupation(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::NegativeAlpha(alpha));
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    let d = alpha - 1.0;
    if d.abs() < 1e-4 {
        let psi = 1.0 - EULER_GAMMA;
        let psi1 = PI * PI / 6.0 - 1.0;
        let psi2 = 2.0 - 2.0 * ZETA3;
        return Ok((-psi - psi1 * d / 2.0 - psi2 * d * d / 6.0).exp());
    }
    Ok((libm::lgamma(1.0 + alpha) / (1.0 - alpha)).exp())
}

/// `⟨|⟨ψ_R|φ⟩|^{2α}⟩ = Γ(N)Γ(1+α)/Γ(N+α)` for random unit vectors in
/// dimension `N`.
pub fn finite_n_moment(n: u64, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::NegativeAlpha(alpha));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let n = n as f64;
    Ok((libm::lgamma(n) + libm::lgamma(1.0 + alpha) - libm::lgamma(n + alpha)).exp())
}

/// Value with a one-standard-error uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Block sums `(Σw, ΣwQ, ΣwQ^α or ΣwQ ln Q)` of one jackknife block.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    w: f64,
    wq: f64,
    wm: f64,
}

impl core::ops::Sub for Sums {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Sums { w: self.w - o.w, wq: self.wq - o.wq, wm: self.wm - o.wm }
    }
}

fn occupation_from_sums(s: Sums, alpha: f64) -> f64 {
    let mean_q = s.wq / s.w;
    if is_unit(alpha) {
        mean_q * (-(s.wm / s.w) / mean_q).exp()
    } else {
        ((s.wm / s.w) / mean_q.powf(alpha)).powf(1.0 / (1.0 - alpha))
    }
}

fn is_unit(alpha: f64) -> bool {
    (alpha - 1.0).abs() < 1e-12
}

fn moment_term(q: f64, alpha: f64) -> f64 {
    if is_unit(alpha) {
        if q > 0.0 {
            q * q.ln()
        } else {
            0.0
        }
    } else {
        q.powf(alpha)
    }
}

/// Rényi occupation `𝔏_α` from Husimi values at the points of `sample`,
/// with a jackknife error over contiguous proposal blocks.
pub fn occupation_from_values(values: &[f64], sample: &ShellSample, alpha: f64) -> Result<Estimate> {
    if !(alpha >= 0.0) {
        return Err(Error::NegativeAlpha(alpha));
    }
    if values.len() != sample.len() {
        return Err(Error::InvalidArgument("one Husimi value per sample point is required".into()));
    }
    if alpha == 0.0 {
        return Ok(Estimate { value: 1.0, std_error: 0.0 });
    }
    let blocks: Vec<Sums> = sample
        .blocks(JACKKNIFE_BLOCKS)
        .into_iter()
        .map(|r| {
            let w = &sample.weights[r.clone()];
            let v = &values[r];
            Sums {
                w: pairwise_sum(w),
                wq: pairwise_sum(&w.iter().zip(v).map(|(a, b)| a * b).collect::<Vec<_>>()),
                wm: pairwise_sum(&w.iter().zip(v).map(|(a, b)| a * moment_term(*b, alpha)).collect::<Vec<_>>()),
            }
        })
        .collect();
    let total = blocks.iter().fold(Sums::default(), |a, b| Sums { w: a.w + b.w, wq: a.wq + b.wq, wm: a.wm + b.wm });
    if !(total.w > 0.0 && total.wq > 0.0) {
        return Err(Error::DegenerateSample("Husimi function vanishes on the sample".into()));
    }
    let value = occupation_from_sums(total, alpha);
    let used: Vec<f64> = blocks
        .iter()
        .filter(|b| b.w > 0.0)
        .map(|&b| occupation_from_sums(total - b, alpha))
        .collect();
    let k = used.len() as f64;
    if k < 2.0 || !value.is_finite() {
        return Err(Error::DegenerateSample("too few populated jackknife blocks".into()));
    }
    let mean = used.iter().sum::<f64>() / k;
    let var = (k - 1.0) / k * used.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    Ok(Estimate { value, std_error: var.sqrt() })
}

/// Husimi values of `state` at every sample point.
pub fn husimi_values(state: &StateVector, sample: &ShellSample) -> Vec<f64> {
    let tables = state.tables();
    sample.points.iter().map(|x| state.husimi_at(&tables.point(x))).collect()
}

/// Husimi values of several states sharing one basis, computing the overlap
/// vectors once per point. Returns one vector per state.
pub fn husimi_values_many(states: &[StateVector], points: &[PhasePoint]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::with_capacity(points.len()); states.len()];
    let Some(first) = states.first() else { return out };
    let tables = first.tables();
    for x in points {
        let cp = tables.point(x);
        for (s, o) in states.iter().zip(out.iter_mut()) {
            o.push(s.husimi_at(&cp));
        }
    }
    out
}

/// `𝔏_α(ε, ψ)` estimated on `sample`.
pub fn renyi_occupation(state: &StateVector, alpha: f64, sample: &ShellSample) -> Result<Estimate> {
    occupation_from_values(&husimi_values(state, sample), sample, alpha)
}

/// `Λ_α = 𝔏_α^max / 𝔏_α` from an occupation estimate.
pub fn lambda_from_occupation(occ: Estimate, alpha: f64) -> Result<Estimate> {
    let max = max_renyi_occupation(alpha)?;
    let value = max / occ.value;
    Ok(Estimate { value, std_error: value * occ.std_error / occ.value })
}

pub fn lambda_measure(state: &StateVector, alpha: f64, sample: &ShellSample) -> Result<Estimate> {
    lambda_from_occupation(renyi_occupation(state, alpha, sample)?, alpha)
}

/// Default α grid: `0, 0.25, …, 4`.
pub fn default_alphas() -> Vec<f64> {
    (0..=16).map(|i| 0.25 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationPoint {
    pub alpha: f64,
    pub occupation: Estimate,
    pub lambda: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OccupationCurve {
    pub label: String,
    pub eps: f64,
    pub points: Vec<OccupationPoint>,
}

/// `𝔏_α` and `Λ_α` over `alphas`, all from the same Husimi values.
pub fn occupation_curve(
    label: impl Into<String>,
    values: &[f64],
    sample: &ShellSample,
    alphas: &[f64],
) -> Result<OccupationCurve> {
    let mut points = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let occupation = occupation_from_values(values, sample, alpha)?;
        points.push(OccupationPoint { alpha, occupation, lambda: lambda_from_occupation(occupation, alpha)? });
    }
    Ok(OccupationCurve { label: label.into(), eps: sample.eps, points })
}

/// Square `(Q, P)` grid over `[−2, 2]²`; cell centres outside the Bloch disk
/// are empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub cells: usize,
}

impl GridSpec {
    pub fn cell_size(&self) -> f64 {
        4.0 / self.cells as f64
    }

    /// Centre of cell `(iq, ip)`.
    pub fn center(&self, iq: usize, ip: usize) -> (f64, f64) {
        let h = self.cell_size();
        (-2.0 + (iq as f64 + 0.5) * h, -2.0 + (ip as f64 + 0.5) * h)
    }
}

/// Projected Husimi moment `∬ dq dp δ(h_cl − ε) Q_ψ^α` on a `(Q, P)` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub spec: GridSpec,
    pub alpha: f64,
    pub eps: f64,
    pub label: String,
    /// Row-major by `Q` index, then `P` index; `None` outside the disk or
    /// outside the shell's projection.
    pub values: Vec<Option<f64>>,
    /// Cells whose quadrature did not settle (value kept, but suspect).
    pub unconverged: Vec<bool>,
    pub nodes: usize,
}

impl HusimiGrid {
    pub fn get(&self, iq: usize, ip: usize) -> Option<f64> {
        self.values[iq * self.spec.cells + ip]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |a, &b| a.max(b))
    }

    pub fn mean(&self) -> f64 {
        let v: Vec<f64> = self.values.iter().flatten().copied().collect();
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }

    /// `max/mean` over the populated cells.
    pub fn contrast(&self) -> f64 {
        self.max() / self.mean()
    }

    /// `Σ value × cell area`.
    pub fn integral(&self) -> f64 {
        let a = self.spec.cell_size() * self.spec.cell_size();
        self.values.iter().flatten().sum::<f64>() * a
    }
}

/// Shell points above `(Q, P)`: with `Δ₀ = b² − 2ω(c₀ − ε)`, the curve
/// `p = (√Δ₀/ω) sin θ`, `q = (−b + √Δ₀ cos θ)/ω`, `θ ∈ [−π, π)` traces both
/// `q` branches, and `dp/|∂h/∂q| = dθ/ω`. Returns `None` when the shell
/// does not reach `(Q, P)`.
pub fn shell_fiber(eps: f64, atom_q: f64, atom_p: f64, params: &ModelParams) -> Option<(f64, f64)> {
    let r2 = atom_q * atom_q + atom_p * atom_p;
    if r2 > 4.0 {
        return None;
    }
    let w = params.omega;
    let b = 2.0 * params.gamma * atom_q * (1.0 - r2 / 4.0).max(0.0).sqrt();
    let c0 = 0.5 * params.omega0 * r2 - params.omega0;
    let d0 = b * b - 2.0 * w * (c0 - eps);
    (d0 > 0.0).then(|| (-b / w, d0.sqrt() / w))
}

/// Husimi values at `nodes` equally spaced angles around the fibre above
/// `(Q, P)`, or `None` outside the shell's projection.
pub fn fibre_values(
    density: &impl HusimiDensity,
    eps: f64,
    params: &ModelParams,
    atom: (f64, f64),
    nodes: usize,
) -> Option<Vec<f64>> {
    let (aq, ap) = atom;
    let (q0, radius) = shell_fiber(eps, aq, ap, params)?;
    Some(
        (0..nodes)
            .map(|i| {
                let theta = -PI + 2.0 * PI * i as f64 / nodes as f64;
                density.husimi(&PhasePoint::new(q0 + radius * theta.cos(), radius * theta.sin(), aq, ap))
            })
            .collect(),
    )
}

/// Trapezoidal fibre integral of `Q^α` from [`fibre_values`], and whether
/// the half-resolution rule disagrees by more than `1e−3` relative.
pub fn fibre_moment(values: &[f64], alpha: f64, params: &ModelParams) -> (f64, bool) {
    let nodes = values.len() as f64;
    let (mut even, mut odd) = (0.0, 0.0);
    for (i, &q) in values.iter().enumerate() {
        let v = if alpha == 0.0 { 1.0 } else { q.powf(alpha) };
        if i % 2 == 0 {
            even += v;
        } else {
            odd += v;
        }
    }
    let full = (even + odd) * 2.0 * PI / nodes / params.omega;
    let half = even * 4.0 * PI / nodes / params.omega;
    (full, (full - half).abs() > 1e-3 * full.abs().max(f64::MIN_POSITIVE))
}

/// Even node count used for the fibre quadrature.
pub fn fibre_nodes(requested: usize) -> usize {
    requested.max(8) & !1
}

/// Projected moment grids for several `alphas` sharing one set of Husimi
/// evaluations. The fibre integral uses the periodic trapezoidal rule with
/// `nodes` points in `θ`.
pub fn projected_husimi_moments(
    density: &impl HusimiDensity,
    label: &str,
    alphas: &[f64],
    eps: f64,
    params: &ModelParams,
    spec: GridSpec,
    nodes: usize,
) -> Result<Vec<HusimiGrid>> {
    if let Some(&a) = alphas.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::NegativeAlpha(a));
    }
    let nodes = fibre_nodes(nodes);
    let n = spec.cells;
    let mut grids: Vec<HusimiGrid> = alphas
        .iter()
        .map(|&alpha| HusimiGrid {
            spec,
            alpha,
            eps,
            label: label.into(),
            values: vec![None; n * n],
            unconverged: vec![false; n * n],
            nodes,
        })
        .collect();
    for iq in 0..n {
        for ip in 0..n {
            let Some(v) = fibre_values(density, eps, params, spec.center(iq, ip), nodes) else { continue };
            for g in grids.iter_mut() {
                let (value, flag) = fibre_moment(&v, g.alpha, params);
                g.values[iq * n + ip] = Some(value);
                g.unconverged[iq * n + ip] = flag;
            }
        }
    }
    Ok(grids)
}

/// Single-α form of [`projected_husimi_moments`].
pub fn projected_husimi_moment(
    density: &impl HusimiDensity,
    label: &str,
    alpha: f64,
    eps: f64,
    params: &ModelParams,
    spec: GridSpec,
    nodes: usize,
) -> Result<HusimiGrid> {
    Ok(projected_husimi_moments(density, label, &[alpha], eps, params, spec, nodes)?.remove(0))
}

/// Time-averaged mixture of coherent states along a closed orbit; `points`
/// must be uniformly spaced in time over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct TubularState {
    pub points: Vec<PhasePoint>,
    pub j: f64,
}

impl TubularState {
    pub fn new(points: Vec<PhasePoint>, j: f64) -> Self {
        Self { points, j }
    }
}

impl HusimiDensity for TubularState {
    fn husimi(&self, x: &PhasePoint) -> f64 {
        let s: f64 = self.points.iter().map(|y| coherent_overlap_sq(x, y, self.j)).sum();
        s / self.points.len() as f64
    }
}

/// Husimi function of the shell-delocalized mixture `ρ_ε`, as the shell
/// average of coherent-state overlaps over a sample.
#[derive(Debug, Clone, Copy)]
pub struct ShellMixture<'a> {
    pub sample: &'a ShellSample,
    pub j: f64,
}

impl HusimiDensity for ShellMixture<'_> {
    fn husimi(&self, x: &PhasePoint) -> f64 {
        let v: Vec<f64> = self.sample.points.iter().map(|y| coherent_overlap_sq(x, y, self.j)).collect();
        self.sample.weighted_mean(&v).0
    }
}

/// Densities whose overlap with a tubular state can be evaluated.
pub trait TubeOverlap {
    /// `tr(ρ ρ_𝒪) = (1/T)∫dt Q_ρ(y(t))`.
    fn tube_overlap(&self, tube: &TubularState) -> f64;
}

impl<T: HusimiDensity> TubeOverlap for T {
    fn tube_overlap(&self, tube: &TubularState) -> f64 {
        let v: Vec<f64> = tube.points.iter().map(|y| self.husimi(y)).collect();
        pairwise_sum(&v) / v.len() as f64
    }
}

/// The shell mixture's overlap with the tube, `⟨Q_𝒪⟩_ε`, evaluated through
/// the trace symmetry exactly as the scarring-measure denominator is.
pub fn shell_tube_overlap(tube: &TubularState, sample: &ShellSample) -> Estimate {
    let v: Vec<f64> = sample.points.iter().map(|x| tube.husimi(x)).collect();
    let (value, std_error) = sample.weighted_mean(&v);
    Estimate { value, std_error }
}

/// Scarring measure `𝒫 = tr(ρ ρ_𝒪)/tr(ρ_ε ρ_𝒪)`; the error comes from the
/// Monte Carlo denominator.
pub fn scar_measure_from(numerator: f64, denominator: Estimate) -> Estimate {
    let value = numerator / denominator.value;
    Estimate { value, std_error: value * denominator.std_error / denominator.value }
}

pub fn scar_measure(density: &impl TubeOverlap, tube: &TubularState, sample: &ShellSample) -> Estimate {
    scar_measure_from(density.tube_overlap(tube), shell_tube_overlap(tube, sample))
}

/// `𝒫` of the shell mixture itself: numerator and denominator are the same
/// quantity, so the result is exactly one.
pub fn scar_measure_of_shell_mixture(tube: &TubularState, sample: &ShellSample) -> Estimate {
    let d = shell_tube_overlap(tube, sample);
    scar_measure_from(d.value, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximal_occupations() {
        assert_eq!(max_renyi_occupation(0.0).unwrap(), 1.0);
        assert!((max_renyi_occupation(2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((max_renyi_occupation(0.5).unwrap() - PI / 4.0).abs() < 1e-14);
        assert!((max_renyi_occupation(4.0).unwrap() - 24f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        let at_one = (EULER_GAMMA - 1.0).exp();
        assert!((max_renyi_occupation(1.0).unwrap() - at_one).abs() < 1e-15);
        assert!((at_one - 0.6552).abs() < 1e-4);
        // Continuity across the series/closed-form switch.
        for a in [1.0 + 0.999e-4, 1.0 - 0.999e-4] {
            let closed = (libm::lgamma(1.0 + a) / (1.0 - a)).exp();
            assert!((max_renyi_occupation(a).unwrap() - closed).abs() < 1e-10);
        }
        assert!(max_renyi_occupation(-0.1).is_err());
    }

    #[test]
    fn finite_moments() {
        assert!((finite_n_moment(17, 1.0).unwrap() - 1.0 / 17.0).abs() < 1e-15);
        assert!((finite_n_moment(1, 3.3).unwrap() - 1.0).abs() < 1e-13);
        let n = 10_000u64;
        let v = finite_n_moment(n, 2.0).unwrap();
        assert!((v / (2.0 / (n as f64 * n as f64)) - 1.0).abs() < 1e-3);
    }
}
