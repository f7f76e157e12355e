//! Monte Carlo realisation of the microcanonical shell measure
//! `δ(h_cl(x) − ε) dx`.
//!
//! `h_cl` is quadratic in `q`, so a proposal `(p, Q, P)` yields zero or two
//! exact shell points, carrying the delta-function Jacobian `1/|∂h/∂q|`
//! divided by the proposal density. Shell averages are weighted means; the
//! shell volume is the mean weight per proposal times the proposal volume.
//! Two proposal schemes are available:
//!
//! * [`Proposal::UniformBox`]: `(p, Q, P)` uniform on `|p| ≤ p_max(ε)` times
//!   the Bloch disk, weight `1/√Δ` with `Δ` the discriminant of the
//!   quadratic. The weight is unbounded near tangencies (`Δ → 0`), which
//!   makes its variance grow logarithmically with the tangency cut-off.
//! * [`Proposal::Arcsine`]: `(Q, P)` uniform on the disk and `p` drawn from
//!   the arcsine law `∝ 1/√Δ(p)` on its admissible interval. This samples
//!   the same measure with constant weights, `π/ω` per root.
//!
//! Random numbers come from ChaCha8 seeded with the run seed; shard `s`
//! (a fixed block of [`SHARD_SIZE`] proposals) reads stream `s`, so any
//! partition of shards across workers reproduces the same sample.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::phase::{p_max, q_roots, PhasePoint};

/// Proposals per RNG stream.
pub const SHARD_SIZE: u64 = 4096;

/// Weighted point set on one energy shell.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSample {
    pub eps: f64,
    pub seed: u64,
    pub points: Vec<PhasePoint>,
    pub weights: Vec<f64>,
    /// Index of the proposal that produced each point; both roots of one
    /// proposal share it.
    pub proposal: Vec<u64>,
    /// Number of proposals drawn, including those without roots.
    pub proposals: u64,
    /// Volume of the `(p, Q, P)` proposal box.
    pub cell_volume: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Proposal {
    #[default]
    UniformBox,
    Arcsine,
}

/// Draws proposals for one energy shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSampler {
    pub params: ModelParams,
    pub eps: f64,
    /// Half-width of the `p` proposal interval (uniform box only).
    pub p_extent: f64,
    pub seed: u64,
    pub scheme: Proposal,
}

impl ShellSampler {
    pub fn new(params: &ModelParams, eps: f64, seed: u64) -> Result<Self> {
        let min = params.ground_energy();
        if !(eps >= min) {
            return Err(Error::BelowGroundEnergy { eps, min });
        }
        Ok(Self { params: *params, eps, p_extent: p_max(eps, params), seed, scheme: Proposal::UniformBox })
    }

    pub fn with_scheme(mut self, scheme: Proposal) -> Self {
        self.scheme = scheme;
        self
    }

    /// Same sampler with the `p` interval widened by `factor ≥ 1`.
    pub fn with_wider_box(mut self, factor: f64) -> Self {
        self.p_extent *= factor.max(1.0);
        self
    }

    pub fn cell_volume(&self) -> f64 {
        match self.scheme {
            Proposal::UniformBox => 2.0 * self.p_extent * 4.0 * PI,
            Proposal::Arcsine => 4.0 * PI,
        }
    }

    /// Points from proposals `first..first + count` of shard `shard`.
    fn draw(&self, shard: u64, count: u64, out: &mut ShellSample) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(shard);
        let first = shard * SHARD_SIZE;
        let w = self.params.omega;
        for i in 0..count {
            let u = rng.random::<f64>();
            let r = 2.0 * rng.random::<f64>().sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            let (aq, ap) = (r * phi.cos(), r * phi.sin());
            let (p, roots, weight) = match self.scheme {
                Proposal::UniformBox => {
                    let p = self.p_extent * (2.0 * u - 1.0);
                    match q_roots(self.eps, p, aq, ap, &self.params) {
                        Some((roots, slope)) => (p, roots, 1.0 / slope),
                        None => continue,
                    }
                }
                Proposal::Arcsine => {
                    // Δ(p) = Δ₀ − ω²p²; p = (√Δ₀/ω) sin θ with θ uniform.
                    let r2 = aq * aq + ap * ap;
                    let b = 2.0 * self.params.gamma * aq * (1.0 - r2 / 4.0).max(0.0).sqrt();
                    let c0 = 0.5 * self.params.omega0 * r2 - self.params.omega0;
                    let d0 = b * b - 2.0 * w * (c0 - self.eps);
                    if !(d0 > 0.0) {
                        continue;
                    }
                    let theta = PI * (u - 0.5);
                    let p = d0.sqrt() / w * theta.sin();
                    let sd = d0.sqrt() * theta.cos();
                    (p, [(-b - sd) / w, (-b + sd) / w], PI / w)
                }
            };
            for q in roots {
                out.points.push(PhasePoint::new(q, p, aq, ap));
                out.weights.push(weight);
                out.proposal.push(first + i);
            }
        }
    }

    /// Sample built from shards `shards` only (for distributing work).
    pub fn sample_shards(&self, shards: core::ops::Range<u64>, total: u64) -> ShellSample {
        let mut out = self.empty(0);
        for s in shards {
            let start = s * SHARD_SIZE;
            if start >= total {
                break;
            }
            let count = SHARD_SIZE.min(total - start);
            self.draw(s, count, &mut out);
            out.proposals += count;
        }
        out
    }

    fn empty(&self, proposals: u64) -> ShellSample {
        ShellSample {
            eps: self.eps,
            seed: self.seed,
            points: Vec::new(),
            weights: Vec::new(),
            proposal: Vec::new(),
            proposals,
            cell_volume: self.cell_volume(),
        }
    }

    pub fn shard_count(n: u64) -> u64 {
        n.div_ceil(SHARD_SIZE)
    }

    /// `n` proposals in shard order.
    pub fn sample(&self, n: u64) -> Result<ShellSample> {
        let s = self.sample_shards(0..Self::shard_count(n), n);
        if s.points.is_empty() {
            return Err(Error::EmptyShell(self.eps));
        }
        Ok(s)
    }
}

/// `n` proposals on the shell `ε`.
pub fn sample_energy_shell(eps: f64, n: u64, params: &ModelParams, seed: u64) -> Result<ShellSample> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one proposal is required".into()));
    }
    ShellSampler::new(params, eps, seed)?.sample(n)
}

impl ShellSample {
    /// Concatenates shard samples produced in ascending shard order.
    pub fn merge(parts: Vec<ShellSample>) -> Result<ShellSample> {
        let mut it = parts.into_iter();
        let mut out = it.next().ok_or_else(|| Error::InvalidArgument("nothing to merge".into()))?;
        for part in it {
            if part.eps != out.eps || part.seed != out.seed || part.cell_volume != out.cell_volume {
                return Err(Error::InvalidArgument("merging samples of different shells".into()));
            }
            out.points.extend(part.points);
            out.weights.extend(part.weights);
            out.proposal.extend(part.proposal);
            out.proposals += part.proposals;
        }
        if out.points.is_empty() {
            return Err(Error::EmptyShell(out.eps));
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// Estimate of `∫ δ(h_cl − ε) dx = (2πħ_eff)² ν(ε)` with its standard
    /// error.
    pub fn volume(&self) -> (f64, f64) {
        let n = self.proposals as f64;
        let groups = self.group_sums(|i| self.weights[i]);
        let mean = pairwise_sum(&groups.iter().map(|g| g.1).collect::<Vec<_>>()) / n;
        let sq: f64 = groups.iter().map(|g| (g.1 - mean) * (g.1 - mean)).sum();
        // Proposals without roots contribute (0 − mean)² each.
        let empty = n - groups.len() as f64;
        let var = (sq + empty * mean * mean) / (n - 1.0).max(1.0);
        (self.cell_volume * mean, self.cell_volume * (var / n).sqrt())
    }

    /// `(proposal, Σ value)` per proposal that produced points.
    fn group_sums(&self, value: impl Fn(usize) -> f64) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, f64)> = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let v = value(i);
            match out.last_mut() {
                Some(last) if last.0 == self.proposal[i] => last.1 += v,
                _ => out.push((self.proposal[i], v)),
            }
        }
        out
    }

    /// Weighted mean of `values` (one per point) and its standard error,
    /// from the delta-method variance of the ratio estimator with proposals
    /// as independent units.
    pub fn weighted_mean(&self, values: &[f64]) -> (f64, f64) {
        assert_eq!(values.len(), self.len());
        let wf: Vec<f64> = self.weights.iter().zip(values).map(|(w, f)| w * f).collect();
        let total = self.total_weight();
        let mean = pairwise_sum(&wf) / total;
        let residuals = self.group_sums(|i| self.weights[i] * (values[i] - mean));
        let sq: f64 = residuals.iter().map(|r| r.1 * r.1).sum();
        (mean, sq.sqrt() / total)
    }

    /// Jackknife blocks: contiguous proposal ranges mapped to point ranges.
    pub fn blocks(&self, n_blocks: usize) -> Vec<core::ops::Range<usize>> {
        let n_blocks = n_blocks.max(1);
        let mut out = Vec::with_capacity(n_blocks);
        let mut start = 0;
        for b in 0..n_blocks {
            let limit = self.proposals * (b as u64 + 1) / n_blocks as u64;
            let end = start + self.proposal[start..].partition_point(|&p| p < limit);
            out.push(start..end);
            start = end;
        }
        out
    }
}

/// `⟨f⟩_ε` with its standard error over an existing sample.
pub fn shell_average(f: impl Fn(&PhasePoint) -> f64, sample: &ShellSample) -> (f64, f64) {
    let values: Vec<f64> = sample.points.iter().map(f).collect();
    sample.weighted_mean(&values)
}

/// Summation whose rounding does not depend on how the terms were produced.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::h_cl;

    #[test]
    fn points_lie_on_the_shell() {
        let p = ModelParams::resonant(1.0, 30.0).unwrap();
        let s = sample_energy_shell(-0.5, 20_000, &p, 1).unwrap();
        for x in &s.points {
            assert!((h_cl(x, &p).unwrap() + 0.5).abs() < 1e-12);
        }
        assert!(s.weights.iter().all(|w| w.is_finite() && *w > 0.0));
        let (m, e) = shell_average(|_| 3.0, &s);
        assert!((m - 3.0).abs() < 1e-14 && e < 1e-12);
    }

    #[test]
    fn shards_compose() {
        let p = ModelParams::resonant(1.0, 30.0).unwrap();
        let sampler = ShellSampler::new(&p, -0.5, 9).unwrap();
        let n = 3 * SHARD_SIZE + 100;
        let whole = sampler.sample(n).unwrap();
        let parts = alloc::vec![sampler.sample_shards(0..2, n), sampler.sample_shards(2..4, n)];
        assert_eq!(ShellSample::merge(parts).unwrap(), whole);
    }

    #[test]
    fn below_ground_is_rejected() {
        let p = ModelParams::resonant(1.0, 30.0).unwrap();
        assert!(sample_energy_shell(-2.2, 10, &p, 0).is_err());
    }

    #[test]
    fn blocks_partition_points() {
        let p = ModelParams::resonant(1.0, 30.0).unwrap();
        let s = sample_energy_shell(-0.5, 10_000, &p, 3).unwrap();
        let blocks = s.blocks(7);
        assert_eq!(blocks.len(), 7);
        assert_eq!(blocks[0].start, 0);
        assert_eq!(blocks[6].end, s.len());
        for w in blocks.windows(2) {
            assert_eq!(w[0].end, w[1].start);
        }
    }
}
