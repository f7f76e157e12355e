//! Stages shared by the commands. Expensive results go through the cache;
//! the loops over states, sample shards, grid rows and seeds run on the
//! session's thread pool and are collected in a fixed order, so outputs do
//! not depend on the thread count.

use std::path::{Path, PathBuf};

use dicke_core::basis::{BasisSpec, Sector};
use dicke_core::coherent::{random_goe_state, HusimiDensity, StateVector};
use dicke_core::hamiltonian::build_hamiltonian;
use dicke_core::linalg::SpectralCounter;
use dicke_core::metrics::{
    fibre_moment, fibre_nodes, fibre_values, husimi_values_many, occupation_curve, scar_measure_from, Estimate,
    GridSpec, HusimiGrid, OccupationCurve, OccupationPoint, TubeOverlap, TubularState,
};
use dicke_core::orbits::{dedupe_orbits, hunt_seeds, process_seed, PeriodicOrbit, SeedOutcome};
use dicke_core::params::ModelParams;
use dicke_core::shell::{pairwise_sum, ShellSample, ShellSampler};
use dicke_core::spectrum::{default_n_max, default_tail_width, diagonalize, filter_converged, EnergyRange, Spectrum};
use log::{info, warn};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::cache::{Cache, Codec, OrbitCatalog, Reader, Writer};
use crate::config::{hex, RunConfig, StateSelector};
use crate::error::{CliError, CliResult};
use crate::manifest::RunManifest;
use crate::output::Table;

/// Husimi points evaluated per parallel task.
const CHUNK: usize = 2048;

/// Largest `|ε_state − ε_orbit|` accepted without a warning.
pub const SHELL_TOL: f64 = 0.01;

/// One command invocation: validated config, cache, thread pool and the
/// manifest being recorded.
pub struct Session {
    pub config: RunConfig,
    pub params: ModelParams,
    pub cache: Cache,
    pub manifest: RunManifest,
    pool: rayon::ThreadPool,
}

impl Session {
    pub fn new(command: &str, config: RunConfig) -> CliResult<Self> {
        config.validate()?;
        let params = config.params()?;
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(t) = config.threads {
            builder = builder.num_threads(t);
        }
        let pool = builder.build().map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
        let cache = Cache::open(config.cache_root())?;
        let manifest = RunManifest::start(command, &config, pool.current_num_threads());
        Ok(Self { config, params, cache, manifest, pool })
    }

    pub fn hash(&self) -> String {
        self.manifest.config_hash.clone()
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.out_dir
    }

    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        self.pool.install(f)
    }

    pub fn write(&mut self, name: &str, table: &Table) -> CliResult<PathBuf> {
        let path = self.config.out_dir.join(name);
        table.write(&path)?;
        self.manifest.output(&path);
        Ok(path)
    }

    pub fn finish(self) -> CliResult<PathBuf> {
        let dir = self.config.out_dir.clone();
        self.manifest.finish(&dir)
    }

    /// Energy range diagonalized: the eigenstate window joined with the
    /// random-state window.
    pub fn spectrum_range(&self) -> (f64, f64) {
        let (lo, hi) = self.config.window();
        let c = self.config.window_center;
        let half = 0.5 * self.config.random_window_width;
        (lo.min(c - half), hi.max(c + half))
    }

    pub fn n_max(&self) -> usize {
        self.config.n_max.unwrap_or_else(|| default_n_max(&self.params, self.spectrum_range().1))
    }

    fn spectrum_key(&self) -> String {
        let (lo, hi) = self.spectrum_range();
        let p = &self.params;
        key(&format!(
            "{:?} {:?} {:?} {:?} {} {:?} {lo:?} {hi:?}",
            p.omega,
            p.omega0,
            p.gamma,
            p.j(),
            self.n_max(),
            self.config.parity
        ))
    }

    /// Eigenpairs over [`Session::spectrum_range`] with the convergence
    /// filter applied. The cache holds the unfiltered spectrum, so changing
    /// `tail_tol` does not force a new diagonalization.
    pub fn spectrum(&mut self) -> CliResult<Spectrum> {
        let (lo, hi) = self.spectrum_range();
        let n_max = self.n_max();
        let params = self.params;
        let sector = self.config.parity.sector();
        let key = self.spectrum_key();
        let (spec, hit) = self.cache.get_or_compute::<Spectrum>(&key, || {
            let basis = BasisSpec::new(&params, n_max, sector);
            info!("diagonalizing: dimension {}, n_max {n_max}, window [{lo}, {hi}]", basis.dim());
            let h = build_hamiltonian(&params, &basis)?;
            Ok(diagonalize(&h, &params, &basis, EnergyRange::Window { lo, hi })?)
        })?;
        self.manifest.cache(format!("spectrum-{key}"), hit);
        let spec = filter_converged(spec, default_tail_width(n_max), self.config.tail_tol);
        let (wlo, whi) = self.config.window();
        if spec.converged_in(wlo, whi).is_empty() {
            return Err(dicke_core::Error::EmptyWindow { found: 0, needed: 1 }.into());
        }
        Ok(spec)
    }

    /// Converged eigenstates inside the window, in energy order.
    pub fn window_states(&self, spec: &Spectrum) -> Vec<usize> {
        let (lo, hi) = self.config.window();
        spec.converged_in(lo, hi)
    }

    /// Shell sample of `config.samples` proposals, drawn in parallel by
    /// shard and merged in shard order.
    pub fn shell_sample(&self, eps: f64, seed: u64) -> CliResult<ShellSample> {
        let sampler = ShellSampler::new(&self.params, eps, seed)?.with_scheme(self.config.sampler.proposal());
        let total = self.config.samples;
        let shards = ShellSampler::shard_count(total);
        let parts: Vec<ShellSample> = self.install(|| {
            (0..shards).into_par_iter().map(|s| sampler.sample_shards(s..s + 1, total)).collect()
        });
        Ok(ShellSample::merge(parts)?)
    }

    /// Husimi values of `states` (one basis) at `points`, in parallel chunks.
    pub fn husimi_values(&self, states: &[StateVector], points: &[dicke_core::phase::PhasePoint]) -> Vec<Vec<f64>> {
        let chunks: Vec<Vec<Vec<f64>>> =
            self.install(|| points.par_chunks(CHUNK).map(|c| husimi_values_many(states, c)).collect());
        let mut out = vec![Vec::with_capacity(points.len()); states.len()];
        for chunk in chunks {
            for (o, v) in out.iter_mut().zip(chunk) {
                o.extend(v);
            }
        }
        out
    }

    /// Random superpositions of the window eigenstates around the window
    /// centre, seeds `seed, seed + 1, …`.
    pub fn random_states(&self, spec: &Spectrum, count: usize) -> CliResult<Vec<StateVector>> {
        let sector = self.config.parity.sector();
        (0..count as u64)
            .map(|i| {
                let mut s = random_goe_state(
                    spec,
                    self.config.window_center,
                    self.config.random_window_width,
                    sector,
                    self.config.seed.wrapping_add(i),
                )?;
                s.label = format!("random-{i}");
                Ok(s)
            })
            .collect()
    }

    /// Occupation curves of every window eigenstate, each on the shell at
    /// its own energy, plus the random-state baseline on the shell at the
    /// window centre.
    pub fn occupations(&mut self, spec: &Spectrum) -> CliResult<OccupationSet> {
        let c = &self.config;
        let key = key(&format!(
            "{} {:?} {} {} {:?} {} {:?} {:?} {:?}",
            self.spectrum_key(),
            c.alphas,
            c.samples,
            c.seed,
            c.sampler,
            c.random_states,
            c.random_window_width,
            c.tail_tol,
            c.window()
        ));
        if let Some(v) = self.cache.get::<OccupationSet>(&key).or_else(cache_miss)? {
            self.manifest.cache(format!("occupations-{key}"), true);
            return Ok(v);
        }
        let states = self.window_states(spec);
        let mut eigen = Vec::with_capacity(states.len());
        for &k in &states {
            let eps = spec.energy(k);
            let sample = self.shell_sample(eps, state_seed(self.config.seed, k))?;
            let psi = StateVector::eigenstate(spec, k);
            let values = self.husimi_values(std::slice::from_ref(&psi), &sample.points).remove(0);
            eigen.push((k, occupation_curve(format!("state-{k}"), &values, &sample, &self.config.alphas)?));
            info!("occupations: state {k} at eps {eps:.6} done");
        }
        let random = self.random_states(spec, self.config.random_states)?;
        let sample = self.shell_sample(self.config.window_center, self.config.seed)?;
        let values = self.husimi_values(&random, &sample.points);
        let random = random
            .iter()
            .zip(&values)
            .map(|(s, v)| Ok(occupation_curve(s.label.clone(), v, &sample, &self.config.alphas)?))
            .collect::<CliResult<Vec<_>>>()?;
        let set = OccupationSet { eigen, random };
        self.cache.put(&key, &set)?;
        self.manifest.cache(format!("occupations-{key}"), false);
        Ok(set)
    }

    /// States picked by the selector. `most-localized:N` ranks window states
    /// by `Λ` at the largest configured α.
    pub fn select_states(&mut self, spec: &Spectrum) -> CliResult<Vec<usize>> {
        match self.config.state_selector()? {
            StateSelector::Indices(v) => {
                for &k in &v {
                    if k >= spec.len() || !spec.is_converged(k) {
                        return Err(CliError::Config(format!(
                            "state {k} is not a converged eigenstate of the cached spectrum ({} states)",
                            spec.len()
                        )));
                    }
                }
                Ok(v)
            }
            StateSelector::MostLocalized(n) => {
                let occ = self.occupations(spec)?;
                Ok(occ.most_localized(n))
            }
        }
    }

    /// Projected moment grids of `density` for `alphas`; rows of the grid run
    /// in parallel.
    pub fn grids(
        &self,
        density: &(impl HusimiDensity + Sync),
        label: &str,
        alphas: &[f64],
        eps: f64,
    ) -> CliResult<Vec<HusimiGrid>> {
        if let Some(&a) = alphas.iter().find(|a| !(**a >= 0.0)) {
            return Err(dicke_core::Error::NegativeAlpha(a).into());
        }
        let spec = GridSpec { cells: self.config.grid };
        let nodes = fibre_nodes(self.config.grid_nodes);
        let n = spec.cells;
        let params = self.params;
        let rows: Vec<Vec<Option<Vec<(f64, bool)>>>> = self.install(|| {
            (0..n)
                .into_par_iter()
                .map(|iq| {
                    (0..n)
                        .map(|ip| {
                            fibre_values(density, eps, &params, spec.center(iq, ip), nodes)
                                .map(|v| alphas.iter().map(|&a| fibre_moment(&v, a, &params)).collect())
                        })
                        .collect()
                })
                .collect()
        });
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
        for (iq, row) in rows.into_iter().enumerate() {
            for (ip, cell) in row.into_iter().enumerate() {
                let Some(moments) = cell else { continue };
                for (g, (v, flag)) in grids.iter_mut().zip(moments) {
                    g.values[iq * n + ip] = Some(v);
                    g.unconverged[iq * n + ip] = flag;
                }
            }
        }
        let bad: usize = grids.iter().map(|g| g.unconverged.iter().filter(|f| **f).count()).sum();
        if bad > 0 {
            warn!("{label}: {bad} grid cells did not meet the fibre quadrature tolerance");
        }
        Ok(grids)
    }

    /// Orbit hunt for one density: α = 4 grid peaks, lifts, and a parallel
    /// sweep over the seeds. Orbits come back deduplicated, in seed order.
    pub fn hunt(
        &self,
        density: &(impl HusimiDensity + Sync),
        label: &str,
        eps: f64,
    ) -> CliResult<(Vec<PeriodicOrbit>, Vec<SeedOutcome>)> {
        let grid = self.grids(density, label, &[4.0], eps)?.remove(0);
        let settings = self.config.hunt_settings();
        let seeds = hunt_seeds(&grid, density, &self.params, &settings);
        info!("{label}: {} seeds from the fourth-moment peaks", seeds.len());
        let params = self.params;
        let outcomes: Vec<SeedOutcome> =
            self.install(|| seeds.par_iter().map(|s| process_seed(&params, *s, eps, &settings)).collect());
        let found = outcomes
            .iter()
            .filter_map(|o| match o {
                SeedOutcome::Converged(orbit) => Some(orbit.clone().with_label(label)),
                _ => None,
            })
            .collect();
        Ok((dedupe_orbits(&self.params, found)?, outcomes))
    }

    /// Orbit catalog of the selected states, computed on a miss.
    pub fn catalog(&mut self, spec: &Spectrum) -> CliResult<(OrbitCatalog, Vec<HuntReport>)> {
        let key = self.catalog_key();
        if let Some(c) = self.cache.get::<OrbitCatalog>(&key).or_else(cache_miss)? {
            self.manifest.cache(format!("orbits-{key}"), true);
            return Ok((c, Vec::new()));
        }
        let states = self.select_states(spec)?;
        let mut all = Vec::new();
        let mut reports = Vec::new();
        for k in states {
            let psi = StateVector::eigenstate(spec, k);
            let (orbits, outcomes) = self.hunt(&psi, &format!("state-{k}"), spec.energy(k))?;
            info!("state {k}: {} orbits from {} seeds", orbits.len(), outcomes.len());
            reports.push(HuntReport { state: k, outcomes });
            all.extend(orbits);
        }
        let catalog = OrbitCatalog { orbits: dedupe_orbits(&self.params, all)? };
        self.cache.put(&key, &catalog)?;
        self.manifest.cache(format!("orbits-{key}"), false);
        Ok((catalog, reports))
    }

    pub fn catalog_key(&self) -> String {
        key(&format!("{} {}", self.spectrum_key(), self.hash()))
    }

    /// Denominator of the scarring measure, `⟨Q_tube⟩` over the shell at the
    /// orbit energy.
    pub fn shell_tube_overlap(&self, tube: &TubularState, sample: &ShellSample) -> Estimate {
        let values: Vec<f64> = self.install(|| sample.points.par_iter().map(|x| tube.husimi(x)).collect());
        let (value, std_error) = sample.weighted_mean(&values);
        Estimate { value, std_error }
    }

    /// `𝒫` of `density` against `orbit`; `sample` must lie on the orbit's
    /// shell.
    pub fn scar_measure(
        &self,
        density: &impl TubeOverlap,
        orbit: &PeriodicOrbit,
        sample: &ShellSample,
    ) -> CliResult<Estimate> {
        let tube = orbit.tube(&self.params, self.config.n_time)?;
        Ok(scar_measure_from(density.tube_overlap(&tube), self.shell_tube_overlap(&tube, sample)))
    }

    /// Ground energy from the lowest eigenvalue of a full Hamiltonian (both
    /// parities) with a cutoff sized for the low-energy region.
    pub fn quantum_ground_energy(&self) -> CliResult<f64> {
        let n_max = default_n_max(&self.params, self.params.ground_energy() + 0.5);
        let basis = BasisSpec::new(&self.params, n_max, Sector::Both);
        let h = build_hamiltonian(&self.params, &basis)?;
        let low = SpectralCounter::new(&h)
            .lowest()
            .ok_or_else(|| dicke_core::Error::Eigensolver("empty Hamiltonian".into()))?;
        Ok(low / self.params.j())
    }
}

/// Cumulative quantum level count (both parities) at each energy of `eps`,
/// next to the integrated semiclassical density from `from`.
pub fn staircase(params: &ModelParams, eps: &[f64], from: f64) -> CliResult<Vec<(f64, usize, f64)>> {
    let top = eps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_max = default_n_max(params, top);
    let basis = BasisSpec::new(params, n_max, Sector::Both);
    let counter = SpectralCounter::new(&build_hamiltonian(params, &basis)?);
    let j = params.j();
    let base = counter.count_below(from * j);
    let lo = from.max(params.ground_energy());
    eps.iter()
        .map(|&e| {
            let quantum = counter.count_below(e * j).saturating_sub(base);
            let classical = if e > lo { dicke_core::dos::integrated_dos(lo, e, params)? } else { 0.0 };
            Ok((e, quantum, classical))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct HuntReport {
    pub state: usize,
    pub outcomes: Vec<SeedOutcome>,
}

/// Occupation curves of the window eigenstates and of the random baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationSet {
    pub eigen: Vec<(usize, OccupationCurve)>,
    pub random: Vec<OccupationCurve>,
}

impl OccupationSet {
    /// Indices of the `n` states with the largest `Λ` at the largest α.
    pub fn most_localized(&self, n: usize) -> Vec<usize> {
        let score = |c: &OccupationCurve| {
            c.points
                .iter()
                .max_by(|a, b| a.alpha.total_cmp(&b.alpha))
                .map_or(f64::NEG_INFINITY, |p| p.lambda.value)
        };
        let mut v: Vec<(usize, f64)> = self.eigen.iter().map(|(k, c)| (*k, score(c))).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        v.into_iter().take(n).map(|x| x.0).collect()
    }

    /// Mean of `Λ` over the random states at each α, with the standard
    /// error of the mean across states.
    pub fn random_mean(&self) -> Vec<(f64, f64, f64)> {
        let Some(first) = self.random.first() else { return Vec::new() };
        let r = self.random.len() as f64;
        (0..first.points.len())
            .map(|i| {
                let v: Vec<f64> = self.random.iter().map(|c| c.points[i].lambda.value).collect();
                let mean = pairwise_sum(&v) / r;
                let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0).max(1.0);
                (first.points[i].alpha, mean, (var / r).sqrt())
            })
            .collect()
    }
}

fn encode_curve(w: &mut Writer, c: &OccupationCurve) {
    w.str(&c.label);
    w.f64(c.eps);
    w.u64(c.points.len() as u64);
    for p in &c.points {
        for v in [p.alpha, p.occupation.value, p.occupation.std_error, p.lambda.value, p.lambda.std_error] {
            w.f64(v);
        }
    }
}

fn decode_curve(r: &mut Reader) -> Result<OccupationCurve, String> {
    let label = r.str()?;
    let eps = r.f64()?;
    let n = r.u64()? as usize;
    let mut points = Vec::with_capacity(n.min(1 << 12));
    for _ in 0..n {
        let alpha = r.f64()?;
        let occupation = Estimate { value: r.f64()?, std_error: r.f64()? };
        let lambda = Estimate { value: r.f64()?, std_error: r.f64()? };
        points.push(OccupationPoint { alpha, occupation, lambda });
    }
    Ok(OccupationCurve { label, eps, points })
}

impl Codec for OccupationSet {
    const KIND: &'static str = "occupations";

    fn encode(&self, w: &mut Writer) {
        w.u64(self.eigen.len() as u64);
        for (k, c) in &self.eigen {
            w.u64(*k as u64);
            encode_curve(w, c);
        }
        w.u64(self.random.len() as u64);
        for c in &self.random {
            encode_curve(w, c);
        }
    }

    fn decode(r: &mut Reader) -> Result<Self, String> {
        let n = r.u64()? as usize;
        let eigen = (0..n).map(|_| Ok((r.u64()? as usize, decode_curve(r)?))).collect::<Result<Vec<_>, String>>()?;
        let n = r.u64()? as usize;
        let random = (0..n).map(|_| decode_curve(r)).collect::<Result<Vec<_>, String>>()?;
        Ok(Self { eigen, random })
    }
}

/// Corrupt entries are logged and recomputed.
fn cache_miss<T>(e: CliError) -> CliResult<Option<T>> {
    match e {
        CliError::Cache { path, reason } => {
            info!("discarding cache entry {path}: {reason}");
            Ok(None)
        }
        e => Err(e),
    }
}

/// Pairs of curves whose `Λ` ordering flips somewhere along α, counting
/// only differences larger than the combined standard errors.
pub fn crossing_pairs(curves: &[&OccupationCurve]) -> usize {
    let mut count = 0;
    for (i, a) in curves.iter().enumerate() {
        for b in &curves[i + 1..] {
            let signs: Vec<i8> = a
                .points
                .iter()
                .zip(&b.points)
                .filter_map(|(p, q)| {
                    let d = p.lambda.value - q.lambda.value;
                    let e = p.lambda.std_error.hypot(q.lambda.std_error);
                    (d.abs() > e).then_some(if d > 0.0 { 1 } else { -1 })
                })
                .collect();
            if signs.windows(2).any(|w| w[0] != w[1]) {
                count += 1;
            }
        }
    }
    count
}

/// Shell-sample seed for eigenstate `k`.
pub fn state_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64 + 1)
}

fn key(text: &str) -> String {
    hex(&Sha256::digest(text.as_bytes())[..10])
}
