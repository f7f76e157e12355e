//! The subcommands. Each one runs inside a [`Session`], writes its tables
//! under the output directory and finishes with a run manifest.

use std::path::PathBuf;

use dicke_core::coherent::StateVector;
use dicke_core::dos::{dos_fraction, semiclassical_dos};
use dicke_core::metrics::HusimiGrid;
use dicke_core::orbits::{orbit_violations, SeedOutcome};
use log::{info, warn};

use crate::cache::OrbitCatalog;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{curves_table, f, grid_table, orbit_table, render_grid, slug, Table};
use crate::pipeline::{crossing_pairs, staircase, Session, SHELL_TOL};

/// Pixels per grid cell in rendered images.
const PNG_SCALE: u32 = 4;

/// Spectrum summary: cutoff, dimensions, converged count in the window and
/// the ground energy.
pub fn spectrum(config: RunConfig) -> CliResult<PathBuf> {
    let mut s = Session::new("spectrum", config)?;
    let spec = s.spectrum()?;
    let window = s.window_states(&spec);
    let (lo, hi) = s.config.window();
    let gs = s.quantum_ground_energy()?;
    let h = s.hash();
    let meta = [
        ("n_max", s.n_max().to_string()),
        ("dimension", spec.basis.dim().to_string()),
        ("parity", format!("{:?}", s.config.parity).to_lowercase()),
        ("window", format!("{},{}", f(lo), f(hi))),
        ("converged_in_window", window.len().to_string()),
        ("ground_energy_classical", f(s.params.ground_energy())),
        ("ground_energy_quantum", f(gs)),
    ];
    let mut t = Table::new(&h, "spectrum", &meta, &["index", "eps", "converged", "in_window"]);
    for k in 0..spec.len() {
        let e = spec.energy(k);
        let inside = e >= lo && e < hi;
        t.row(&[k.to_string(), f(e), u8::from(spec.is_converged(k)).to_string(), u8::from(inside).to_string()]);
    }
    s.write("spectrum.txt", &t)?;
    println!(
        "dimension {} (n_max {}), {} converged states in [{lo}, {hi}), ground energy {gs:.8} (classical {:.8})",
        spec.basis.dim(),
        s.n_max(),
        window.len(),
        s.params.ground_energy()
    );
    s.finish()
}

/// `𝔏_α` and `Λ_α` for every window eigenstate and for the random baseline.
pub fn occupations(config: RunConfig) -> CliResult<PathBuf> {
    let mut s = Session::new("occupations", config)?;
    let spec = s.spectrum()?;
    let occ = s.occupations(&spec)?;
    let h = s.hash();
    let eigen: Vec<_> = occ.eigen.iter().map(|(_, c)| c).collect();
    let crossings = crossing_pairs(&eigen);
    let meta = [
        ("samples", s.config.samples.to_string()),
        ("states", eigen.len().to_string()),
        ("crossing_pairs", crossings.to_string()),
    ];
    s.write("occupations.txt", &curves_table(&h, "occupations", &meta, &eigen))?;
    let random: Vec<_> = occ.random.iter().collect();
    let meta = [
        ("eps", f(s.config.window_center)),
        ("random_window_width", f(s.config.random_window_width)),
    ];
    s.write("random-occupations.txt", &curves_table(&h, "random-occupations", &meta, &random))?;
    let mut t = Table::new(&h, "random-lambda-mean", &meta, &["alpha", "lambda_mean", "std_error"]);
    for (a, m, e) in occ.random_mean() {
        t.row(&[f(a), f(m), f(e)]);
    }
    s.write("random-lambda-mean.txt", &t)?;
    println!("{} eigenstate curves, {} random curves, {crossings} crossing pairs", eigen.len(), random.len());
    s.finish()
}

/// Projected Husimi moment grids for the selected states and one random
/// state.
pub fn husimi_grid(config: RunConfig) -> CliResult<PathBuf> {
    let mut s = Session::new("husimi-grid", config)?;
    let spec = s.spectrum()?;
    let states = s.select_states(&spec)?;
    let alphas = s.config.alphas.clone();
    let h = s.hash();
    let mut summary =
        Table::new(&h, "grid-summary", &[], &["label", "eps", "alpha", "max", "mean", "contrast", "unconverged_cells"]);
    let mut emit = |s: &mut Session, grids: Vec<HusimiGrid>| -> CliResult<()> {
        for g in grids {
            let name = format!("grid-{}-a{}", slug(&g.label), f(g.alpha));
            s.write(&format!("{name}.txt"), &grid_table(&h, &g))?;
            if s.config.png {
                let path = s.out_dir().join(format!("{name}.png"));
                render_grid(&g, &path, PNG_SCALE)?;
                s.manifest.output(&path);
            }
            let bad = g.unconverged.iter().filter(|b| **b).count();
            summary.row(&[slug(&g.label), f(g.eps), f(g.alpha), f(g.max()), f(g.mean()), f(g.contrast()), bad.to_string()]);
        }
        Ok(())
    };
    for k in states {
        let psi = StateVector::eigenstate(&spec, k);
        let grids = s.grids(&psi, &format!("state-{k}"), &alphas, spec.energy(k))?;
        emit(&mut s, grids)?;
    }
    let random = s.random_states(&spec, 1)?.remove(0);
    let grids = s.grids(&random, &random.label, &alphas, s.config.window_center)?;
    emit(&mut s, grids)?;
    s.write("grid-summary.txt", &summary)?;
    s.finish()
}

/// Orbit hunt over the selected states: the catalog with each orbit's
/// scarring measure for the state it came from, and a per-seed report.
pub fn orbit_hunt(config: RunConfig) -> CliResult<PathBuf> {
    let mut s = Session::new("orbit-hunt", config)?;
    let spec = s.spectrum()?;
    let states = s.select_states(&spec)?;
    let h = s.hash();
    let mut seeds = Table::new(&h, "seed-report", &[], &["state", "seed", "outcome", "detail"]);
    let mut all = Vec::new();
    for k in states {
        let psi = StateVector::eigenstate(&spec, k);
        let (orbits, outcomes) = s.hunt(&psi, &format!("state-{k}"), spec.energy(k))?;
        for (i, o) in outcomes.iter().enumerate() {
            let (what, detail) = match o {
                SeedOutcome::Converged(orbit) => ("converged", format!("T={}", f(orbit.period))),
                SeedOutcome::NoReturn => ("no-return", "-".to_string()),
                SeedOutcome::Failed(e) => ("failed", slug(&e.to_string())),
            };
            seeds.row(&[k.to_string(), i.to_string(), what.into(), detail]);
        }
        if orbits.is_empty() {
            s.manifest.note(format!("state {k}: no orbit found"));
        }
        for o in orbits {
            let sample = s.shell_sample(o.eps, s.config.seed)?;
            let p = s.scar_measure(&psi, &o, &sample)?;
            all.push((o, p));
        }
    }
    let found: Vec<_> = all.iter().map(|(o, _)| o.clone()).collect();
    let unique = dicke_core::orbits::dedupe_orbits(&s.params, found)?;
    for o in &unique {
        let v = orbit_violations(o);
        if !v.is_empty() {
            return Err(CliError::Numerical(dicke_core::Error::InvalidArgument(format!(
                "cataloged orbit fails invariants: {}",
                v.join(", ")
            ))));
        }
    }
    let rows: Vec<_> = unique
        .iter()
        .map(|o| (o.clone(), all.iter().find(|(x, _)| x == o).map(|(_, p)| *p)))
        .collect();
    let t = orbit_table(&h, &rows);
    s.write("orbits.txt", &t)?;
    s.write("seeds.txt", &seeds)?;
    let key = s.catalog_key();
    s.cache.put(&key, &OrbitCatalog { orbits: unique.clone() })?;
    println!("{} distinct orbits", unique.len());
    for (i, o) in unique.iter().enumerate() {
        println!("  {i}: T = {:.6}, lambda = {:.4}, T*lambda = {:.4} ({})", o.period, o.lyapunov, o.t_lambda(), o.label);
    }
    s.finish()
}

/// Scarring measures of the selected states and the random states against
/// cataloged orbits.
pub fn scar_measure(config: RunConfig, orbit_ids: Option<Vec<usize>>) -> CliResult<PathBuf> {
    let mut s = Session::new("scar-measure", config)?;
    let spec = s.spectrum()?;
    let catalog = s.catalog(&spec)?.0;
    let ids = match orbit_ids {
        Some(ids) => {
            if let Some(bad) = ids.iter().find(|&&i| i >= catalog.orbits.len()) {
                let available: Vec<String> = (0..catalog.orbits.len()).map(|i| i.to_string()).collect();
                return Err(CliError::Config(format!(
                    "no orbit with id {bad}; available ids: [{}]",
                    available.join(", ")
                )));
            }
            ids
        }
        None => (0..catalog.orbits.len()).collect(),
    };
    let states = s.select_states(&spec)?;
    let random = s.random_states(&spec, s.config.random_states)?;
    let h = s.hash();
    let mut t = Table::new(
        &h,
        "scar-measure",
        &[("n_time", s.config.n_time.to_string())],
        &["state", "eps_state", "orbit", "eps_orbit", "T", "lambda", "T_lambda", "P", "P_se"],
    );
    for id in ids {
        let orbit = &catalog.orbits[id];
        let sample = s.shell_sample(orbit.eps, s.config.seed)?;
        for &k in &states {
            let eps = spec.energy(k);
            if (eps - orbit.eps).abs() > SHELL_TOL {
                warn!("state {k} (eps {eps:.6}) and orbit {id} (eps {:.6}) lie on different shells", orbit.eps);
            }
            let p = s.scar_measure(&StateVector::eigenstate(&spec, k), orbit, &sample)?;
            t.row(&row(format!("state-{k}"), eps, id, orbit, p));
        }
        for r in &random {
            let p = s.scar_measure(r, orbit, &sample)?;
            t.row(&row(r.label.clone(), s.config.window_center, id, orbit, p));
        }
        info!("orbit {id} done");
    }
    s.write("scar-measure.txt", &t)?;
    s.finish()
}

fn row(
    label: String,
    eps: f64,
    id: usize,
    o: &dicke_core::orbits::PeriodicOrbit,
    p: dicke_core::metrics::Estimate,
) -> Vec<String> {
    vec![
        label,
        f(eps),
        id.to_string(),
        f(o.eps),
        f(o.period),
        f(o.lyapunov),
        f(o.t_lambda()),
        f(p.value),
        f(p.std_error),
    ]
}

/// Semiclassical density of states on `[ε₀, 2ω₀]`, and optionally the
/// quantum staircase up to `staircase_top`.
pub fn dos(config: RunConfig, staircase_top: Option<f64>) -> CliResult<PathBuf> {
    let mut s = Session::new("dos", config)?;
    let p = s.params;
    let e0 = p.ground_energy();
    let top = 2.0 * p.omega0;
    let n = s.config.dos_points.max(2);
    let h = s.hash();
    let meta = [("plateau", f(2.0 * p.j() * p.j() / p.omega)), ("seams", format!("{},{}", f(-p.omega0), f(p.omega0)))];
    let mut t = Table::new(&h, "dos", &meta, &["eps", "nu", "fraction", "branch"]);
    for i in 0..n {
        let e = e0 + (top - e0) * i as f64 / (n - 1) as f64;
        let branch = if e < -p.omega0 {
            0
        } else if e < p.omega0 {
            1
        } else {
            2
        };
        t.row(&[f(e), f(semiclassical_dos(e, &p)?), f(dos_fraction(e, &p)?), branch.to_string()]);
    }
    s.write("dos.txt", &t)?;
    if let Some(st) = staircase_top {
        let from = s.quantum_ground_energy()?;
        if st <= from {
            return Err(CliError::Config(format!("staircase top {st} lies below the ground energy {from}")));
        }
        let grid: Vec<f64> = (0..n).map(|i| from + (st - from) * i as f64 / (n - 1) as f64).collect();
        // Counts start just below the ground level so that it is included.
        let base = from - 1e-9;
        let rows = staircase(&p, &grid, base)?;
        let meta = [("ground_energy", f(from))];
        let mut t = Table::new(&h, "staircase", &meta, &["eps", "quantum_count", "semiclassical_count"]);
        for (e, q, c) in rows {
            t.row(&[f(e), q.to_string(), f(c)]);
        }
        s.write("staircase.txt", &t)?;
    }
    s.finish()
}
