//! Columnar text outputs and optional raster images.
//!
//! Every text file starts with `#` header lines:
//!
//! ```text
//! # dicke format_version=1
//! # config_hash=<sha256 hex>
//! # kind=<file kind>
//! # <key>=<value>          (zero or more)
//! # columns: <name> <name> ...
//! ```
//!
//! followed by whitespace-separated rows. Floats use the shortest
//! representation that round-trips, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dicke_core::metrics::{Estimate, HusimiGrid, OccupationCurve};
use dicke_core::orbits::PeriodicOrbit;

use crate::error::{CliError, CliResult};

pub const FORMAT_VERSION: u32 = 1;

/// Text table under construction.
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(config_hash: &str, kind: &str, meta: &[(&str, String)], columns: &[&str]) -> Self {
        let mut text = format!("# dicke format_version={FORMAT_VERSION}\n# config_hash={config_hash}\n# kind={kind}\n");
        for (k, v) in meta {
            let _ = writeln!(text, "# {k}={v}");
        }
        let _ = writeln!(text, "# columns: {}", columns.join(" "));
        Self { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(" "));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(path, &self.text).map_err(|e| CliError::io(path, e))
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e15)`.
pub fn f(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// File-name-safe form of a label.
pub fn slug(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

/// Occupation curves, one row per (curve, α).
pub fn curves_table(hash: &str, kind: &str, meta: &[(&str, String)], curves: &[&OccupationCurve]) -> Table {
    let mut t = Table::new(
        hash,
        kind,
        meta,
        &["label", "eps", "alpha", "occupation", "occupation_se", "lambda", "lambda_se"],
    );
    for c in curves {
        for p in &c.points {
            t.row(&[
                slug(&c.label),
                f(c.eps),
                f(p.alpha),
                f(p.occupation.value),
                f(p.occupation.std_error),
                f(p.lambda.value),
                f(p.lambda.std_error),
            ]);
        }
    }
    t
}

/// `Q P value converged`; empty cells carry `nan`, and `converged` is 0 for
/// cells whose fibre quadrature was flagged.
pub fn grid_table(hash: &str, grid: &HusimiGrid) -> Table {
    let meta = [
        ("label", grid.label.clone()),
        ("alpha", f(grid.alpha)),
        ("eps", f(grid.eps)),
        ("cells", grid.spec.cells.to_string()),
        ("fibre_nodes", grid.nodes.to_string()),
    ];
    let mut t = Table::new(hash, "husimi-grid", &meta, &["Q", "P", "value", "converged"]);
    let n = grid.spec.cells;
    for iq in 0..n {
        for ip in 0..n {
            let (q, p) = grid.spec.center(iq, ip);
            let v = grid.get(iq, ip).map_or_else(|| "nan".to_string(), f);
            let ok = if grid.unconverged[iq * n + ip] { "0" } else { "1" };
            t.row(&[f(q), f(p), v, ok.into()]);
        }
    }
    t
}

/// Orbit catalog, one row per orbit, with the scarring measure of the state
/// that produced it when known (`nan` otherwise).
pub fn orbit_table(hash: &str, orbits: &[(PeriodicOrbit, Option<Estimate>)]) -> Table {
    let mut t = Table::new(
        hash,
        "orbit-catalog",
        &[],
        &["id", "eps", "T", "lambda", "T_lambda", "q", "p", "Q", "P", "residual", "scar", "scar_se", "label"],
    );
    for (i, (o, scar)) in orbits.iter().enumerate() {
        let (v, e) = scar.map_or(("nan".into(), "nan".into()), |p| (f(p.value), f(p.std_error)));
        t.row(&[
            i.to_string(),
            f(o.eps),
            f(o.period),
            f(o.lyapunov),
            f(o.t_lambda()),
            f(o.x0.q),
            f(o.x0.p),
            f(o.x0.atom_q),
            f(o.x0.atom_p),
            f(o.residual),
            v,
            e,
            slug(&o.label),
        ]);
    }
    t
}

/// Fixed colormap for rendered grids: matplotlib's viridis.
pub const COLORMAP: &str = "viridis";

/// Renders a grid normalized to its maximum (one pixel per cell, `P` up,
/// empty cells black) and upscaled by `scale`.
pub fn render_grid(grid: &HusimiGrid, path: &Path, scale: u32) -> CliResult<()> {
    let n = grid.spec.cells as u32;
    let top = grid.max();
    let img = image::RgbImage::from_fn(n * scale, n * scale, |x, y| {
        let iq = (x / scale) as usize;
        let ip = (n - 1 - y / scale) as usize;
        match grid.get(iq, ip) {
            Some(v) if top > 0.0 => {
                let c = colorous::VIRIDIS.eval_continuous((v / top).clamp(0.0, 1.0));
                image::Rgb([c.r, c.g, c.b])
            }
            _ => image::Rgb([0, 0, 0]),
        }
    });
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    img.save(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: std::io::Error::other(e) })
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}
