//! Run configuration: a flat TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use dicke_core::basis::{Parity, Sector};
use dicke_core::orbits::HuntSettings;
use dicke_core::params::ModelParams;
use dicke_core::shell::Proposal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Environment variable naming the default cache root.
pub const CACHE_ENV: &str = "DICKE_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityChoice {
    Positive,
    Negative,
    Both,
}

impl ParityChoice {
    pub fn sector(self) -> Sector {
        match self {
            ParityChoice::Positive => Sector::Only(Parity::Positive),
            ParityChoice::Negative => Sector::Only(Parity::Negative),
            ParityChoice::Both => Sector::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerChoice {
    UniformBox,
    Arcsine,
}

impl SamplerChoice {
    pub fn proposal(self) -> Proposal {
        match self {
            SamplerChoice::UniformBox => Proposal::UniformBox,
            SamplerChoice::Arcsine => Proposal::Arcsine,
        }
    }
}

/// Every knob of a run. Field names are the TOML keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub omega: f64,
    pub omega0: f64,
    pub gamma: f64,
    pub j: f64,
    /// Bosonic cutoff; absent means derived from the window top.
    pub n_max: Option<usize>,
    pub parity: ParityChoice,
    pub window_center: f64,
    pub window_width: f64,
    pub tail_tol: f64,
    pub alphas: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub sampler: SamplerChoice,
    pub random_states: usize,
    pub random_window_width: f64,
    pub grid: usize,
    pub grid_nodes: usize,
    pub t_max: f64,
    pub candidate_tol: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub peak_threshold: f64,
    pub peak_radius: usize,
    pub max_peaks: usize,
    pub n_time: usize,
    /// `most-localized:N` or a comma list of state indices.
    pub states: String,
    pub png: bool,
    pub dos_points: usize,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            omega0: 1.0,
            gamma: 1.0,
            j: 30.0,
            n_max: None,
            parity: ParityChoice::Positive,
            window_center: -0.5,
            window_width: 0.3,
            tail_tol: dicke_core::spectrum::DEFAULT_TAIL_TOL,
            alphas: dicke_core::metrics::default_alphas(),
            samples: 200_000,
            seed: 1,
            sampler: SamplerChoice::UniformBox,
            random_states: 20,
            random_window_width: 0.3,
            grid: 60,
            grid_nodes: 256,
            t_max: 40.0,
            candidate_tol: 0.3,
            newton_tol: 1e-10,
            max_iter: 50,
            peak_threshold: 0.3,
            peak_radius: 2,
            max_peaks: 8,
            n_time: 128,
            states: "most-localized:4".into(),
            png: false,
            dos_points: 401,
            cache_dir: None,
            out_dir: PathBuf::from("dicke-out"),
            threads: None,
        }
    }
}

/// Values given on the command line; `None` keeps the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub j: Option<f64>,
    pub gamma: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub alphas: Option<Vec<f64>>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub states: Option<String>,
    pub png: bool,
}

/// Which states a command acts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateSelector {
    MostLocalized(usize),
    Indices(Vec<usize>),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("bad config file: {e}")))
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml(&text)
            }
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.j {
            self.j = v;
        }
        if let Some(v) = o.gamma {
            self.gamma = v;
        }
        if let Some((lo, hi)) = o.window {
            self.window_center = 0.5 * (lo + hi);
            self.window_width = hi - lo;
        }
        if let Some(v) = &o.alphas {
            self.alphas = v.clone();
        }
        if let Some(v) = o.samples {
            self.samples = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.grid {
            self.grid = v;
        }
        if let Some(v) = &o.cache_dir {
            self.cache_dir = Some(v.clone());
        }
        if let Some(v) = &o.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = o.threads {
            self.threads = Some(v);
        }
        if let Some(v) = &o.states {
            self.states = v.clone();
        }
        if o.png {
            self.png = true;
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        self.params()?;
        if !(self.window_width > 0.0 && self.window_center.is_finite()) {
            return bad(format!("window width must be positive, got {}", self.window_width));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return bad(format!("alpha values must be non-negative, got {a}"));
        }
        if self.alphas.is_empty() {
            return bad("alpha list is empty".into());
        }
        if self.samples < 1000 {
            return bad(format!("at least 1000 shell samples are required, got {}", self.samples));
        }
        if self.grid < 4 || self.grid > 2000 {
            return bad(format!("grid must have between 4 and 2000 cells per axis, got {}", self.grid));
        }
        if self.n_time < 16 {
            return bad(format!("n_time must be at least 16, got {}", self.n_time));
        }
        if !(self.random_window_width > 0.0) || self.random_states == 0 {
            return bad("random-state baseline needs a positive window and at least one state".into());
        }
        if !(self.t_max > 0.0 && self.candidate_tol > 0.0 && self.newton_tol > 0.0) {
            return bad("orbit-hunter tolerances and t_max must be positive".into());
        }
        if !(self.tail_tol >= 0.0) {
            return bad(format!("tail_tol must be non-negative, got {}", self.tail_tol));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        self.state_selector()?;
        Ok(())
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        ModelParams::new(self.omega, self.omega0, self.gamma, self.j).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn window(&self) -> (f64, f64) {
        (self.window_center - 0.5 * self.window_width, self.window_center + 0.5 * self.window_width)
    }

    pub fn hunt_settings(&self) -> HuntSettings {
        HuntSettings {
            t_max: self.t_max,
            candidate_tol: self.candidate_tol,
            newton_tol: self.newton_tol,
            max_iter: self.max_iter,
            peak_threshold: self.peak_threshold,
            peak_radius: self.peak_radius,
            max_peaks: self.max_peaks,
            ..HuntSettings::default()
        }
    }

    pub fn state_selector(&self) -> CliResult<StateSelector> {
        parse_selector(&self.states)
    }

    /// Cache root: config value, then the environment variable, then
    /// `<out_dir>/cache`.
    pub fn cache_root(&self) -> PathBuf {
        self.cache_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| self.out_dir.join("cache"))
    }

    /// SHA-256 of the canonical JSON of every field that can change a
    /// number in the output (directories, threads and image output excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.cache_dir = None;
        c.out_dir = PathBuf::new();
        c.threads = None;
        c.png = false;
        let json = serde_json::to_string(&c).expect("config serializes");
        hex(&Sha256::digest(json.as_bytes()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn parse_selector(s: &str) -> CliResult<StateSelector> {
    let s = s.trim();
    if let Some(n) = s.strip_prefix("most-localized:") {
        return n
            .parse()
            .map(StateSelector::MostLocalized)
            .map_err(|_| CliError::Config(format!("bad state count in '{s}'")));
    }
    s.split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map(StateSelector::Indices)
        .map_err(|_| CliError::Config(format!("state selector must be 'most-localized:N' or indices, got '{s}'")))
}

/// `"a,b,c"` as floats.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"))).collect()
}

/// `"lo,hi"` energy interval.
pub fn parse_window(s: &str) -> Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        [lo, hi] if hi > lo => Ok((*lo, *hi)),
        _ => Err(format!("window must be 'lo,hi' with lo < hi, got '{s}'")),
    }
}
