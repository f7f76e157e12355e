//! On-disk cache of expensive results in a small versioned binary format,
//! guarded by advisory file locks.
//!
//! File layout (little endian): magic `DICKEBIN`, format version `u32`,
//! kind string (`u32` length + UTF-8), payload length `u64`, payload, and the
//! first 8 bytes of the payload's SHA-256.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use dicke_core::basis::{BasisSpec, Parity, Sector};
use dicke_core::orbits::PeriodicOrbit;
use dicke_core::params::ModelParams;
use dicke_core::phase::PhasePoint;
use dicke_core::spectrum::Spectrum;
use log::info;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"DICKEBIN";
pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Types stored in the cache.
pub trait Codec: Sized {
    const KIND: &'static str;
    fn encode(&self, w: &mut Writer);
    fn decode(r: &mut Reader) -> Result<Self, String>;
}

#[derive(Default)]
pub struct Writer {
    pub buf: Vec<u8>,
}

impl Writer {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    pub fn f64s(&mut self, v: &[f64]) {
        self.u64(v.len() as u64);
        for x in v {
            self.f64(*x);
        }
    }
    pub fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }
}

pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or("unexpected end of data")?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    pub fn u8(&mut self) -> Result<u8, String> {
        Ok(self.take(1)?[0])
    }
    pub fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    pub fn u64(&mut self) -> Result<u64, String> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    pub fn f64s(&mut self) -> Result<Vec<f64>, String> {
        let n = self.u64()? as usize;
        if n > (self.data.len() - self.pos) / 8 {
            return Err("array length exceeds data".into());
        }
        (0..n).map(|_| self.f64()).collect()
    }
    pub fn str(&mut self) -> Result<String, String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| e.to_string())
    }
    pub fn finished(&self) -> bool {
        self.pos == self.data.len()
    }
}

fn checksum(payload: &[u8]) -> [u8; 8] {
    Sha256::digest(payload)[..8].try_into().unwrap()
}

pub fn to_bytes<T: Codec>(value: &T) -> Vec<u8> {
    let mut payload = Writer::default();
    value.encode(&mut payload);
    let mut w = Writer::default();
    w.buf.extend_from_slice(MAGIC);
    w.u32(CACHE_FORMAT_VERSION);
    w.str(T::KIND);
    w.u64(payload.buf.len() as u64);
    w.buf.extend_from_slice(&payload.buf);
    w.buf.extend_from_slice(&checksum(&payload.buf));
    w.buf
}

pub fn from_bytes<T: Codec>(data: &[u8]) -> Result<T, String> {
    let mut r = Reader::new(data);
    if r.take(8)? != MAGIC {
        return Err("bad magic".into());
    }
    let version = r.u32()?;
    if version != CACHE_FORMAT_VERSION {
        return Err(format!("format version {version}, expected {CACHE_FORMAT_VERSION}"));
    }
    let kind = r.str()?;
    if kind != T::KIND {
        return Err(format!("holds '{kind}', expected '{}'", T::KIND));
    }
    let len = r.u64()? as usize;
    let payload = r.take(len)?;
    if r.take(8)? != checksum(payload) {
        return Err("checksum mismatch".into());
    }
    let mut pr = Reader::new(payload);
    let value = T::decode(&mut pr)?;
    if !pr.finished() {
        return Err("trailing bytes in payload".into());
    }
    Ok(value)
}

/// Cache directory with one file per entry and a sibling `.lock` file.
#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn open(root: impl Into<PathBuf>) -> CliResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path<T: Codec>(&self, key: &str) -> PathBuf {
        self.root.join(format!("{}-{key}.bin", T::KIND))
    }

    fn lock_file(&self, path: &Path) -> CliResult<File> {
        let lock = path.with_extension("lock");
        OpenOptions::new().create(true).truncate(false).write(true).open(&lock).map_err(|e| CliError::io(&lock, e))
    }

    /// Entry `key`, if present and valid. Holds a shared lock while reading.
    pub fn get<T: Codec>(&self, key: &str) -> CliResult<Option<T>> {
        let path = self.path::<T>(key);
        let lock = self.lock_file(&path)?;
        lock.lock_shared().map_err(|e| CliError::io(&path, e))?;
        self.read_unlocked(&path)
    }

    fn read_unlocked<T: Codec>(&self, path: &Path) -> CliResult<Option<T>> {
        match fs::read(path) {
            Ok(data) => from_bytes(&data)
                .map(Some)
                .map_err(|reason| CliError::Cache { path: path.display().to_string(), reason }),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(CliError::io(path, e)),
        }
    }

    fn write_unlocked<T: Codec>(&self, path: &Path, value: &T) -> CliResult<()> {
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let mut f = File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        f.write_all(&to_bytes(value)).and_then(|_| f.sync_all()).map_err(|e| CliError::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
    }

    pub fn put<T: Codec>(&self, key: &str, value: &T) -> CliResult<()> {
        let path = self.path::<T>(key);
        let lock = self.lock_file(&path)?;
        lock.lock().map_err(|e| CliError::io(&path, e))?;
        self.write_unlocked(&path, value)
    }

    /// Cached value for `key`, computing and storing it under an exclusive
    /// lock on a miss; concurrent callers wait instead of recomputing. A
    /// corrupt or outdated entry is treated as a miss. Returns whether the
    /// cache was hit.
    pub fn get_or_compute<T: Codec>(
        &self,
        key: &str,
        compute: impl FnOnce() -> CliResult<T>,
    ) -> CliResult<(T, bool)> {
        let path = self.path::<T>(key);
        let lock = self.lock_file(&path)?;
        lock.lock().map_err(|e| CliError::io(&path, e))?;
        match self.read_unlocked::<T>(&path) {
            Ok(Some(v)) => {
                info!("cache hit: {}", path.display());
                return Ok((v, true));
            }
            Ok(None) => {}
            Err(CliError::Cache { reason, .. }) => info!("discarding cache entry {}: {reason}", path.display()),
            Err(e) => return Err(e),
        }
        info!("cache miss: {}", path.display());
        let v = compute()?;
        self.write_unlocked(&path, &v)?;
        Ok((v, false))
    }
}

fn encode_params(w: &mut Writer, p: &ModelParams) {
    w.f64(p.omega);
    w.f64(p.omega0);
    w.f64(p.gamma);
    w.f64(p.j());
}

fn decode_params(r: &mut Reader) -> Result<ModelParams, String> {
    let (a, b, c, d) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    ModelParams::new(a, b, c, d).map_err(|e| e.to_string())
}

impl Codec for Spectrum {
    const KIND: &'static str = "spectrum";

    fn encode(&self, w: &mut Writer) {
        encode_params(w, &self.params);
        w.u32(self.basis.two_j());
        w.u64(self.basis.n_max() as u64);
        w.u8(match self.basis.sector() {
            Sector::Both => 0,
            Sector::Only(Parity::Positive) => 1,
            Sector::Only(Parity::Negative) => 2,
        });
        w.f64s(self.energies());
        w.f64s(self.coefficients());
        w.u64(self.len() as u64);
        for &c in self.converged_mask() {
            w.u8(c as u8);
        }
    }

    fn decode(r: &mut Reader) -> Result<Self, String> {
        let params = decode_params(r)?;
        let two_j = r.u32()?;
        let n_max = r.u64()? as usize;
        let sector = match r.u8()? {
            0 => Sector::Both,
            1 => Sector::Only(Parity::Positive),
            2 => Sector::Only(Parity::Negative),
            s => return Err(format!("unknown sector tag {s}")),
        };
        let basis = BasisSpec::from_two_j(two_j, n_max, sector);
        let energies = r.f64s()?;
        let coefficients = r.f64s()?;
        let n = r.u64()? as usize;
        let converged = (0..n).map(|_| r.u8().map(|b| b != 0)).collect::<Result<Vec<_>, _>>()?;
        Spectrum::from_parts(params, basis, energies, coefficients, converged).map_err(|e| e.to_string())
    }
}

/// Orbit catalog of one hunt.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCatalog {
    pub orbits: Vec<PeriodicOrbit>,
}

impl Codec for OrbitCatalog {
    const KIND: &'static str = "orbits";

    fn encode(&self, w: &mut Writer) {
        w.u64(self.orbits.len() as u64);
        for o in &self.orbits {
            w.f64s(&o.x0.to_array());
            w.f64(o.period);
            w.f64(o.eps);
            for row in &o.monodromy {
                for v in row {
                    w.f64(*v);
                }
            }
            w.f64(o.lyapunov);
            w.f64(o.residual);
            w.u64(o.iterations as u64);
            w.str(&o.label);
        }
    }

    fn decode(r: &mut Reader) -> Result<Self, String> {
        let n = r.u64()? as usize;
        let mut orbits = Vec::with_capacity(n.min(1 << 16));
        for _ in 0..n {
            let x = r.f64s()?;
            let x0: [f64; 4] = x.try_into().map_err(|_| "phase point needs 4 components")?;
            let period = r.f64()?;
            let eps = r.f64()?;
            let mut monodromy = [[0.0; 4]; 4];
            for row in monodromy.iter_mut() {
                for v in row.iter_mut() {
                    *v = r.f64()?;
                }
            }
            orbits.push(PeriodicOrbit {
                x0: PhasePoint::from_array(x0),
                period,
                eps,
                monodromy,
                lyapunov: r.f64()?,
                residual: r.f64()?,
                iterations: r.u64()? as usize,
                label: r.str()?,
            });
        }
        Ok(OrbitCatalog { orbits })
    }
}
