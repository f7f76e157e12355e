//! Truncated Fock ⊗ Dicke product basis, optionally restricted to one parity
//! sector of `Π = exp(iπ(a†a + J_z + j))`.
//!
//! States are labelled by the photon number `n ∈ [0, n_max]` and the spin
//! index `k = j + m ∈ [0, 2j]`, so the parity of `(n, m)` is `(−1)^(n+k)`.
//! The linear order is lexicographic in `n`, then `m`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Parity eigenvalue `±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Positive,
    Negative,
}

impl Parity {
    pub fn of(n: usize, k: u32) -> Self {
        if (n + k as usize) % 2 == 0 {
            Parity::Positive
        } else {
            Parity::Negative
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Parity::Positive => 1,
            Parity::Negative => -1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Parity::Positive => Parity::Negative,
            Parity::Negative => Parity::Positive,
        }
    }
}

/// Which part of the Hilbert space a basis covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sector {
    Both,
    Only(Parity),
}

impl Sector {
    pub fn contains(self, n: usize, k: u32) -> bool {
        match self {
            Sector::Both => true,
            Sector::Only(p) => Parity::of(n, k) == p,
        }
    }
}

/// One photon-number row of the basis: indices `start..start + len` hold the
/// spin indices `k_first, k_first + k_step, …`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Row {
    pub n: usize,
    pub start: usize,
    pub k_first: u32,
    pub k_step: u32,
    pub len: usize,
}

impl Row {
    pub fn k(&self, i: usize) -> u32 {
        self.k_first + self.k_step * i as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSpec {
    two_j: u32,
    n_max: usize,
    sector: Sector,
    row_start: Vec<usize>,
}

impl BasisSpec {
    pub fn new(params: &ModelParams, n_max: usize, sector: Sector) -> Self {
        Self::from_two_j(params.two_j(), n_max, sector)
    }

    pub fn from_two_j(two_j: u32, n_max: usize, sector: Sector) -> Self {
        let mut row_start = Vec::with_capacity(n_max + 2);
        let mut acc = 0;
        for n in 0..=n_max {
            row_start.push(acc);
            acc += row_len(two_j, sector, n);
        }
        row_start.push(acc);
        Self { two_j, n_max, sector, row_start }
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    pub fn j(&self) -> f64 {
        self.two_j as f64 / 2.0
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.row_start[self.n_max + 1]
    }

    pub fn check_params(&self, params: &ModelParams) -> Result<()> {
        if params.two_j() != self.two_j {
            return Err(Error::BasisMismatch { basis_two_j: self.two_j, params_two_j: params.two_j() });
        }
        Ok(())
    }

    pub fn row(&self, n: usize) -> Row {
        let (k_first, k_step) = match self.sector {
            Sector::Both => (0, 1),
            Sector::Only(p) => {
                let want_even = (n % 2 == 0) == (p == Parity::Positive);
                (if want_even { 0 } else { 1 }, 2)
            }
        };
        Row {
            n,
            start: self.row_start[n],
            k_first,
            k_step,
            len: self.row_start[n + 1] - self.row_start[n],
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = Row> + '_ {
        (0..=self.n_max).map(move |n| self.row(n))
    }

    /// `(n, k)` label of a linear index.
    pub fn state(&self, index: usize) -> (usize, u32) {
        assert!(index < self.dim(), "basis index {index} out of range");
        let n = self.row_start.partition_point(|&s| s <= index) - 1;
        let row = self.row(n);
        (n, row.k(index - row.start))
    }

    /// `(n, m)` label of a linear index, with `m = k − j`.
    pub fn state_nm(&self, index: usize) -> (usize, f64) {
        let (n, k) = self.state(index);
        (n, k as f64 - self.j())
    }

    pub fn index_of(&self, n: usize, k: u32) -> Option<usize> {
        if n > self.n_max || k > self.two_j || !self.sector.contains(n, k) {
            return None;
        }
        let row = self.row(n);
        Some(row.start + ((k - row.k_first) / row.k_step) as usize)
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.rows().flat_map(|row| (0..row.len).map(move |i| (row.n, row.k(i))))
    }
}

fn row_len(two_j: u32, sector: Sector, n: usize) -> usize {
    let total = two_j as usize + 1;
    match sector {
        Sector::Both => total,
        Sector::Only(p) => {
            let evens = two_j as usize / 2 + 1;
            let want_even = (n % 2 == 0) == (p == Parity::Positive);
            if want_even {
                evens
            } else {
                total - evens
            }
        }
    }
}
