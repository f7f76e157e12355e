//! Phase-space localization of Dicke-model eigenstates.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, caching and the command-line front
//! end live in the `dicke` crate.

#![no_std]
// `num_traits::Float` supplies the float methods without std; when std is
// linked (tests, or feature unification with std users) the inherent methods
// make those imports redundant.
#![allow(unused_imports)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod basis;
pub mod coherent;
pub mod dos;
mod dop853_tableau;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod integrate;
pub mod linalg;
pub mod metrics;
pub mod orbits;
pub mod params;
pub mod phase;
pub mod quad;
pub mod shell;
pub mod spectrum;

pub use error::{Error, Result};
