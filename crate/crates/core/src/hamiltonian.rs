//! Matrix of the Dicke Hamiltonian in a [`BasisSpec`].

use num_traits::Float;

use crate::basis::BasisSpec;
use crate::error::Result;
use crate::linalg::SymBandMatrix;
use crate::params::ModelParams;

/// Builds `H_D` as a symmetric band matrix.
///
/// With the lexicographic `(n, m)` ordering the coupling `(a† + a)(J₊ + J₋)`
/// only links neighbouring photon rows, so the half-bandwidth is about one
/// row length (`2j + 2` for the full space, `≈ j + 1` inside a sector).
pub fn build_hamiltonian(params: &ModelParams, basis: &BasisSpec) -> Result<SymBandMatrix> {
    basis.check_params(params)?;
    let two_j = basis.two_j();
    let scale = params.gamma / params.atoms().sqrt();

    // (row, col, value) for row > col, photon number raised by one.
    let coupling = |n: usize, k: u32| {
        let up = (k < two_j).then(|| {
            let el = ((two_j - k) as f64 * (k + 1) as f64).sqrt();
            (basis.index_of(n + 1, k + 1), el)
        });
        let down = (k > 0).then(|| {
            let el = (k as f64 * (two_j - k + 1) as f64).sqrt();
            (basis.index_of(n + 1, k - 1), el)
        });
        [up, down].into_iter().flatten().filter_map(move |(idx, el)| {
            idx.map(|i| (i, scale * ((n + 1) as f64).sqrt() * el))
        })
    };

    let mut kd = 0;
    for (i, (n, k)) in basis.states().enumerate() {
        for (target, _) in coupling(n, k) {
            kd = kd.max(target - i);
        }
    }

    let mut h = SymBandMatrix::zeros(basis.dim(), kd);
    for (i, (n, k)) in basis.states().enumerate() {
        let m = k as f64 - basis.j();
        h.set(i, i, params.omega * n as f64 + params.omega0 * m);
        for (target, value) in coupling(n, k) {
            if value != 0.0 {
                h.set(target, i, value);
            }
        }
    }
    Ok(h)
}
