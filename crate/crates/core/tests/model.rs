use dicke_core::basis::{BasisSpec, Parity, Sector};
use dicke_core::hamiltonian::build_hamiltonian;
use dicke_core::params::ModelParams;
use dicke_core::spectrum::{
    default_n_max, default_tail_width, diagonalize, filter_converged, parity_quantum_number, EnergyRange, ParityLabel,
    Spectrum, DEFAULT_TAIL_TOL,
};
use nalgebra::DMatrix;

fn solve(p: &ModelParams, n_max: usize, sector: Sector, range: EnergyRange) -> Spectrum {
    let basis = BasisSpec::new(p, n_max, sector);
    let h = build_hamiltonian(p, &basis).unwrap();
    diagonalize(&h, p, &basis, range).unwrap()
}

#[test]
fn eigenvalues_match_a_dense_solver() {
    let p = ModelParams::resonant(1.0, 3.0).unwrap();
    for sector in [Sector::Both, Sector::Only(Parity::Positive), Sector::Only(Parity::Negative)] {
        let basis = BasisSpec::new(&p, 24, sector);
        let h = build_hamiltonian(&p, &basis).unwrap();
        let n = basis.dim();
        let dense = DMatrix::from_row_slice(n, n, &h.to_dense());
        let mut oracle: Vec<f64> = dense.symmetric_eigenvalues().iter().map(|e| e / p.j()).collect();
        oracle.sort_by(f64::total_cmp);
        let spec = diagonalize(&h, &p, &basis, EnergyRange::All).unwrap();
        for (a, b) in spec.energies().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn eigenpairs_are_normalised_and_accurate() {
    let p = ModelParams::resonant(1.0, 8.0).unwrap();
    let basis = BasisSpec::new(&p, default_n_max(&p, 0.0), Sector::Only(Parity::Positive));
    let h = build_hamiltonian(&p, &basis).unwrap();
    let spec = diagonalize(&h, &p, &basis, EnergyRange::Window { lo: -1.5, hi: 0.0 }).unwrap();
    let norm = h.norm_inf();
    let step = (spec.len() / 10).max(1);
    for k in (0..spec.len()).step_by(step) {
        let v = spec.state(k);
        let n2: f64 = v.iter().map(|c| c * c).sum();
        assert!((n2 - 1.0).abs() < 1e-12);
        let mut hv = vec![0.0; v.len()];
        h.mul_vec(v, &mut hv);
        let e = spec.energy(k) * p.j();
        let r = hv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
        assert!(r < 1e-10 * norm, "state {k}: residual {r}");
    }
    assert!(spec.energies().windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn ground_energy_approaches_the_classical_minimum_from_below() {
    let mut last = f64::NEG_INFINITY;
    for j in [5.0, 10.0, 20.0] {
        let p = ModelParams::resonant(1.0, j).unwrap();
        let e0 = p.ground_energy();
        let spec = solve(&p, default_n_max(&p, e0 + 0.5), Sector::Only(Parity::Positive), EnergyRange::Window {
            lo: e0 - 1.0,
            hi: e0 + 0.05,
        });
        let gs = spec.energy(0);
        assert!(gs <= e0, "j = {j}: {gs}");
        assert!(gs > last, "not monotone at j = {j}");
        // O(1/j): the gap times j stays bounded.
        assert!((e0 - gs) * j < 1.0, "j = {j}: gap {}", e0 - gs);
        last = gs;
    }
}

#[test]
fn uncoupled_spectrum_is_the_lattice() {
    let p = ModelParams::new(1.0, 1.0, 0.0, 4.0).unwrap();
    let spec = solve(&p, 40, Sector::Both, EnergyRange::All);
    let mut lattice: Vec<f64> =
        (0..=40).flat_map(|n| (0..=8).map(move |k| (n as f64 + k as f64 - 4.0) / 4.0)).collect();
    lattice.sort_by(f64::total_cmp);
    for (a, b) in spec.energies().iter().zip(&lattice) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn uncoupled_converged_states_are_the_low_photon_lattice() {
    // Incommensurate frequencies keep every level simple, so each eigenvector is one basis vector
    // and exactly the states with n ≤ n_max − tail_width pass.
    let w0 = 2f64.sqrt();
    let p = ModelParams::new(1.0, w0, 0.0, 4.0).unwrap();
    let spec = filter_converged(solve(&p, 40, Sector::Both, EnergyRange::All), 10, 0.0);
    let (lo, hi) = (2.01, 6.51);
    let expected = (0..=30)
        .flat_map(|n| (0..=8).map(move |k| (n as f64 + w0 * k as f64) / 4.0 - w0))
        .filter(|e| *e >= lo && *e < hi)
        .count();
    assert_eq!(spec.converged_in(lo, hi).len(), expected);
}

#[test]
fn converged_count_grows_with_cutoff() {
    let p = ModelParams::resonant(1.0, 6.0).unwrap();
    let mut last = 0;
    for n_max in [20, 30, 45, 70] {
        let spec = solve(&p, n_max, Sector::Only(Parity::Positive), EnergyRange::Window { lo: -2.2, hi: -0.3 });
        let spec = filter_converged(spec, default_tail_width(n_max), DEFAULT_TAIL_TOL);
        let count = spec.converged_in(-2.2, -0.3).len();
        assert!(count >= last, "n_max = {n_max}: {count} < {last}");
        last = count;
    }
    assert!(last > 0);
}

#[test]
fn eigenstates_carry_definite_parity() {
    let p = ModelParams::resonant(1.0, 2.0).unwrap();
    let spec = solve(&p, 20, Sector::Both, EnergyRange::All);
    let mut signs = [0, 0];
    for k in 0..spec.len() {
        match parity_quantum_number(&spec.basis, spec.state(k)) {
            ParityLabel::Definite(Parity::Positive) => signs[0] += 1,
            ParityLabel::Definite(Parity::Negative) => signs[1] += 1,
            ParityLabel::Mixed => panic!("state {k} has mixed parity"),
        }
    }
    assert_eq!(signs[0] + signs[1], spec.len());
    assert_eq!(signs[0], BasisSpec::new(&p, 20, Sector::Only(Parity::Positive)).dim());
}
