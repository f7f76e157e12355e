use super::*;
use alloc::vec::Vec;
use nalgebra::DMatrix;

fn random_band(n: usize, kd: usize, seed: u64) -> SymBandMatrix {
    let mut rng = SplitMix64(seed);
    let mut m = SymBandMatrix::zeros(n, kd);
    for c in 0..n {
        for r in c..(c + kd + 1).min(n) {
            m.set(r, c, rng.next_signed());
        }
    }
    m
}

fn dense_eigenvalues(m: &SymBandMatrix) -> Vec<f64> {
    let n = m.dim();
    let d = DMatrix::from_row_slice(n, n, &m.to_dense());
    let mut ev: Vec<f64> = d.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

#[test]
fn tridiagonal_reduction_preserves_spectrum() {
    for (n, kd) in [(1, 0), (2, 1), (5, 4), (30, 3), (57, 7), (80, 12)] {
        let m = random_band(n, kd, n as u64 * 31 + kd as u64);
        let t = m.tridiagonalize();
        let got = t.eigenvalues(0, n);
        let want = dense_eigenvalues(&m);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-11, "n={n} kd={kd}: {g} vs {w}");
        }
    }
}

#[test]
fn sturm_count_matches_dense() {
    let m = random_band(40, 5, 7);
    let t = m.tridiagonalize();
    let want = dense_eigenvalues(&m);
    for x in [-3.0, -1.0, -0.2, 0.0, 0.4, 1.5, 3.0] {
        let expected = want.iter().filter(|&&v| v < x).count();
        assert_eq!(t.count_below(x), expected);
    }
}

#[test]
fn eigenpairs_have_small_residuals() {
    let m = random_band(120, 9, 3);
    let pairs = eigh_band(&m, Selection::All, true).unwrap();
    let want = dense_eigenvalues(&m);
    let norm = m.norm_inf();
    for i in 0..m.dim() {
        assert!((pairs.values[i] - want[i]).abs() < 1e-11);
        let v = pairs.vector(i).unwrap();
        assert!(m.residual_norm(v, pairs.values[i]) < 1e-10 * norm);
        assert!((norm2(v) - 1.0).abs() < 1e-12);
    }
    let vecs = pairs.vectors.as_ref().unwrap();
    let n = m.dim();
    for a in 0..n {
        for b in 0..a {
            let d = dot(&vecs[a * n..(a + 1) * n], &vecs[b * n..(b + 1) * n]);
            assert!(d.abs() < 1e-9, "vectors {a}, {b} overlap {d}");
        }
    }
}

#[test]
fn value_window_selects_half_open_interval() {
    let m = random_band(60, 4, 11);
    let all = dense_eigenvalues(&m);
    let (lo, hi) = (0.5 * (all[9] + all[10]), 0.5 * (all[24] + all[25]));
    let pairs = eigh_band(&m, Selection::Values { lo, hi }, false).unwrap();
    assert_eq!(pairs.values.len(), 15);
    assert!(pairs.vectors.is_none());
}

#[test]
fn decoupled_blocks_and_degeneracies() {
    // Two identical blocks plus isolated diagonal entries: exact degeneracies
    // across components must still give an orthonormal set.
    let n = 10;
    let mut m = SymBandMatrix::zeros(n, 2);
    for i in 0..n {
        m.set(i, i, (i % 3) as f64);
    }
    m.set(1, 0, 0.5);
    m.set(3, 2, 0.5);
    m.set(5, 4, 0.5);
    assert_eq!(m.components().len(), 7);
    let pairs = eigh_band(&m, Selection::All, true).unwrap();
    let vecs = pairs.vectors.unwrap();
    for a in 0..n {
        for b in 0..n {
            let d = dot(&vecs[a * n..(a + 1) * n], &vecs[b * n..(b + 1) * n]);
            let expect = if a == b { 1.0 } else { 0.0 };
            assert!((d - expect).abs() < 1e-12);
        }
    }
    let want = dense_eigenvalues(&m);
    for (g, w) in pairs.values.iter().zip(&want) {
        assert!((g - w).abs() < 1e-13);
    }
}

#[test]
fn tight_cluster_stays_orthogonal() {
    // Wilkinson-type matrix W21+: eigenvalue pairs agree to many digits.
    let n = 21;
    let mut m = SymBandMatrix::zeros(n, 1);
    for i in 0..n {
        m.set(i, i, (10.0 - i as f64).abs());
        if i > 0 {
            m.set(i, i - 1, 1.0);
        }
    }
    let pairs = eigh_band(&m, Selection::All, true).unwrap();
    let vecs = pairs.vectors.unwrap();
    for a in 0..n {
        for b in 0..a {
            let d = dot(&vecs[a * n..(a + 1) * n], &vecs[b * n..(b + 1) * n]);
            assert!(d.abs() < 1e-9);
        }
    }
}
