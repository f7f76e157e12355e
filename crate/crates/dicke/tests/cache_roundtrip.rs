use dicke::cache::{from_bytes, to_bytes, Cache, OrbitCatalog};
use dicke_core::basis::{BasisSpec, Parity, Sector};
use dicke_core::orbits::PeriodicOrbit;
use dicke_core::params::ModelParams;
use dicke_core::phase::PhasePoint;
use dicke_core::spectrum::Spectrum;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, Just(0.0), Just(-0.0), Just(f64::MIN_POSITIVE), Just(f64::MAX)]
}

fn orbit() -> impl Strategy<Value = PeriodicOrbit> {
    (
        prop::array::uniform4(finite()),
        finite(),
        finite(),
        prop::array::uniform4(prop::array::uniform4(finite())),
        (finite(), finite(), 0usize..1000, "[ -~]{0,20}|ε=−0.5 ✓"),
    )
        .prop_map(|(x, period, eps, monodromy, (lyapunov, residual, iterations, label))| PeriodicOrbit {
            x0: PhasePoint::from_array(x),
            period,
            eps,
            monodromy,
            lyapunov,
            residual,
            iterations,
            label,
        })
}

fn spectrum() -> impl Strategy<Value = Spectrum> {
    (1u32..7, 0usize..6, 0u8..3, -2.0..2.0f64, 0usize..4).prop_flat_map(|(two_j, n_max, s, gamma, n)| {
        let sector = match s {
            0 => Sector::Both,
            1 => Sector::Only(Parity::Positive),
            _ => Sector::Only(Parity::Negative),
        };
        let params = ModelParams::new(1.0, 1.3, gamma, two_j as f64 / 2.0).unwrap();
        let basis = BasisSpec::new(&params, n_max, sector);
        let dim = basis.dim();
        (
            prop::collection::vec(finite(), n),
            prop::collection::vec(finite(), n * dim),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(move |(e, c, m)| Spectrum::from_parts(params, basis.clone(), e, c, m).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn catalogs_round_trip(orbits in prop::collection::vec(orbit(), 0..5)) {
        let c = OrbitCatalog { orbits };
        prop_assert_eq!(from_bytes::<OrbitCatalog>(&to_bytes(&c)).unwrap(), c);
    }

    #[test]
    fn spectra_round_trip(s in spectrum()) {
        let back = from_bytes::<Spectrum>(&to_bytes(&s)).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn truncation_and_bit_flips_are_rejected(orbits in prop::collection::vec(orbit(), 1..3), cut in 0.0..1.0f64, bit in 0u8..8) {
        let bytes = to_bytes(&OrbitCatalog { orbits });
        let at = ((bytes.len() - 1) as f64 * cut) as usize;
        prop_assert!(from_bytes::<OrbitCatalog>(&bytes[..at]).is_err());
        let mut flipped = bytes.clone();
        flipped[at] ^= 1 << bit;
        prop_assert!(from_bytes::<OrbitCatalog>(&flipped).is_err());
    }
}

#[test]
fn cache_files_survive_reopening() {
    let dir = tempfile::tempdir().unwrap();
    let params = ModelParams::resonant(1.0, 2.0).unwrap();
    let basis = BasisSpec::new(&params, 3, Sector::Only(Parity::Positive));
    let n = 2;
    let coeffs = (0..n * basis.dim()).map(|i| i as f64 * 0.25 - 1.0).collect();
    let s = Spectrum::from_parts(params, basis, vec![-1.5, -0.75], coeffs, vec![true, false]).unwrap();
    Cache::open(dir.path()).unwrap().put("key", &s).unwrap();
    let back: Spectrum = Cache::open(dir.path()).unwrap().get("key").unwrap().unwrap();
    assert_eq!(back, s);
    assert!(Cache::open(dir.path()).unwrap().get::<Spectrum>("other").unwrap().is_none());
}
