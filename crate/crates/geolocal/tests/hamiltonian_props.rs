mod common;

use std::f64::consts::E;

use geolocal::geometry::sample_coeffs;
use geolocal::hamiltonian::{
    exact_spectral_norm, output_probability, shift_coeffs, spectral_norm_bound, taylor_error_bound,
    taylor_probability, CoeffVector, EvolutionSpec, Propagator,
};
use geolocal::lattice::BitString;
use geolocal::rng::SeedSource;
use proptest::prelude::*;

fn draw(spec: &str, seed: u64, scale: f64) -> CoeffVector {
    let t = common::table(spec);
    sample_coeffs(&t, &mut SeedSource::new(seed).stream("props", spec, 0)).scaled(scale)
}

fn lattice_spec() -> impl Strategy<Value = &'static str> {
    prop_oneof![Just("1x1"), Just("1x2"), Just("1x3"), Just("2x2")]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn probability_in_unit_interval(spec in lattice_spec(), seed in any::<u64>(), scale in 0.0f64..20.0, tau in 0.01f64..5.0, mask in any::<usize>()) {
        let g = draw(spec, seed, scale);
        let n = g.table().num_qubits();
        let ev = EvolutionSpec::new(g, tau, BitString::from_index(mask % (1 << n), n)).unwrap();
        let p = output_probability(&ev).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p), "p = {p}");
    }

    #[test]
    fn propagator_is_unitary(spec in lattice_spec(), seed in any::<u64>(), scale in 0.0f64..10.0, tau in 0.0f64..4.0) {
        let u = Propagator::new(&draw(spec, seed, scale)).unwrap().unitary(tau);
        let eye = &u * u.adjoint();
        for i in 0..eye.nrows() {
            for j in 0..eye.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((eye[(i, j)].re - want).abs() <= 1e-12 && eye[(i, j)].im.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn taylor_sandwich(spec in prop_oneof![Just("1x2"), Just("1x3")], seed in any::<u64>(), scale in 0.1f64..3.0, extra in 1usize..6) {
        let g = draw(spec, seed, scale);
        let h = exact_spectral_norm(&g).unwrap();
        let ev = EvolutionSpec::standard(g);
        let m = (E * h).ceil() as usize + extra;
        let err = (output_probability(&ev).unwrap() - taylor_probability(&ev, m).unwrap()).abs();
        // small orders keep the bound well above rounding
        prop_assert!(err <= taylor_error_bound(h, 1.0, m).unwrap(), "m = {m}, h = {h}");
    }

    #[test]
    fn norm_bound_dominates(spec in lattice_spec(), seed in any::<u64>(), scale in 0.0f64..10.0) {
        let g = draw(spec, seed, scale);
        prop_assert!(exact_spectral_norm(&g).unwrap() <= spectral_norm_bound(&g) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn conjugation_is_involutive_isometry(spec in lattice_spec(), seed in any::<u64>(), mask in any::<usize>()) {
        let g = draw(spec, seed, 1.0);
        let n = g.table().num_qubits();
        let x = BitString::from_index(mask % (1 << n), n);
        let once = g.conjugated(&x).unwrap();
        prop_assert_eq!(once.norm2(), g.norm2());
        prop_assert!(once.values().iter().zip(g.values()).all(|(a, b)| a.abs() == b.abs()));
        let twice = once.conjugated(&x).unwrap();
        prop_assert_eq!(twice.values(), g.values());
    }

    #[test]
    fn ising_shift_matches_input_mask(mask in 0usize..8, field in -3.0f64..3.0) {
        // diagonal H commutes with Z_k, and exp(-i pi/2 Z_k) = -i Z_k
        let base = common::worst_instance("1x3");
        let g = base.with_values(base.values().iter().map(|v| v * field).collect()).unwrap();
        let y = BitString::from_index(mask, 3);
        let direct = output_probability(&EvolutionSpec::new(g.clone(), 1.0, y.clone()).unwrap()).unwrap();
        let shifted = output_probability(&EvolutionSpec::standard(shift_coeffs(&g, &y, 1.0).unwrap())).unwrap();
        prop_assert!((direct - shifted).abs() < 1e-12);
    }
}
