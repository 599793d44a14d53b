use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use scramble::density::{DensityMatrix, Spectrum};
use scramble::ensemble::{ensemble_d_rs, ensemble_delta_rs, pinsker_holds};
use scramble::measures::{self, renyi_sandwich_holds};
use scramble::models::{build_model, evolve, FmficParams, ModelKind};
use scramble::phase::{read_csv, weighted_size_average, write_csv, Quantity, Record};
use scramble::rng::complex_gaussian;
use scramble::state::{prepare_initial_state, random_pairing, PartitionSpec, ProductMode, StateVector};
use scramble::tripartite::Tripartite;

fn random_state(n_r: usize, n_q: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amps: Vec<_> = (0..1usize << (n_r + n_q)).map(|_| complex_gaussian(&mut rng)).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    StateVector::from_amplitudes(amps, n_r, n_q).unwrap()
}

/// `(n_q, n_r, S)` with `S` a random subset of `Q`.
fn partition() -> impl Strategy<Value = (usize, usize, Vec<usize>)> {
    (2usize..=5).prop_flat_map(|n_q| {
        (Just(n_q), 1usize..=n_q.min(3), proptest::sample::subsequence((0..n_q).collect::<Vec<_>>(), 0..=n_q))
    })
}

fn tripartite(n_q: usize, n_r: usize, s: Vec<usize>, seed: u64) -> (Tripartite, PartitionSpec) {
    let part = PartitionSpec::new(n_q, s, (0..n_r).collect()).unwrap();
    let psi = random_state(n_r, n_q, seed);
    (Tripartite::new(&psi, &part).unwrap(), part)
}

fn quantity() -> impl Strategy<Value = Quantity> {
    proptest::sample::select(Quantity::ALL.to_vec())
}

fn record() -> impl Strategy<Value = Record> {
    (1u32..64, 0.0f64..=1.0, 0.0f64..=4.0, any::<u64>(), quantity(), any::<f64>().prop_filter("finite", |v| v.is_finite()))
        .prop_map(|(n, p, tau, realization, quantity, value)| Record { n, p, tau, realization, quantity, value })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_transpose_is_an_involution((n_q, n_r, s) in partition(), seed in any::<u64>()) {
        let (t, _) = tripartite(n_q, n_r, s, seed);
        let rho = t.rho_rs();
        let once = measures::partial_transpose(&rho, 1).unwrap();
        let back = DensityMatrix::from_parts(once, rho.factor_dims().to_vec()).unwrap();
        let twice = measures::partial_transpose(&back, 1).unwrap();
        prop_assert_eq!(twice, rho.into_matrix());
    }

    #[test]
    fn negativity_routes_agree_and_are_nonnegative((n_q, n_r, s) in partition(), seed in any::<u64>()) {
        let (t, _) = tripartite(n_q, n_r, s, seed);
        let direct = t.log_negativity_direct();
        prop_assert!(direct >= -1e-12);
        prop_assert!((direct - t.log_negativity_low_rank()).abs() < 1e-9);
        prop_assert!((direct - measures::log_negativity(&t.rho_rs()).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn renyi_sandwich_on_reductions((n_q, n_r, s) in partition(), seed in any::<u64>()) {
        let (t, _) = tripartite(n_q, n_r, s, seed);
        for spec in [t.spectrum_r(), t.spectrum_s(), t.spectrum_rs()] {
            prop_assert!(renyi_sandwich_holds(&spec, 1e-9));
        }
    }

    #[test]
    fn renyi_sandwich_on_spectra(weights in proptest::collection::vec(0.0f64..1.0, 1..12)) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let spec = Spectrum::from_unsorted(weights.iter().map(|w| w / total).collect());
        prop_assert!(renyi_sandwich_holds(&spec, 1e-12));
    }

    #[test]
    fn pinsker_and_visibility_bounds((n_q, n_r, s) in partition(), seed in any::<u64>()) {
        let (t, _) = tripartite(n_q, n_r, s, seed);
        let ens = t.ensemble().unwrap();
        prop_assert!(pinsker_holds(&ens, 1e-10));
        let d = ensemble_d_rs(&ens);
        let delta = ensemble_delta_rs(&ens);
        prop_assert!(d >= -1e-12 && d <= n_r as f64 * std::f64::consts::LN_2 + 1e-9);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&delta));
        prop_assert!((ens.total_probability() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mutual_information_bounds((n_q, n_r, s) in partition(), seed in any::<u64>()) {
        let (t, part) = tripartite(n_q, n_r, s, seed);
        let i = t.mutual_information();
        let cap = 2.0 * (part.n_r().min(part.n_s()) as f64) * std::f64::consts::LN_2;
        prop_assert!(i >= -1e-10 && i <= cap + 1e-10);
        prop_assert!(t.distance_to_maximally_mixed() >= -1e-12);
    }

    #[test]
    fn reference_stays_maximally_mixed(
        kind in proptest::sample::select(vec![ModelKind::Fruc, ModelKind::GlobalHaar]),
        half in 1usize..=3,
        n_r in 1usize..=2,
        t in 0usize..=4,
        seed in any::<u64>(),
    ) {
        let n_q = 2 * half;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairing = random_pairing(n_q, n_r.min(n_q), &mut rng);
        let part = PartitionSpec::contiguous(n_q, half, 0, pairing).unwrap();
        let psi = prepare_initial_state(&part, ProductMode::HaarSingleQubit, seed).unwrap();
        let op = build_model(kind, n_q, &FmficParams::default(), seed).unwrap();
        let psi = evolve(&psi, &op, t).unwrap();
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
        let rho_r = Tripartite::new(&psi, &part).unwrap().rho_r();
        let mixed = DensityMatrix::maximally_mixed(rho_r.factor_dims().to_vec());
        prop_assert!(measures::trace_distance(&rho_r, &mixed).unwrap() < 1e-9);
    }

    #[test]
    fn csv_round_trip_is_exact(records in proptest::collection::vec(record(), 0..20)) {
        let mut buf = Vec::new();
        write_csv(&records, &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), records);
    }

    #[test]
    fn size_average_lies_between_neighbours(
        a in proptest::collection::vec(-10.0f64..10.0, 1..8),
        shift in proptest::collection::vec(-10.0f64..10.0, 8),
        gamma in 0.01f64..0.99,
    ) {
        let rec = |i: usize, v: f64| Record { n: 6, p: 0.5, tau: 1.0, realization: i as u64, quantity: Quantity::Negativity, value: v };
        let floor: Vec<Record> = a.iter().enumerate().map(|(i, &v)| rec(i, v)).collect();
        let ceil: Vec<Record> = a.iter().zip(&shift).enumerate().map(|(i, (&v, &d))| rec(i, v + d)).collect();
        let avg = weighted_size_average(&floor, &ceil, gamma).unwrap();
        for ((f, c), m) in floor.iter().zip(&ceil).zip(&avg) {
            let (lo, hi) = (f.value.min(c.value), f.value.max(c.value));
            prop_assert!(m.value >= lo - 1e-12 && m.value <= hi + 1e-12);
        }
    }
}
