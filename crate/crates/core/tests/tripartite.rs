use scramble::density::DensityMatrix;
use scramble::ensemble::{build_projected_ensemble, ensemble_d_rs, ensemble_delta_rs};
use scramble::measures::{log_negativity, mutual_information, trace_norm};
use scramble::rng::{self, Stream};
use scramble::state::{PartitionSpec, StateVector};
use scramble::tripartite::Tripartite;

fn random_state(n_r: usize, n_q: usize, seed: u64) -> StateVector {
    let mut g = rng::stream_rng(seed, Stream::Circuit);
    let mut amps: Vec<_> = (0..1 << (n_r + n_q)).map(|_| rng::complex_gaussian(&mut g)).collect();
    let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= n);
    StateVector::from_amplitudes(amps, n_r, n_q).unwrap()
}

fn cases() -> Vec<(usize, PartitionSpec)> {
    vec![
        (1, PartitionSpec::new(4, vec![0, 2], vec![1]).unwrap()),
        (2, PartitionSpec::new(5, vec![4], vec![0, 3]).unwrap()),
        (2, PartitionSpec::new(6, vec![0, 1, 2, 3], vec![2, 5]).unwrap()),
        (1, PartitionSpec::new(5, vec![], vec![2]).unwrap()),
        (2, PartitionSpec::new(4, vec![0, 1, 2, 3], vec![0, 1]).unwrap()),
        (3, PartitionSpec::new(6, vec![1], vec![0, 2, 4]).unwrap()),
    ]
}

#[test]
fn fast_paths_match_density_matrix_routes() {
    for (seed, (n_r, part)) in cases().into_iter().enumerate() {
        let psi = random_state(n_r, part.n_q(), seed as u64 + 10);
        let rho = psi.rho_rs(&part).unwrap();
        let t = Tripartite::new(&psi, &part).unwrap();
        assert!(t.rho_rs().max_abs_diff(&rho) < 1e-13);
        assert!((t.purity_rs() - rho.purity()).abs() < 1e-12);
        let rho_s = rho.partial_trace(&[1]).unwrap();
        assert!((t.purity_s() - rho_s.purity()).abs() < 1e-12);
        assert!((t.mutual_information() - mutual_information(&rho).unwrap()).abs() < 1e-10);
        let neg = log_negativity(&rho).unwrap();
        assert!((t.log_negativity() - neg).abs() < 1e-10);
        assert!((t.log_negativity_low_rank() - neg).abs() < 1e-10, "low rank {seed}");
        let d = rho.dim();
        let mixed = DensityMatrix::maximally_mixed(vec![d]);
        let diff = rho.matrix() - mixed.matrix();
        assert!((t.distance_to_maximally_mixed() - trace_norm(diff.as_ref()).unwrap()).abs() < 1e-10);
        let a = build_projected_ensemble(&rho, &part).unwrap();
        let b = t.ensemble().unwrap();
        assert!((ensemble_d_rs(&a) - ensemble_d_rs(&b)).abs() < 1e-10);
        assert!((ensemble_delta_rs(&a) - ensemble_delta_rs(&b)).abs() < 1e-10);
        let weights = t.outcome_weights();
        assert!((weights.iter().map(|w| w.0).sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
