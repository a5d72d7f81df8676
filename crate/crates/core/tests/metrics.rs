use adaptstab::circuit::ghz_tableau;
use adaptstab::densesim::StateVector;
use adaptstab::gate::Gate;
use adaptstab::metrics::*;
use adaptstab::tableau::{random_single_qubit_clifford, StabilizerTableau};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << n)
        .map(|_| num_complex::Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    StateVector::from_amplitudes(amps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_equals_oracle(n in 1usize..8, seed in any::<u64>()) {
        let t = StabilizerTableau::random_stabilizer_state(n, seed);
        let (_, greedy) = min_weight_generators(&t).unwrap();
        prop_assert_eq!(greedy.0, weight_vector_oracle_all(&t).unwrap());
    }

    #[test]
    fn weight_invariant_under_permutation_and_local_cliffords(n in 1usize..9, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = StabilizerTableau::random_stabilizer_state(n, seed);
        let before = min_weight_generators(&t).unwrap().1;

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut moved = t.clone();
        // Realize the permutation with transpositions.
        let mut at: Vec<usize> = (0..n).collect();
        for i in 0..n {
            let j = at.iter().position(|&q| q == perm[i]).unwrap();
            if i != j {
                moved.apply(&Gate::swap(i, j)).unwrap();
                at.swap(i, j);
            }
        }
        prop_assert_eq!(&min_weight_generators(&moved).unwrap().1, &before);

        let mut gates = Vec::new();
        for q in 0..n {
            random_single_qubit_clifford(q, &mut rng, &mut gates);
        }
        moved.apply_all(&gates).unwrap();
        prop_assert_eq!(min_weight_generators(&moved).unwrap().1, before);
    }

    #[test]
    fn pauli_estimate_never_exceeds_alternating(n in 2usize..5, seed in any::<u64>()) {
        let s = random_state(n, seed);
        let region: Vec<usize> = (0..n).collect();
        let opts = AscentOptions { seed, ..AscentOptions::default() };
        let p = correlation_strength_w(&s, &region, 1, CorrelationMethod::PauliEnum, &opts).unwrap();
        let a = correlation_strength_w(&s, &region, 1, CorrelationMethod::AlternatingSign, &opts).unwrap();
        prop_assert!(p.value <= a.value + 1e-12, "pauli {} > alt {}", p.value, a.value);
        prop_assert!(a.value <= 1.0 + 1e-9);
    }

    #[test]
    fn range_non_increasing_in_delta(n in 2usize..6, seed in any::<u64>(), d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let s = random_state(n, seed);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        let opts = AscentOptions::default();
        let a = correlation_range_w(&s, 1, lo, CorrelationMethod::PauliEnum, &opts).unwrap();
        let b = correlation_range_w(&s, 1, hi, CorrelationMethod::PauliEnum, &opts).unwrap();
        prop_assert!(b <= a, "CR at {hi} = {b} > CR at {lo} = {a}");
    }

    #[test]
    fn clique_range_matches_pair_range(n in 2usize..7, seed in any::<u64>()) {
        let t = StabilizerTableau::random_stabilizer_state(n, seed);
        let s = StateVector::from_tableau(&t).unwrap();
        let clique = pauli_correlation_range(&s, DEFAULT_EDGE_TOLERANCE).unwrap();
        let masks = correlation_range_w(&s, 1, DEFAULT_EDGE_TOLERANCE, CorrelationMethod::PauliEnum, &AscentOptions::default()).unwrap();
        prop_assert_eq!(clique, masks);
    }

    #[test]
    fn weight_bounds_pauli_range(n in 2usize..9, seed in any::<u64>()) {
        let t = StabilizerTableau::random_stabilizer_state(n, seed);
        prop_assert!(lemma2_check(&t).unwrap().holds);
    }
}

#[test]
fn anti_shallowness_interval_is_ordered() {
    let search = ProductSearch::default();
    for n in 3..=10 {
        for s in [StateVector::ghz(n).unwrap(), StateVector::hypergraph(n).unwrap()] {
            let lower = anti_shallowness_lower(&s).unwrap();
            let upper = anti_shallowness_upper(&s, &[StateVector::zero(n).unwrap(), StateVector::plus(n).unwrap()], Some(&search)).unwrap();
            assert!(lower <= upper.value + 1e-12, "n={n}: {lower} > {}", upper.value);
        }
    }
}

#[test]
fn ghz_weight_and_range() {
    for n in 2..=10 {
        let t = ghz_tableau(n);
        assert_eq!(stabilizer_weight(&t).unwrap(), n);
        let s = StateVector::from_tableau(&t).unwrap();
        assert_eq!(pauli_correlation_range(&s, DEFAULT_EDGE_TOLERANCE).unwrap(), n);
    }
}

#[test]
fn product_states_have_trivial_indicators() {
    for n in 2..=6 {
        let t = StabilizerTableau::random_stabilizer_state(1, n as u64);
        let mut prod = t.clone();
        for i in 1..n {
            prod = prod.tensor(&StabilizerTableau::random_stabilizer_state(1, 100 + i as u64));
        }
        assert_eq!(stabilizer_weight(&prod).unwrap(), 1);
        let s = StateVector::from_tableau(&prod).unwrap();
        assert_eq!(pauli_correlation_range(&s, DEFAULT_EDGE_TOLERANCE).unwrap(), 1);
        let up = anti_shallowness_upper(&s, &[], Some(&ProductSearch::default())).unwrap();
        assert!(up.value < 1e-9);
    }
}
