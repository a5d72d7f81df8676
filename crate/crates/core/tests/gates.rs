use adaptstab::densesim::{pauli_matrix, StateVector};
use adaptstab::gate::{Gate, GateKind};
use adaptstab::pauli::{Letter, PauliOperator, Phase, Sign};
use adaptstab::tableau::{random_clifford_circuit, StabilizerTableau};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Dense unitary of `gates`, built column by column from basis states.
fn unitary(n: usize, gates: &[Gate]) -> DMatrix<Complex64> {
    let d = 1 << n;
    let mut u = DMatrix::zeros(d, d);
    for col in 0..d {
        let mut s = StateVector::basis_index(n, col).unwrap();
        for g in gates {
            s.apply_gate(g).unwrap();
        }
        for (row, a) in s.amplitudes().iter().enumerate() {
            u[(row, col)] = *a;
        }
    }
    u
}

fn close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> bool {
    (a - b).iter().all(|z| z.norm() < 1e-10)
}

fn arb_letter() -> impl Strategy<Value = Letter> {
    prop_oneof![Just(Letter::I), Just(Letter::X), Just(Letter::Y), Just(Letter::Z)]
}

fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
    (prop::collection::vec(arb_letter(), n), 0u8..4).prop_map(|(letters, ph)| {
        let p = PauliOperator::from_letters(Sign::Plus, &letters);
        PauliOperator::from_parts(p.x_bits().clone(), p.z_bits().clone(), Phase::from_exponent(ph)).unwrap()
    })
}

fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
    let kinds = prop_oneof![
        Just(GateKind::H),
        Just(GateKind::S),
        Just(GateKind::Sdg),
        Just(GateKind::X),
        Just(GateKind::Y),
        Just(GateKind::Z),
        Just(GateKind::Cnot),
        Just(GateKind::Cz),
        Just(GateKind::Swap),
        Just(GateKind::Cp(Letter::X)),
        Just(GateKind::Cp(Letter::Y)),
        Just(GateKind::Cp(Letter::Z)),
    ];
    (kinds, Just((0..n).collect::<Vec<usize>>()).prop_shuffle(), 1usize..n).prop_map(|(kind, qs, targets)| {
        let arity = match kind {
            k if k.is_single_qubit() => 1,
            GateKind::Cnot => 1 + targets,
            _ => 2,
        };
        Gate::new(kind, qs[..arity].to_vec()).unwrap()
    })
}

proptest! {
    #[test]
    fn conjugation_matches_dense(
        (p, g) in (2usize..5).prop_flat_map(|n| (arb_pauli(n), arb_gate(n)))
    ) {
        let n = p.num_qubits();
        let u = unitary(n, std::slice::from_ref(&g));
        let mut q = p.clone();
        g.conjugate(&mut q);
        let expect = &u * pauli_matrix(&p) * u.adjoint();
        prop_assert!(close(&pauli_matrix(&q), &expect), "{g}: {p} -> {q}");
    }

    #[test]
    fn inverse_undoes_gate((p, g) in (2usize..6).prop_flat_map(|n| (arb_pauli(n), arb_gate(n)))) {
        let mut q = p.clone();
        g.conjugate(&mut q);
        g.inverse().conjugate(&mut q);
        prop_assert_eq!(q, p);
    }

    #[test]
    fn tableau_matches_statevector(n in 1usize..7, depth in 0usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gates = random_clifford_circuit(n, depth, &mut rng);
        let mut t = StabilizerTableau::zero_state(n);
        t.apply_all(&gates).unwrap();
        let mut s = StateVector::zero(n).unwrap();
        for g in &gates {
            s.apply_gate(g).unwrap();
        }
        let from_t = StateVector::from_tableau(&t).unwrap();
        prop_assert!((s.fidelity(&from_t).unwrap() - 1.0).abs() < 1e-10);
        for gen in t.generators() {
            prop_assert!((s.pauli_expectation(gen) - 1.0).abs() < 1e-10);
        }
    }
}
