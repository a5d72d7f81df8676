use adaptstab::circuit::{AdaptiveCircuit, Operation, OutcomePolicy};
use adaptstab::gate::Gate;
use adaptstab::pauli::{symplectic_rank, PauliOperator};
use adaptstab::prep::*;
use adaptstab::tableau::StabilizerTableau;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn codes() -> Vec<StabilizerCode> {
    ["repetition3", "repetition5", "steane", "toric2", "bell"]
        .iter()
        .map(|n| builtin_code(n).unwrap())
        .collect()
}

#[test]
fn fragments_respect_depth_bound() {
    for code in codes() {
        let f = synthesize_measurement_circuit(&code.checks, code.n + code.checks.len(), code.n, None).unwrap();
        let s = code.sparsity;
        assert!(f.depth <= 2 + s + s * s, "{}: {}", code.name, f.depth);
        assert_eq!(f.schedule.layers, code.tanner_graph().max_degree());
    }
}

/// Runs the fragment on `data (x) |0^t>` with the given outcomes and
/// compares with measuring the checks one by one.
fn parallel_matches_sequential(checks: &[PauliOperator], data: &StabilizerTableau, outcomes: &[u8]) {
    let n = data.num_qubits();
    let t = checks.len();
    let f = synthesize_measurement_circuit(checks, n + t, n, None).unwrap();
    let init = data.tensor(&StabilizerTableau::zero_state(t));
    let r = f
        .circuit
        .simulate_from(init, &OutcomePolicy::Forced { bits: outcomes.to_vec(), strict: false })
        .unwrap();
    let mut seq = data.clone();
    measure_sequentially(&mut seq, checks, &r.record).unwrap();
    assert!(r.state.states_equal(&seq), "checks {checks:?} outcomes {:?}", r.record);
}

#[test]
fn parallel_measurement_equals_sequential() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for code in codes() {
        let t = code.checks.len();
        for trial in 0..50 {
            let data = StabilizerTableau::random_stabilizer_state(code.n, 1000 + trial);
            let outcomes: Vec<u8> = (0..t).map(|_| rng.gen_range(0..2)).collect();
            parallel_matches_sequential(&code.checks, &data, &outcomes);
        }
    }
}

#[test]
fn random_check_pairs_with_random_schedules() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut done = 0;
    while done < 40 {
        let t = StabilizerTableau::random_stabilizer_state(4, rng.gen());
        let pair = vec![t.generators()[0].clone(), t.generators()[1].clone()];
        // Random proper schedule: shuffle layer labels of a coloring.
        let base = edge_color_bipartite(&TannerGraph::new(&pair));
        let mut perm: Vec<usize> = (0..base.layers).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let mut sched = base.clone();
        for e in &mut sched.edges {
            e.layer = perm[e.layer];
        }
        let f = synthesize_measurement_circuit(&pair, 6, 4, Some(sched)).unwrap();
        for trial in 0..5 {
            let data = StabilizerTableau::random_stabilizer_state(4, rng.gen());
            for mask in 0..4u8 {
                let outcomes = [mask & 1, mask >> 1];
                let init = data.tensor(&StabilizerTableau::zero_state(2));
                let r = f
                    .circuit
                    .simulate_from(init, &OutcomePolicy::Forced { bits: outcomes.to_vec(), strict: false })
                    .unwrap();
                let mut seq = data.clone();
                measure_sequentially(&mut seq, &pair, &r.record).unwrap();
                assert!(r.state.states_equal(&seq), "trial {trial}");
            }
        }
        done += 1;
    }
}

#[test]
fn code_states_prepare_exhaustively() {
    for name in ["repetition3", "steane", "toric2", "bell"] {
        let code = builtin_code(name).unwrap();
        let p = prepare_state(&code, &PartitionPolicy::AutoXLogical).unwrap();
        let r = verify_preparation(&p.circuit, &p.target, 20, true, 5).unwrap();
        assert!(r.passed, "{name}: {r:?}");
        assert_eq!(r.exhaustive_branches, 1 << code.checks.len());
        assert!(r.bounds.iter().all(|b| b.satisfied), "{name}");
        assert!(p.fragment.depth <= p.fragment_depth_bound);
        for g in p.target.generators() {
            let out = p.circuit.simulate(&OutcomePolicy::Random(11)).unwrap().state;
            assert_eq!(out.is_stabilized_by(g).unwrap(), Some(adaptstab::pauli::Sign::Plus));
        }
    }
}

#[test]
fn steane_prepares_logical_plus() {
    let code = builtin_code("steane").unwrap();
    let p = prepare_state(&code, &PartitionPolicy::AutoXLogical).unwrap();
    assert_eq!(p.s2.len(), 1);
    assert!(p.s2[0].letters().iter().all(|l| matches!(l, adaptstab::pauli::Letter::I | adaptstab::pauli::Letter::X)));
    assert_eq!(p.correction_layers, 1);
    for seed in 0..50 {
        let out = p.circuit.simulate(&OutcomePolicy::Random(seed)).unwrap().state;
        assert!(out.states_equal(&p.target));
    }
}

#[test]
fn explicit_partition() {
    // Measure ZZ on a Bell pair prepared as |+>|+>, keeping XX.
    let code = builtin_code("bell").unwrap();
    let mut phi = AdaptiveCircuit::new(2);
    phi.push_layer(vec![Operation::gate(Gate::h(0)), Operation::gate(Gate::h(1))]);
    let policy = PartitionPolicy::Explicit {
        s1: vec!["ZZ".parse().unwrap()],
        s2: vec!["XX".parse().unwrap()],
        phi: phi.clone(),
    };
    let p = prepare_state(&code, &policy).unwrap();
    assert!(verify_preparation(&p.circuit, &p.target, 0, true, 0).unwrap().passed);
    let bad = PartitionPolicy::Explicit {
        s1: vec!["ZZ".parse().unwrap()],
        s2: vec!["ZI".parse().unwrap()],
        phi,
    };
    assert!(matches!(prepare_state(&code, &bad), Err(PrepError::Partition(_))));
}

#[test]
fn corrections_have_the_requested_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.gen_range(2..=7);
        let t = StabilizerTableau::random_stabilizer_state(n, rng.gen());
        let r = rng.gen_range(1..=n);
        let gens = &t.generators()[..r];
        let syndrome: Vec<bool> = (0..r).map(|_| rng.gen()).collect();
        let plus: Vec<PauliOperator> = gens.iter().zip(&syndrome).filter(|(_, s)| !**s).map(|(g, _)| g.clone()).collect();
        let minus: Vec<PauliOperator> = gens.iter().zip(&syndrome).filter(|(_, s)| **s).map(|(g, _)| g.clone()).collect();
        let p = pauli_correction(&plus, &minus).unwrap();
        assert!(p.is_hermitian());
        for g in &plus {
            assert!(p.commutes(g).unwrap());
        }
        for g in &minus {
            assert!(!p.commutes(g).unwrap());
        }
        // Any other solution differs by something with trivial syndrome.
        let other = p.multiply(&t.generators()[rng.gen_range(0..n)]).unwrap();
        let diff = p.multiply(&other).unwrap();
        assert!(gens.iter().all(|g| diff.commutes(g).unwrap()));
        if r == n {
            assert!(t.is_stabilized_by(&diff.with_sign(adaptstab::pauli::Sign::Plus)).unwrap().is_some());
        }
    }
}

#[test]
fn logicals_complete_the_codes() {
    for name in ["repetition3", "steane", "toric2", "toric3"] {
        let code = builtin_code(name).unwrap();
        let l = x_type_logicals(&code).unwrap();
        assert_eq!(l.len(), code.k, "{name}");
        for d in &l {
            assert!(d.z_bits().is_zero());
            for c in &code.checks {
                // Z-part of each check against the X-type logical.
                assert!(!c.z_bits().dot(d.x_bits()));
                assert!(c.commutes(d).unwrap());
            }
        }
        let mut all = code.checks.clone();
        all.extend(l);
        assert_eq!(symplectic_rank(&all), code.n);
    }
}
