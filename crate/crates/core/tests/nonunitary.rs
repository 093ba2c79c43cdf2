use bosonic_qsp::gates::{compile, Backend};
use bosonic_qsp::nonunitary::{
    apply_and_measure, boson_number_measurement, fock, ideal_nla_output, kraus_compile, nla_amplitudes,
    nla_success_probability, parity_projector_amplitudes, KrausPair, KrausSpec, Selection,
};
use bosonic_qsp::sim::{coherent_amplitudes, state_fidelity, Qubit};
use bosonic_qsp::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random `(A_n, B_n)` with `|A|² + |B|² = 1`.
fn random_amplitudes(rng: &mut ChaCha8Rng, levels: usize) -> (Vec<C64>, Vec<C64>) {
    (0..levels)
        .map(|_| {
            let r: f64 = rng.gen_range(0.0..1.0);
            let a = C64::from_polar(r.sqrt(), rng.gen_range(-3.0..3.0));
            let b = C64::from_polar((1.0 - r).sqrt(), rng.gen_range(-3.0..3.0));
            (a, b)
        })
        .unzip()
}

#[test]
fn dispersive_kraus_branches_match_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for levels in [1, 2, 4, 6] {
        let (a, b) = random_amplitudes(&mut rng, levels);
        let gate = kraus_compile(&KrausSpec::new(a, b, Backend::Dispersive).unwrap()).unwrap();
        let r = gate.verify(None).unwrap();
        let worst = r.node_errors.iter().copied().fold(0.0, f64::max);
        assert!(worst < 1e-8, "levels={levels}: {worst}");
        assert!((gate.total_time - 12.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}

#[test]
fn jc_kraus_branches_match_targets() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for levels in [2, 3] {
        let (a, b) = random_amplitudes(&mut rng, levels);
        let spec = KrausSpec::new(a, b, Backend::Jc).unwrap();
        let gate = compile(&spec.to_gate_spec()).unwrap();
        let r = gate.verify(None).unwrap();
        let worst = r.node_errors.iter().copied().fold(0.0, f64::max);
        assert!(worst < 1e-6, "levels={levels}: {worst}");
        assert!(r.infidelity < 1e-10);
    }
}

#[test]
fn kraus_pair_is_complete() {
    let gate = kraus_compile(&nla_amplitudes(1.5, 4).unwrap()).unwrap();
    let pair = KrausPair::from_gate(&gate, 10).unwrap();
    assert!(pair.completeness_error() < 1e-10);
}

#[test]
fn nla_matches_ideal_output() {
    let gate = kraus_compile(&nla_amplitudes(2.0, 5).unwrap()).unwrap();
    let (c, _) = coherent_amplitudes(C64::new(0.4, 0.2), 16).unwrap();
    let out = apply_and_measure(&c, &gate, Selection::Branch(Qubit::G), 0).unwrap();
    let f = state_fidelity(&out.post_state, &ideal_nla_output(&c, 2.0, 5));
    assert!(f > 1.0 - 1e-6, "{f}");
    assert!((out.probability - nla_success_probability(&c, 2.0, 5)).abs() < 1e-8);
}

#[test]
fn nla_rejects_gain_below_one() {
    assert!(matches!(nla_amplitudes(0.9, 3), Err(Error::InvalidArgument(_))));
}

#[test]
fn unreachable_branch_is_an_error() {
    let gate = kraus_compile(&parity_projector_amplitudes(2, 0, 3).unwrap()).unwrap();
    let r = apply_and_measure(&fock(1, 6), &gate, Selection::Branch(Qubit::E), 0);
    assert!(matches!(r, Err(Error::BranchUnreachable)));
}

#[test]
fn parity_projector_splits_even_and_odd() {
    let gate = kraus_compile(&parity_projector_amplitudes(2, 1, 5).unwrap()).unwrap();
    let mut psi = vec![C64::new(0.0, 0.0); 8];
    psi[2] = C64::new(0.6, 0.0);
    psi[3] = C64::new(0.0, 0.8);
    let odd = apply_and_measure(&psi, &gate, Selection::Branch(Qubit::E), 0).unwrap();
    assert!((odd.probability - 0.64).abs() < 1e-9);
    assert!(odd.post_state[3].norm() > 1.0 - 1e-9);
}

#[test]
fn sampling_is_reproducible() {
    let gate = kraus_compile(&nla_amplitudes(1.3, 3).unwrap()).unwrap();
    let (c, _) = coherent_amplitudes(C64::new(0.7, 0.0), 16).unwrap();
    let draws = |seed| apply_and_measure(&c, &gate, Selection::Sample, seed).unwrap().branch;
    for seed in 0..8 {
        assert_eq!(draws(seed), draws(seed));
    }
}

#[test]
fn boson_counting_identifies_fock_states() {
    for m in 0..=4 {
        let (n, trajectory) = boson_number_measurement(&fock(m, 7), 4, 5).unwrap();
        assert_eq!(n, m);
        assert_eq!(trajectory.len(), m + 1);
    }
}

#[test]
fn boson_counting_rejects_support_above_n_max() {
    assert!(boson_number_measurement(&fock(5, 8), 3, 0).is_err());
}
