use std::f64::consts::PI;

use bosonic_qsp::angles::{gqsp_angles, reconstruct_sequence};
use bosonic_qsp::kernels::{modk_polynomial, root_of_unity};
use bosonic_qsp::poly::{complete_pair, ComplexPolynomial, QspMode};
use bosonic_qsp::sim::{
    basis_index, controlled_phase, jc_evolution, qubit_drive, state_fidelity, wigner, Qubit, SimConfig, WignerGrid,
};
use bosonic_qsp::C64;
use proptest::prelude::*;

fn phase_vec(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-PI..PI, 1..=max_len)
}

fn complex_vec(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C64::new(a, b)), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modk_polynomial_hits_nodes_and_stays_in_disk(phases in phase_vec(8)) {
        let k = phases.len();
        let p = modk_polynomial(&phases).unwrap();
        for (n, t) in phases.iter().enumerate() {
            let v = p.eval(root_of_unity(k, n as i64));
            prop_assert!((v - C64::from_polar(1.0, *t)).norm() <= 1e-10);
        }
        prop_assert!(p.sup_on_circle(4096) <= 1.0 + 1e-9);
    }

    #[test]
    fn completion_and_angles_round_trip(coeffs in complex_vec(1..=9), shrink in 0.2f64..0.95) {
        let raw = ComplexPolynomial::new(coeffs);
        let sup = raw.sup_on_circle(2048);
        prop_assume!(sup > 1e-3);
        let p = raw.scale(C64::new(shrink / (sup * 1.01), 0.0));
        let pair = complete_pair(&p, QspMode::Gqsp).unwrap();
        prop_assert!(pair.defect <= 1e-9);
        let angles = gqsp_angles(&pair, 0.7).unwrap();
        for j in 0..32 {
            let phi = 2.0 * PI * j as f64 / 32.0 + 0.01;
            let u = reconstruct_sequence(&angles, phi);
            prop_assert!((u[(0, 0)] - pair.p.eval_on_circle(phi)).norm() <= 1e-8);
            prop_assert!((u[(1, 0)] - pair.q.eval_on_circle(phi)).norm() <= 1e-8);
        }
    }

    #[test]
    fn dispersive_primitives_compose_unitarily(
        steps in prop::collection::vec((0.0f64..PI, -PI..PI, -PI..PI, 0.0f64..7.0), 1..6),
    ) {
        let cfg = SimConfig::new(6);
        let mut op = bosonic_qsp::sim::HybridOperator::identity(6);
        for (theta, phi, lam, t) in steps {
            op = op.then(&qubit_drive(theta, phi, lam, &cfg)).then(&controlled_phase(t, &cfg));
        }
        prop_assert!(op.unitarity_error() < 1e-10);
    }

    #[test]
    fn jc_evolution_conserves_excitations(t in 0.0f64..20.0, n in 0usize..5) {
        let cfg = SimConfig::new(6);
        let u = jc_evolution(t, &cfg);
        prop_assert!(u.unitarity_error() < 1e-10);
        let col = basis_index(n, Qubit::E);
        let kept = u.matrix[(col, col)].norm_sqr() + u.matrix[(basis_index(n + 1, Qubit::G), col)].norm_sqr();
        prop_assert!((kept - 1.0).abs() < 1e-10);
    }

    #[test]
    fn state_fidelity_is_symmetric_and_bounded(a in complex_vec(4..=4), b in complex_vec(4..=4)) {
        prop_assume!(a.iter().any(|x| x.norm() > 1e-3) && b.iter().any(|x| x.norm() > 1e-3));
        let f = state_fidelity(&a, &b);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((f - state_fidelity(&b, &a)).abs() < 1e-12);
        prop_assert!((state_fidelity(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wigner_is_bounded_by_parity(state in complex_vec(5..=5)) {
        prop_assume!(state.iter().any(|x| x.norm() > 1e-3));
        let mut padded = state.clone();
        padded.resize(30, C64::new(0.0, 0.0));
        let map = wigner(&padded, &WignerGrid::symmetric(1.5, 7)).unwrap();
        let bound = 2.0 / PI + 1e-9;
        prop_assert!(map.values.iter().flatten().all(|w| w.abs() <= bound));
    }
}
