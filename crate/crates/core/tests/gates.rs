use std::f64::consts::PI;

use bosonic_qsp::angles::{oqsp_inverse, reconstruct_dressed};
use bosonic_qsp::gates::{
    compile, jc_hybridization, rotation_code_phases, snap_compile, two_mode_compile, CompiledGate, GateKind, GateSpec,
};
use bosonic_qsp::kernels::{jc_kernels, jc_phase_nodes, select_hs};
use bosonic_qsp::sim::{dressed_states, run_jc_sequence, HybridState, Qubit, SimConfig};
use bosonic_qsp::{Error, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn phases(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-PI..PI)).collect()
}

#[test]
fn modk_gates_verify_for_small_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 1..=6 {
        let gate = compile(&GateSpec::mod_k(&phases(&mut rng, k))).unwrap();
        assert_eq!(gate.k, Some(k));
        assert_eq!(gate.angle_sets[0].rounds, 2 * k);
        assert!((gate.total_time - 4.0 * PI).abs() < 1e-12);
        let r = gate.verify(Some(3 * k + 2)).unwrap();
        assert!(r.infidelity < 1e-10, "k={k}: {}", r.infidelity);
        assert!(r.leakage < 1e-10);
    }
}

#[test]
fn snap_spec_without_n_max_verifies_all_levels() {
    let spec: GateSpec = serde_json::from_str(r#"{"kind":"snap","phases_rad":[0.1,0.2,0.3,0.4,0.5]}"#).unwrap();
    let gate = compile(&spec).unwrap();
    assert_eq!(gate.k, Some(5));
    assert!(gate.default_n_trunc() > 5);
    let r = gate.verify(None).unwrap();
    assert_eq!(r.node_errors.len(), 5);
    assert!(r.infidelity < 1e-10);
}

#[test]
fn compiled_gate_json_round_trip_preserves_metrics() {
    let gate = snap_compile(&[0.3, -1.2, 2.0, 0.7]).unwrap();
    let text = serde_json::to_string(&gate).unwrap();
    let back: CompiledGate = serde_json::from_str(&text).unwrap();
    let (a, b) = (gate.verify(None).unwrap(), back.verify(None).unwrap());
    assert!((a.infidelity - b.infidelity).abs() <= 1e-12);
    assert!((a.leakage - b.leakage).abs() <= 1e-12);
    assert_eq!(a.total_time, b.total_time);
}

#[test]
fn corrupted_angle_is_detected() {
    let mut gate = snap_compile(&[0.3, -1.2, 2.0, 0.7]).unwrap();
    gate.angle_sets[0].thetas[2] += 0.1;
    assert!(gate.verify(None).unwrap().infidelity > 1e-4);
}

#[test]
fn rotation_code_logical_phase() {
    let theta = 0.9;
    let gate = compile(&GateSpec::rotation_code(2, theta)).unwrap();
    assert_eq!(rotation_code_phases(2, theta, true).unwrap().len(), 4);
    let n_trunc = 8;
    let op = gate.simulate(n_trunc).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut zero = vec![C64::new(0.0, 0.0); n_trunc];
    zero[0] = C64::new(h, 0.0);
    zero[4] = C64::new(h, 0.0);
    let mut one = vec![C64::new(0.0, 0.0); n_trunc];
    one[2] = C64::new(1.0, 0.0);
    let out0 = op.apply(&HybridState::product(&zero, Qubit::G, n_trunc).unwrap()).branch(Qubit::G);
    let out1 = op.apply(&HybridState::product(&one, Qubit::G, n_trunc).unwrap()).branch(Qubit::G);
    let a0: C64 = zero.iter().zip(&out0).map(|(x, y)| x.conj() * y).sum();
    let a1: C64 = one.iter().zip(&out1).map(|(x, y)| x.conj() * y).sum();
    assert!(a0.norm() > 1.0 - 1e-9 && a1.norm() > 1.0 - 1e-9);
    let relative = (a1 / a0).arg();
    assert!((relative - theta).abs() < 1e-8, "{relative}");
}

#[test]
fn two_mode_gate_depends_on_total_number() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let p = phases(&mut rng, 5);
    let gate = two_mode_compile(3, &p).unwrap();
    assert_eq!(gate.spec.kind, GateKind::TwoModeModK);
    let r = gate.verify(None).unwrap();
    assert!(r.infidelity < 1e-10);
    assert_eq!(r.node_errors.len(), 9);
}

#[test]
fn invalid_specs_are_input_errors() {
    assert!(matches!(compile(&GateSpec::cat(1)), Err(Error::InvalidArgument(_))));
    let spec: GateSpec = serde_json::from_str(r#"{"kind":"snap","phases_rad":[0.1,0.2],"n_max":4}"#).unwrap();
    assert!(matches!(compile(&spec), Err(Error::InvalidArgument(_))));
    assert!(serde_json::from_str::<GateSpec>(r#"{"kind":"snap","bogus":1}"#).is_err());
}

#[test]
fn jc_hybridization_maps_to_lower_dressed_state() {
    let (h, s) = select_hs(2).unwrap();
    let kernels = jc_kernels(2, h, s).unwrap();
    let hyb = jc_hybridization(&kernels).unwrap();
    let cfg = SimConfig::new(4);
    let (op, _) = run_jc_sequence(&[hyb.fix.clone(), hyb.hadamard.clone()], &cfg).unwrap();
    let (undo, _) = run_jc_sequence(&[oqsp_inverse(&hyb.hadamard), oqsp_inverse(&hyb.fix)], &cfg).unwrap();
    for n in 0..=2 {
        let input = HybridState::fock(n, Qubit::E, 4).unwrap();
        let out = op.apply(&input);
        let (down, up) = dressed_states(n, 4).unwrap();
        assert!(down.inner(&out).norm() > 1.0 - 1e-6);
        assert!(up.inner(&out).norm() < 1e-6);
        assert!(input.inner(&undo.apply(&out)).norm() > 1.0 - 1e-6);
    }
}

#[test]
fn oqsp_inverse_undoes_dressed_action() {
    let (h, s) = select_hs(1).unwrap();
    let kernels = jc_kernels(1, h, s).unwrap();
    let hyb = jc_hybridization(&kernels).unwrap();
    for phi in jc_phase_nodes(1) {
        let u = reconstruct_dressed(&hyb.hadamard, phi);
        let v = reconstruct_dressed(&oqsp_inverse(&hyb.hadamard), phi);
        let p = v * u;
        assert!((p[(0, 1)]).norm() < 1e-9 && (p[(1, 0)]).norm() < 1e-9);
        assert!((p[(0, 0)].norm() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn jc_snap_random_phases_default_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..4 {
        let p = phases(&mut rng, 4);
        let gate = compile(&GateSpec::jc_snap(&p)).unwrap();
        let info = gate.jc.as_ref().unwrap();
        assert_eq!((info.h, info.s), (35, 2));
        let r = gate.verify(None).unwrap();
        assert!(r.infidelity <= 1e-5 && r.leakage <= 1e-5, "{r:?}");
    }
}

#[test]
fn jc_snap_without_n_max_field() {
    let spec: GateSpec = serde_json::from_str(r#"{"kind":"jc_snap","phases_rad":[0.3,1,2,3],"h":34,"s":2}"#).unwrap();
    let r = compile(&spec).unwrap().verify(None).unwrap();
    assert!(r.infidelity <= 1e-10, "{}", r.infidelity);
}
