//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use bosonic_qsp::angles::{gqsp_angles, reconstruct_sequence};
use bosonic_qsp::gates::{
    cat_coefficients, cat_phases, compile, qudit_cphase_phases, rotation_decomposition, snap_compile, synth_modk,
    two_mode_compile, Backend, GateSpec,
};
use bosonic_qsp::kernels::modk_polynomial;
use bosonic_qsp::multitone::multitone_at_time;
use bosonic_qsp::nonunitary::{
    apply_and_measure, kraus_compile, nla_amplitudes, parity_projector_amplitudes, BosonCounter, KrausPair, Selection,
};
use bosonic_qsp::poly::{complete_pair, normalization_defect, ComplexPolynomial, PolynomialPair, QspMode};
use bosonic_qsp::sim::{
    basis_index, coherent_amplitudes, state_fidelity, subspace_fidelity, wigner, HybridState, Qubit, SimConfig,
    TwoModeSpace, WignerGrid,
};
use bosonic_qsp::{Result, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240917;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = fn() -> Result<Outcome>;

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn random_phases(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
}

fn cis(t: f64) -> C64 {
    C64::from_polar(1.0, t)
}

/// Kernel corpus shared by the first two criteria.
fn corpus() -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    (2..=8).flat_map(|k| (0..200).map(|_| random_phases(&mut rng, k)).collect::<Vec<_>>()).collect()
}

fn kernel_nodes() -> Result<Outcome> {
    let (mut node, mut sup) = (0.0f64, 0.0f64);
    for phases in corpus() {
        let k = phases.len();
        let p = modk_polynomial(&phases)?;
        for (n, t) in phases.iter().enumerate() {
            node = node.max((p.eval_on_circle(2.0 * PI * n as f64 / k as f64) - cis(*t)).norm());
        }
        sup = sup.max(p.sup_on_circle(4096));
    }
    outcome(node <= 1e-10 && sup <= 1.0 + 1e-9, format!("node error {node:.3e}, sup|P| {sup:.15}"))
}

fn completion_round_trip() -> Result<Outcome> {
    let (mut defect, mut recon) = (0.0f64, 0.0f64);
    for phases in corpus() {
        let k = phases.len();
        let pair = complete_pair(&modk_polynomial(&phases)?, QspMode::Gqsp)?.with_rounds(2 * k);
        let angles = gqsp_angles(&pair, 2.0 * PI / k as f64)?;
        defect = defect.max(pair.defect);
        for j in 0..512 {
            let phi = 2.0 * PI * (j as f64 + 0.5) / 512.0;
            let u = reconstruct_sequence(&angles, phi);
            let e = (u[(0, 0)] - pair.p.eval_on_circle(phi)).norm().max((u[(1, 0)] - pair.q.eval_on_circle(phi)).norm());
            recon = recon.max(e);
        }
    }
    outcome(defect <= 1e-9 && recon <= 1e-8, format!("defect {defect:.3e}, reconstruction {recon:.3e}"))
}

fn dispersive_snap() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let (mut inf, mut leak, mut time_ok) = (0.0f64, 0.0f64, true);
    for _ in 0..50 {
        let gate = snap_compile(&random_phases(&mut rng, 5))?;
        time_ok &= gate.total_time == 4.0 * PI;
        let r = gate.verify(None)?;
        inf = inf.max(r.infidelity);
        leak = leak.max(r.leakage);
    }
    outcome(
        time_ok && inf <= 1e-6 && leak <= 1e-6,
        format!("gate time 4π exact: {time_ok}, worst infidelity {inf:.3e}, worst leakage {leak:.3e}"),
    )
}

fn eparity() -> Result<Outcome> {
    let t = PI / 3.0;
    let gate = synth_modk(&GateSpec::mod_k(&[t, -t]))?;
    let r = gate.verify(Some(16))?;
    let (c, s) = (t.cos(), t.sin());
    let p = ComplexPolynomial::new(vec![C64::new(c / 2.0, 0.0), C64::new(0.0, s), C64::new(c / 2.0, 0.0)]);
    let q = ComplexPolynomial::new(vec![C64::new(c / 2.0, 0.0), C64::new(0.0, 0.0), C64::new(-c / 2.0, 0.0)]);
    let defect = normalization_defect(&PolynomialPair::new(p, q), 4096);
    outcome(
        r.infidelity <= 1e-10 && defect <= 1e-14,
        format!("infidelity {:.3e}, explicit pair defect {defect:.3e}", r.infidelity),
    )
}

fn qudit_cphase() -> Result<Outcome> {
    let d = 3;
    let gate = two_mode_compile(d, &qudit_cphase_phases(d)?)?;
    let n_trunc = d + 2;
    let op = gate.simulate(n_trunc)?;
    let space = TwoModeSpace { n_per_mode: n_trunc };
    let mut cols = Vec::new();
    let mut targets = Vec::new();
    for na in 0..d {
        for nb in 0..d {
            let (a, b) = (na as f64, nb as f64);
            let local = PI * (a * a + b * b) / d as f64;
            cols.push(basis_index(space.index(na, nb), Qubit::G));
            targets.push(cis(2.0 * PI * a * b / d as f64 + local));
        }
    }
    let f = subspace_fidelity(&op, &cols, &targets);
    let time_ok = (gate.total_time - 4.0 * PI).abs() <= 1e-12;
    outcome(
        f >= 1.0 - 1e-6 && time_ok,
        format!("fidelity 1 − {:.3e}, total time {:.17}", 1.0 - f, gate.total_time),
    )
}

fn cat_generation() -> Result<Outcome> {
    let (k, alpha, n_trunc) = (5usize, 4.0, 64usize);
    let gate = compile(&GateSpec::cat(k))?;
    let op = gate.simulate(n_trunc)?;
    let (input, _) = coherent_amplitudes(C64::new(alpha, 0.0), n_trunc)?;
    let out = op.apply(&HybridState::product(&input, Qubit::G, n_trunc)?).branch(Qubit::G);
    let mut target = vec![C64::new(0.0, 0.0); n_trunc];
    for (l, c) in cat_coefficients(k).iter().enumerate() {
        let (lobe, _) = coherent_amplitudes(C64::from_polar(alpha, 2.0 * PI * l as f64 / k as f64), n_trunc)?;
        for (t, x) in target.iter_mut().zip(lobe) {
            *t += c * x;
        }
    }
    let f = state_fidelity(&out, &target);
    let xi = rotation_decomposition(&modk_polynomial(&cat_phases(k)?)?, k)?;
    let xi_err = xi.xi.iter().map(|x| (x.norm() - 1.0 / (k as f64).sqrt()).abs()).fold(0.0, f64::max);
    outcome(
        f >= 1.0 - 1e-6 && xi_err <= 1e-9,
        format!("fidelity 1 − {:.3e}, max ||ξ_l| − 1/√5| {xi_err:.3e}", 1.0 - f),
    )
}

fn jc_pipeline() -> Result<Outcome> {
    let n_max = 3;
    let expected = 230.0 * PI / 5f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let cfg = SimConfig::new(n_max + 2);
    let (mut inf, mut leak, mut time_err, mut ratio) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..50 {
        let phases = random_phases(&mut rng, n_max + 1);
        let gate = compile(&GateSpec::jc_snap(&phases).with_hs(34, 2))?;
        let r = gate.verify(None)?;
        inf = inf.max(r.infidelity);
        leak = leak.max(r.leakage);
        time_err = time_err.max((gate.total_time - expected).abs() / expected);
        let base = multitone_at_time(Backend::Jc, &phases, gate.total_time, &cfg)?;
        ratio = ratio.min(base.infidelity / r.infidelity.max(f64::MIN_POSITIVE));
    }
    outcome(
        inf <= 1e-5 && leak <= 1e-5 && time_err <= 1e-14 && ratio >= 100.0,
        format!(
            "worst infidelity {inf:.3e}, worst leakage {leak:.3e}, time rel. error {time_err:.1e}, min baseline/qsp {ratio:.3e}"
        ),
    )
}

fn baseline_threshold() -> Result<Outcome> {
    let n_max = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut cfg = SimConfig::new(n_max + 2);
    cfg.dt = 1e-3;
    let times: Vec<f64> = (1..=8).map(|j| j as f64 * PI).collect();
    let mut lowest = f64::INFINITY;
    let mut at = 0.0;
    for _ in 0..50 {
        let phases = random_phases(&mut rng, n_max + 1);
        for &t in &times {
            let run = multitone_at_time(Backend::Dispersive, &phases, t, &cfg)?;
            if run.infidelity < lowest {
                lowest = run.infidelity;
                at = t;
            }
        }
    }
    outcome(lowest > 1e-2, format!("lowest infidelity {lowest:.3e} at gate time {:.2}π", at / PI))
}

fn nla() -> Result<Outcome> {
    let (gain, n_max, n_trunc) = (2.0, 7usize, 24usize);
    let gate = kraus_compile(&nla_amplitudes(gain, n_max)?)?;
    let (c, _) = coherent_amplitudes(C64::new(0.5, 0.0), n_trunc)?;
    let out = apply_and_measure(&c, &gate, Selection::Branch(Qubit::G), SEED)?;
    let mut ideal: Vec<C64> = c.iter().enumerate().map(|(n, x)| x * gain.powi(n as i32)).collect();
    ideal.truncate(n_max + 1);
    let f = state_fidelity(&out.post_state, &ideal);
    let closed: f64 = (0..=n_max).map(|n| gain.powi(2 * n as i32 - 2 * n_max as i32) * c[n].norm_sqr()).sum();
    let p_err = (out.probability - closed).abs();
    let mut vacuum = vec![C64::new(0.0, 0.0); n_trunc];
    vacuum[0] = C64::new(1.0, 0.0);
    let p_vac = apply_and_measure(&vacuum, &gate, Selection::Branch(Qubit::G), SEED)?.probability;
    let vac_err = (p_vac - 2f64.powi(-14)).abs();
    let (plus, _) = coherent_amplitudes(C64::new(1.0, 0.0), n_trunc)?;
    let (minus, _) = coherent_amplitudes(C64::new(-1.0, 0.0), n_trunc)?;
    let cat: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| a + b).collect();
    let amplified = apply_and_measure(&cat, &gate, Selection::Branch(Qubit::G), SEED)?.post_state;
    let grid = WignerGrid::symmetric(3.0, 61);
    let before = wigner(&cat, &grid)?.min_value();
    let after = wigner(&amplified, &grid)?.min_value();
    outcome(
        f >= 1.0 - 1e-6 && p_err <= 1e-8 && vac_err <= 1e-8 && after < before,
        format!(
            "fidelity 1 − {:.3e}, P_g error {p_err:.3e}, vacuum P_g error {vac_err:.3e}, min W {before:.4} → {after:.4}",
            1.0 - f
        ),
    )
}

fn boson_counting() -> Result<Outcome> {
    let (n_max, n_trunc) = (3usize, 6usize);
    let mut completeness = 0.0f64;
    for n_b in 0..=n_max {
        let gate = kraus_compile(&parity_projector_amplitudes(n_max + 1, n_b, n_max)?)?;
        completeness = completeness.max(KrausPair::from_gate(&gate, n_trunc)?.completeness_error());
    }
    let counter = BosonCounter::new(n_max, n_trunc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut fock_dev = 0.0f64;
    let mut fock_ok = true;
    for m in 0..=n_max {
        let mut psi = vec![C64::new(0.0, 0.0); n_trunc];
        psi[m] = C64::new(1.0, 0.0);
        let (found, trajectory) = counter.count(&psi, &mut rng)?;
        fock_ok &= found == m;
        let p: f64 = trajectory.iter().map(|o| o.probability).product();
        fock_dev = fock_dev.max((1.0 - p).abs());
    }
    let weights = [0.1, 0.2, 0.3, 0.4];
    let mut psi = vec![C64::new(0.0, 0.0); n_trunc];
    for (n, w) in weights.iter().enumerate() {
        psi[n] = C64::from_polar(f64::sqrt(*w), 0.7 * n as f64);
    }
    let trials = 10_000;
    let mut counts = [0usize; 4];
    for _ in 0..trials {
        counts[counter.count(&psi, &mut rng)?.0] += 1;
    }
    let worst_sigma = counts
        .iter()
        .zip(weights)
        .map(|(&c, w)| (c as f64 - trials as f64 * w).abs() / (trials as f64 * w * (1.0 - w)).sqrt())
        .fold(0.0, f64::max);
    outcome(
        completeness <= 1e-8 && fock_ok && fock_dev <= 1e-10 && worst_sigma <= 3.0,
        format!(
            "completeness {completeness:.3e}, Fock identified: {fock_ok} (deviation {fock_dev:.3e}), counts {counts:?} worst {worst_sigma:.2}σ"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("1 kernel node exactness", kernel_nodes),
        ("2 completion and angle round trip", completion_round_trip),
        ("3 dispersive SNAP n_max=4", dispersive_snap),
        ("4 eParity", eparity),
        ("5 qudit CPhase d=3", qudit_cphase),
        ("6 five-component cat", cat_generation),
        ("7 JC SNAP n_max=3", jc_pipeline),
        ("8 multi-tone baseline threshold", baseline_threshold),
        ("9 noiseless linear amplification", nla),
        ("10 boson-number measurement", boson_counting),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {name}: {detail} [{:.1}s]", start.elapsed().as_secs_f64());
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
