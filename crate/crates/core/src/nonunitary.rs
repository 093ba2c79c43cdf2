//! Measurement-conditioned operations.
//!
//! An entangler takes `|n⟩|ref⟩` to `A_n|n⟩|ref⟩ + B_n|n'⟩|flip⟩`, where the
//! reference qubit is `g` for the dispersive backend and `e` for JC, and
//! `n' = n` (dispersive) or `n + 1` (JC). Measuring the qubit applies the
//! Kraus operator `M = Σ A_n|n⟩⟨n|` (reference outcome) or `N` (flipped).
//!
//! Completion fixes only `|B_n|`. The dispersive compiler therefore wraps the
//! entangler in two mod-k phase gates and a final qubit phase so that both
//! branches carry the requested phases; the JC compiler wraps it in two
//! dressed phase rounds.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::angles::{gqsp_angles, reconstruct_sequence, AngleSet};
use crate::gates::{jc_kraus_rounds, Backend, CompiledGate, GateKind, GateReport, GateSpec};
use crate::kernels::{modk_polynomial, DispersiveKernelSet};
use crate::poly::{complete_pair, QspMode};
use crate::sim::{basis_index, HybridOperator, Qubit};
use crate::{Error, Result, C64};

/// Tolerance on `|A_n|² + |B_n|² = 1`.
const AMP_NORM_TOL: f64 = 1e-10;
/// Branches below this probability cannot be selected.
const BRANCH_FLOOR: f64 = 1e-14;
/// Weight allowed above `n_max` for boson counting.
const SUPPORT_TOL: f64 = 1e-10;

/// Target branch amplitudes for levels `0..=n_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausSpec {
    pub a_amps: Vec<C64>,
    pub b_amps: Vec<C64>,
    pub backend: Backend,
}

impl KrausSpec {
    pub fn new(a_amps: Vec<C64>, b_amps: Vec<C64>, backend: Backend) -> Result<Self> {
        let spec = Self { a_amps, b_amps, backend };
        spec.validate()?;
        Ok(spec)
    }

    pub fn n_max(&self) -> usize {
        self.a_amps.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_amps.is_empty() || self.a_amps.len() != self.b_amps.len() {
            return Err(Error::InvalidArgument("need matching, non-empty A and B lists".into()));
        }
        for (n, (a, b)) in self.a_amps.iter().zip(&self.b_amps).enumerate() {
            if a.norm() > 1.0 + AMP_NORM_TOL {
                return Err(Error::AmplitudeExceedsUnity { level: n });
            }
            if (a.norm_sqr() + b.norm_sqr() - 1.0).abs() > AMP_NORM_TOL {
                return Err(Error::InvalidArgument(format!("|A|² + |B|² ≠ 1 at level {n}")));
            }
        }
        Ok(())
    }

    pub fn to_gate_spec(&self) -> GateSpec {
        GateSpec::kraus(&self.a_amps, &self.b_amps, self.backend)
    }

    pub fn from_gate_spec(spec: &GateSpec) -> Result<Self> {
        if spec.kind != GateKind::Kraus {
            return Err(Error::InvalidArgument("not a kraus spec".into()));
        }
        let unpack = |v: &[[f64; 2]]| v.iter().map(|c| C64::new(c[0], c[1])).collect();
        let out = Self::new(unpack(&spec.a_amps), unpack(&spec.b_amps), spec.backend())?;
        if let Some(n) = spec.n_max {
            if n != out.n_max() {
                return Err(Error::InvalidArgument(format!("n_max = {n} but {} amplitudes given", n + 1)));
            }
        }
        Ok(out)
    }
}

/// `A_n = G^{n−n_max}`, `B_n = √(1−A_n²)`.
pub fn nla_amplitudes(gain: f64, n_max: usize) -> Result<KrausSpec> {
    if !(gain > 1.0 && gain.is_finite()) {
        return Err(Error::InvalidArgument("NLA gain must exceed 1".into()));
    }
    let a: Vec<C64> = (0..=n_max)
        .map(|n| C64::new(gain.powi(n as i32 - n_max as i32), 0.0))
        .collect();
    let b = a.iter().map(|x| C64::new((1.0 - x.re * x.re).max(0.0).sqrt(), 0.0)).collect();
    KrausSpec::new(a, b, Backend::Dispersive)
}

/// `A_n = 0, B_n = 1` when `n mod k′ = n_b`, else `A_n = 1, B_n = 0`.
pub fn parity_projector_amplitudes(k_prime: usize, n_b: usize, n_max: usize) -> Result<KrausSpec> {
    if k_prime == 0 || n_b >= k_prime {
        return Err(Error::InvalidArgument("need 0 ≤ n_b < k′".into()));
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let (a, b) = (0..=n_max).map(|n| if n % k_prime == n_b { (zero, one) } else { (one, zero) }).unzip();
    KrausSpec::new(a, b, Backend::Dispersive)
}

/// Compiles the entangler for `spec`.
pub fn kraus_compile(spec: &KrausSpec) -> Result<CompiledGate> {
    spec.validate()?;
    let gate_spec = spec.to_gate_spec();
    match spec.backend {
        Backend::Dispersive => dispersive_kraus(&gate_spec, spec),
        Backend::Jc => jc_kraus_rounds(&gate_spec, &spec.a_amps, &spec.b_amps),
    }
}

pub(crate) fn kraus_compile_spec(spec: &GateSpec) -> Result<CompiledGate> {
    let ks = KrausSpec::from_gate_spec(spec)?;
    match ks.backend {
        Backend::Dispersive => dispersive_kraus(spec, &ks),
        Backend::Jc => jc_kraus_rounds(spec, &ks.a_amps, &ks.b_amps),
    }
}

fn modk_angles(phases: &[f64]) -> Result<(AngleSet, f64)> {
    let k = phases.len();
    let pair = complete_pair(&modk_polynomial(phases)?, QspMode::Gqsp)?.with_rounds(2 * k);
    let defect = pair.defect;
    Ok((gqsp_angles(&pair, 2.0 * PI / k as f64)?, defect))
}

/// Schedule `[V1, U, V2, R(0, ν, 0)]`.
///
/// `U` realizes `A_n` and `B'_n = e^{iη_n}B_n`. The mod-k gates act as
/// `diag(e^{iα_n}, ·)` and `diag(e^{iβ_n}, κe^{−iβ_n})` on the nodes, with
/// `κ` fixed by the determinant of `V2`. Choosing `e^{−2iβ_n} = B_n/B'_n`,
/// `e^{iν} = −κ` and `α_n = −β_n − ν` leaves `A_n` unchanged and gives the
/// flipped branch exactly `B_n`.
fn dispersive_kraus(spec: &GateSpec, ks: &KrausSpec) -> Result<CompiledGate> {
    let k = ks.a_amps.len();
    let step = 2.0 * PI / k as f64;
    let p = DispersiveKernelSet::new(k)?.combine(&ks.a_amps)?;
    let pair = complete_pair(&p, QspMode::Gqsp)?.with_rounds(2 * k);
    let entangler = gqsp_angles(&pair, step)?;
    let beta: Vec<f64> = (0..k)
        .map(|n| {
            let realized = pair.q.eval_on_circle(n as f64 * step);
            let want = ks.b_amps[n];
            if realized.norm() > 1e-12 && want.norm() > 1e-12 {
                -(want / realized).arg() / 2.0
            } else {
                0.0
            }
        })
        .collect();
    let (v2, d2) = modk_angles(&beta)?;
    let kappa: C64 = (0..k)
        .map(|n| reconstruct_sequence(&v2, n as f64 * step)[(1, 1)] * C64::from_polar(1.0, beta[n]))
        .sum::<C64>()
        / k as f64;
    let nu = (-kappa).arg();
    let alpha: Vec<f64> = beta.iter().map(|b| -b - nu).collect();
    let (v1, d1) = modk_angles(&alpha)?;
    let final_phase = AngleSet::single_rotation(0.0, nu, 0.0);
    let sets = vec![v1, entangler, v2, final_phase];
    let total: usize = sets.iter().map(|a| a.rounds).sum();
    Ok(CompiledGate {
        backend: Backend::Dispersive,
        spec: spec.clone(),
        k: Some(k),
        round_duration: step,
        total_time: total as f64 * step,
        total_time_units: Backend::Dispersive.time_units().into(),
        polynomial_degree: 2 * k,
        normalization_defect: pair.defect.max(d1).max(d2),
        angle_sets: sets,
        jc: None,
    })
}

/// Kraus operators `(M, N)` of a compiled entangler on `n_trunc` levels:
/// `M = ⟨ref|U|ref⟩`, `N = ⟨flip|U|ref⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausPair {
    pub reference: Qubit,
    pub m: DMatrix<C64>,
    pub n: DMatrix<C64>,
}

impl KrausPair {
    pub fn from_gate(gate: &CompiledGate, n_trunc: usize) -> Result<Self> {
        let op = gate.simulate(n_trunc)?;
        Ok(Self::from_operator(&op, gate.backend.reference()))
    }

    pub fn from_operator(op: &HybridOperator, reference: Qubit) -> Self {
        Self {
            reference,
            m: op.qumode_block(reference, reference),
            n: op.qumode_block(reference.flip(), reference),
        }
    }

    /// `‖M†M + N†N − I‖_max`.
    pub fn completeness_error(&self) -> f64 {
        let d = self.m.nrows();
        let s = self.m.adjoint() * &self.m + self.n.adjoint() * &self.n - DMatrix::<C64>::identity(d, d);
        s.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Kraus operator for `branch`.
    pub fn operator(&self, branch: Qubit) -> &DMatrix<C64> {
        if branch == self.reference { &self.m } else { &self.n }
    }

    /// Measures `state` (normalized internally), selecting a branch or
    /// sampling one with `rng`.
    pub fn measure<R: Rng>(&self, state: &[C64], selection: Selection, rng: &mut R) -> Result<MeasurementOutcome> {
        let d = self.m.nrows();
        if state.len() > d {
            return Err(Error::InvalidArgument(format!("state has {} levels, truncation is {d}", state.len())));
        }
        let mut psi = nalgebra::DVector::<C64>::zeros(d);
        for (i, &c) in state.iter().enumerate() {
            psi[i] = c;
        }
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("cannot measure a zero state".into()));
        }
        psi /= C64::new(norm, 0.0);
        let out_ref = &self.m * &psi;
        let out_flip = &self.n * &psi;
        let p_ref = out_ref.norm_squared();
        let p_flip = out_flip.norm_squared();
        let branch = match selection {
            Selection::Branch(q) => q,
            Selection::Sample => {
                let u: f64 = rng.gen();
                if u * (p_ref + p_flip) < p_ref { self.reference } else { self.reference.flip() }
            }
        };
        let (vec, p) = if branch == self.reference { (out_ref, p_ref) } else { (out_flip, p_flip) };
        if p < BRANCH_FLOOR {
            return Err(Error::BranchUnreachable);
        }
        let s = p.sqrt();
        Ok(MeasurementOutcome {
            branch,
            probability: p,
            post_state: vec.iter().map(|c| c / s).collect(),
        })
    }
}

/// Branch choice for a measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    Branch(Qubit),
    Sample,
}

/// Result of one qubit measurement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    pub branch: Qubit,
    pub probability: f64,
    /// Normalized qumode state of the branch.
    pub post_state: Vec<C64>,
}

/// Runs `gate` on `state ⊗ |ref⟩` and measures the qubit. Sampling uses a
/// ChaCha8 generator seeded with `seed`.
pub fn apply_and_measure(state: &[C64], gate: &CompiledGate, selection: Selection, seed: u64) -> Result<MeasurementOutcome> {
    let n_trunc = state.len().max(gate.default_n_trunc());
    let pair = KrausPair::from_gate(gate, n_trunc)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pair.measure(state, selection, &mut rng)
}

/// Sequential generalized-parity measurements with `k′ = n_max + 1`.
#[derive(Clone, Debug)]
pub struct BosonCounter {
    pub n_max: usize,
    rounds: Vec<KrausPair>,
}

impl BosonCounter {
    /// Compiles the `n_max + 1` projector entanglers on `n_trunc` levels.
    pub fn new(n_max: usize, n_trunc: usize) -> Result<Self> {
        let n_trunc = n_trunc.max(n_max + 2);
        let rounds = (0..=n_max)
            .map(|n_b| {
                let spec = parity_projector_amplitudes(n_max + 1, n_b, n_max)?;
                KrausPair::from_gate(&kraus_compile(&spec)?, n_trunc)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_max, rounds })
    }

    /// Kraus pair testing `n mod (n_max+1) = n_b`.
    pub fn projector(&self, n_b: usize) -> &KrausPair {
        &self.rounds[n_b]
    }

    /// Tests `n_b = 0, 1, …` until the positive (flipped) outcome.
    pub fn count<R: Rng>(&self, state: &[C64], rng: &mut R) -> Result<(usize, Vec<MeasurementOutcome>)> {
        let total: f64 = state.iter().map(|c| c.norm_sqr()).sum();
        let above: f64 = state.iter().skip(self.n_max + 1).map(|c| c.norm_sqr()).sum();
        if !(total > 0.0) || above > SUPPORT_TOL * total {
            return Err(Error::InvalidArgument("state must be supported on n ≤ n_max".into()));
        }
        let mut current = state.to_vec();
        let mut trajectory = Vec::new();
        for (n_b, pair) in self.rounds.iter().enumerate() {
            let outcome = pair.measure(&current, Selection::Sample, rng)?;
            let positive = outcome.branch != pair.reference;
            current = outcome.post_state.clone();
            trajectory.push(outcome);
            if positive {
                return Ok((n_b, trajectory));
            }
        }
        Err(Error::BranchUnreachable)
    }
}

/// Identifies the boson number of `state` by sequential projectors.
pub fn boson_number_measurement(state: &[C64], n_max: usize, seed: u64) -> Result<(usize, Vec<MeasurementOutcome>)> {
    let counter = BosonCounter::new(n_max, state.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    counter.count(state, &mut rng)
}

/// Branch-amplitude check of a compiled Kraus entangler.
pub(crate) fn verify_kraus(gate: &CompiledGate, n_trunc: usize) -> Result<GateReport> {
    let ks = KrausSpec::from_gate_spec(&gate.spec)?;
    let n_max = ks.n_max();
    let n_trunc = n_trunc.max(n_max + 2);
    let op = gate.simulate(n_trunc)?;
    let reference = gate.backend.reference();
    let shift = usize::from(gate.backend == Backend::Jc);
    let mut overlap = C64::new(0.0, 0.0);
    let mut node_errors = Vec::with_capacity(n_max + 1);
    let mut leakage = 0.0f64;
    for n in 0..=n_max {
        let col = basis_index(n, reference);
        let a = op.matrix[(basis_index(n, reference), col)];
        let b = op.matrix[(basis_index(n + shift, reference.flip()), col)];
        overlap += ks.a_amps[n].conj() * a + ks.b_amps[n].conj() * b;
        node_errors.push((a - ks.a_amps[n]).norm().max((b - ks.b_amps[n]).norm()));
        leakage = leakage.max((1.0 - a.norm_sqr() - b.norm_sqr()).max(0.0));
    }
    let d = (n_max + 1) as f64;
    Ok(GateReport {
        infidelity: (1.0 - overlap.norm_sqr() / (d * d)).max(0.0),
        leakage,
        node_errors,
        normalization_defect: gate.normalization_defect,
        total_time: gate.total_time,
        unitarity_error: op.unitarity_error(),
    })
}

/// `|ψ⟩ → Σ G^n c_n|n⟩` restricted to `n ≤ n_max`, normalized.
pub fn ideal_nla_output(state: &[C64], gain: f64, n_max: usize) -> Vec<C64> {
    let out: Vec<C64> = state
        .iter()
        .enumerate()
        .map(|(n, &c)| if n <= n_max { c * gain.powi(n as i32) } else { C64::new(0.0, 0.0) })
        .collect();
    let norm: f64 = out.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    out.iter().map(|c| c / norm).collect()
}

/// `P_g = G^{−2n_max}·Σ_{n≤n_max} G^{2n}|c_n|²` for a normalized state.
pub fn nla_success_probability(state: &[C64], gain: f64, n_max: usize) -> f64 {
    let norm: f64 = state.iter().map(|c| c.norm_sqr()).sum();
    state
        .iter()
        .take(n_max + 1)
        .enumerate()
        .map(|(n, c)| gain.powi(2 * (n as i32 - n_max as i32)) * c.norm_sqr())
        .sum::<f64>()
        / norm
}

/// Input state as a Fock-state helper for tests and the CLI.
pub fn fock(n: usize, n_trunc: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n_trunc];
    v[n] = C64::new(1.0, 0.0);
    v
}
