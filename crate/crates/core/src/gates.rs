//! Gate compiler: turns gate intents into QSP schedules and checks them on
//! the simulator.
//!
//! Dispersive gates are mod-k phase gates built from one GQSP polynomial with
//! `2k` rounds of `χT = 2π/k`, so every one of them takes `4π/χ`. JC gates use
//! five oQSP rounds: a phase fix and a Hadamard that hybridize `|n,e⟩` into
//! `|↓_n⟩`, the dressed phase gate, and the inverses of the first two.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angles::{gqsp_angles, oqsp_angles, oqsp_inverse, AngleSet};
use crate::kernels::{
    hadamard_polynomial, jc_amplitude_polynomial, jc_kernels, jc_snap_polynomial, modk_polynomial, select_hs,
    JcKernelSet,
};
use crate::poly::{complete_pair, default_samples, ComplexPolynomial, PolynomialPair, QspMode};
use crate::sim::{
    basis_index, run_dispersive_on_levels, run_dispersive_sequence, run_jc_sequence, subspace_fidelity,
    HybridOperator, HybridState, Qubit, SimConfig, TwoModeSpace,
};
use crate::{Error, Result, C64, EPS_NORM};

/// Global-phase offsets tried when a JC phase polynomial leaves the unit disk.
const OFFSET_TRIES: usize = 64;
/// Tolerance on the modulus of the cat-state phase sums.
const CAT_UNIMODULAR_TOL: f64 = 1e-8;

/// Gate family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    ModK,
    Snap,
    TwoModeModK,
    RotationCodePhase,
    CatPrep,
    JcSnap,
    Kraus,
}

/// Physical coupling a schedule is written for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Dispersive,
    Jc,
}

impl Backend {
    /// Unit of reported times.
    pub fn time_units(self) -> &'static str {
        match self {
            Backend::Dispersive => "1/chi",
            Backend::Jc => "1/lambda",
        }
    }

    /// Qubit state the qumode is prepared with.
    pub fn reference(self) -> Qubit {
        match self {
            Backend::Dispersive => Qubit::G,
            Backend::Jc => Qubit::E,
        }
    }
}

/// Gate intent. Fields a kind does not use are left out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub kind: GateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phases_rad: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_rad: Option<f64>,
    /// Rotation codes: assign whole windows (default) or exact points only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<bool>,
    /// JC kernel powers; searched when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<usize>,
    /// Kraus branch amplitudes as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub a_amps: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b_amps: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<Backend>,
}

impl GateSpec {
    fn empty(kind: GateKind) -> Self {
        Self {
            kind,
            k: None,
            phases_rad: Vec::new(),
            n_max: None,
            d: None,
            l: None,
            theta_rad: None,
            window: None,
            h: None,
            s: None,
            a_amps: Vec::new(),
            b_amps: Vec::new(),
            backend: None,
        }
    }

    pub fn mod_k(phases: &[f64]) -> Self {
        Self {
            k: Some(phases.len()),
            phases_rad: phases.to_vec(),
            ..Self::empty(GateKind::ModK)
        }
    }

    pub fn snap(phases: &[f64]) -> Self {
        Self {
            n_max: Some(phases.len().saturating_sub(1)),
            phases_rad: phases.to_vec(),
            ..Self::empty(GateKind::Snap)
        }
    }

    pub fn two_mode(d: usize, phases: &[f64]) -> Self {
        Self {
            d: Some(d),
            phases_rad: phases.to_vec(),
            ..Self::empty(GateKind::TwoModeModK)
        }
    }

    pub fn rotation_code(l: usize, theta: f64) -> Self {
        Self {
            l: Some(l),
            theta_rad: Some(theta),
            ..Self::empty(GateKind::RotationCodePhase)
        }
    }

    pub fn cat(k: usize) -> Self {
        Self {
            k: Some(k),
            ..Self::empty(GateKind::CatPrep)
        }
    }

    pub fn jc_snap(phases: &[f64]) -> Self {
        Self {
            n_max: Some(phases.len().saturating_sub(1)),
            phases_rad: phases.to_vec(),
            ..Self::empty(GateKind::JcSnap)
        }
    }

    /// Fixes the JC kernel powers.
    pub fn with_hs(mut self, h: usize, s: usize) -> Self {
        self.h = Some(h);
        self.s = Some(s);
        self
    }

    pub fn kraus(a: &[C64], b: &[C64], backend: Backend) -> Self {
        let pack = |v: &[C64]| v.iter().map(|c| [c.re, c.im]).collect();
        Self {
            n_max: Some(a.len().saturating_sub(1)),
            a_amps: pack(a),
            b_amps: pack(b),
            backend: Some(backend),
            ..Self::empty(GateKind::Kraus)
        }
    }

    fn require<T: Copy>(v: Option<T>, name: &str) -> Result<T> {
        v.ok_or_else(|| Error::InvalidArgument(format!("missing field {name}")))
    }

    fn checked_phases(&self) -> Result<&[f64]> {
        if self.phases_rad.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument("phases must be finite".into()));
        }
        Ok(&self.phases_rad)
    }

    /// Target phases per residue class (dispersive) or per level (JC SNAP).
    pub fn target_phases(&self) -> Result<Vec<f64>> {
        match self.kind {
            GateKind::ModK => {
                let p = self.checked_phases()?;
                if let Some(k) = self.k {
                    if k != p.len() {
                        return Err(Error::InvalidArgument(format!("k = {k} but {} phases given", p.len())));
                    }
                }
                if p.is_empty() {
                    return Err(Error::InvalidArgument("modulus k must be at least 1".into()));
                }
                Ok(p.to_vec())
            }
            GateKind::Snap | GateKind::JcSnap => {
                let p = self.checked_phases()?;
                if p.is_empty() {
                    return Err(Error::InvalidArgument("snap needs at least one phase".into()));
                }
                if let Some(n) = self.n_max {
                    if n + 1 != p.len() {
                        return Err(Error::InvalidArgument(format!("n_max = {n} but {} phases given", p.len())));
                    }
                }
                if self.kind == GateKind::Snap {
                    if let Some(k) = self.k {
                        if k != p.len() {
                            return Err(Error::InvalidArgument("snap requires k = n_max + 1".into()));
                        }
                    }
                }
                Ok(p.to_vec())
            }
            GateKind::TwoModeModK => {
                let d = Self::require(self.d, "d")?;
                if d < 2 {
                    return Err(Error::InvalidArgument("qudit dimension d must be at least 2".into()));
                }
                let p = self.checked_phases()?;
                if p.is_empty() {
                    return qudit_cphase_phases(d);
                }
                if p.len() != 2 * d - 1 {
                    return Err(Error::InvalidArgument(format!("two-mode gate needs 2d−1 = {} phases", 2 * d - 1)));
                }
                Ok(p.to_vec())
            }
            GateKind::RotationCodePhase => {
                let l = Self::require(self.l, "L")?;
                let theta = Self::require(self.theta_rad, "theta_rad")?;
                if !theta.is_finite() {
                    return Err(Error::InvalidArgument("theta must be finite".into()));
                }
                rotation_code_phases(l, theta, self.window.unwrap_or(true))
            }
            GateKind::CatPrep => cat_phases(Self::require(self.k, "k")?),
            GateKind::Kraus => Err(Error::InvalidArgument("kraus specs carry amplitudes, not phases".into())),
        }
    }

    /// Backend the kind compiles to.
    pub fn backend(&self) -> Backend {
        match self.kind {
            GateKind::JcSnap => Backend::Jc,
            GateKind::Kraus => self.backend.unwrap_or(Backend::Dispersive),
            _ => Backend::Dispersive,
        }
    }
}

/// JC kernel data kept with a compiled gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JcInfo {
    pub n_max: usize,
    pub h: usize,
    pub s: usize,
    /// Node phases `ζ_n` of the completed Hadamard branch.
    pub zeta: Vec<f64>,
    /// Global phase added to the targets to keep `|F| ≤ 1`.
    pub phase_offset: f64,
}

/// Compiled schedule plus bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompiledGate {
    pub backend: Backend,
    pub spec: GateSpec,
    /// Echoed modulus of dispersive gates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Applied in order.
    pub angle_sets: Vec<AngleSet>,
    /// Interaction duration of one QSP round, in `total_time_units`.
    pub round_duration: f64,
    pub total_time: f64,
    pub total_time_units: String,
    pub polynomial_degree: usize,
    /// Worst normalization defect over the completed pairs.
    pub normalization_defect: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jc: Option<JcInfo>,
}

/// `ξ_l` of `P(z) = Σ_l ξ_l·(rotation by 2πl/k)` on the mod-k nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationDecomposition {
    pub xi: Vec<C64>,
}

impl RotationDecomposition {
    /// `Σ_l ξ_l ω_k^{ln}`.
    pub fn node_value(&self, n: usize) -> C64 {
        let k = self.xi.len();
        self.xi
            .iter()
            .enumerate()
            .map(|(l, x)| x * crate::kernels::root_of_unity(k, (l * n) as i64))
            .sum()
    }
}

fn dispersive_gate(spec: GateSpec, k: usize, pair: PolynomialPair, angles: AngleSet) -> CompiledGate {
    let step = angles.phase_step;
    CompiledGate {
        backend: Backend::Dispersive,
        spec,
        k: Some(k),
        round_duration: step,
        total_time: angles.rounds as f64 * step,
        total_time_units: Backend::Dispersive.time_units().into(),
        polynomial_degree: angles.rounds,
        normalization_defect: pair.defect,
        angle_sets: vec![angles],
        jc: None,
    }
}

/// Mod-k pipeline: kernel sum, completion, GQSP angles with `2k` rounds of
/// `2π/k`.
fn modk_schedule(phases: &[f64]) -> Result<(PolynomialPair, AngleSet)> {
    let k = phases.len();
    let p = modk_polynomial(phases)?;
    let pair = complete_pair(&p, QspMode::Gqsp)?.with_rounds(2 * k);
    let angles = gqsp_angles(&pair, 2.0 * PI / k as f64)?;
    Ok((pair, angles))
}

/// Compiles any dispersive phase-gate kind.
pub fn synth_modk(spec: &GateSpec) -> Result<CompiledGate> {
    let phases = spec.target_phases()?;
    if spec.kind == GateKind::JcSnap || spec.kind == GateKind::Kraus {
        return Err(Error::InvalidArgument("not a dispersive phase gate".into()));
    }
    let (pair, angles) = modk_schedule(&phases)?;
    Ok(dispersive_gate(spec.clone(), phases.len(), pair, angles))
}

/// SNAP on levels `0..=n_max` as a mod-`(n_max+1)` gate.
pub fn snap_compile(phases: &[f64]) -> Result<CompiledGate> {
    synth_modk(&GateSpec::snap(phases))
}

/// Two-mode gate on `n_T = n_A + n_B` with `k = 2d − 1`.
pub fn two_mode_compile(d: usize, phases: &[f64]) -> Result<CompiledGate> {
    synth_modk(&GateSpec::two_mode(d, phases))
}

/// `Θ_j = πj²/d` for `j = 0..2d−2`.
pub fn qudit_cphase_phases(d: usize) -> Result<Vec<f64>> {
    if d < 2 {
        return Err(Error::InvalidArgument("qudit dimension d must be at least 2".into()));
    }
    Ok((0..2 * d - 1).map(|j| PI * (j * j) as f64 / d as f64).collect())
}

/// Phases of a mod-2L logical phase gate: `0` near even multiples of `L`,
/// `theta` near odd ones. With `window` every residue joins the window of
/// its nearest multiple (ties go to the even one); without it only the exact
/// multiples are set.
pub fn rotation_code_phases(l: usize, theta: f64, window: bool) -> Result<Vec<f64>> {
    if l == 0 {
        return Err(Error::InvalidArgument("rotation order L must be at least 1".into()));
    }
    let period = 2 * l;
    let phases = (0..period)
        .map(|j| {
            let r = j % l;
            let (dist, multiple) = if r * 2 < l {
                (r, j - r)
            } else if r * 2 > l {
                (l - r, j + l - r)
            } else {
                // Equidistant: prefer whichever neighbour is the even multiple.
                let lower = j - r;
                let upper = j + l - r;
                if (lower / l).is_multiple_of(2) { (r, lower) } else { (l - r, upper) }
            };
            let odd = (multiple / l) % 2 == 1;
            let inside = if window { dist <= l / 2 } else { dist == 0 };
            if inside && odd { theta } else { 0.0 }
        })
        .collect();
    Ok(phases)
}

/// `ξ_l = p_l + p_{l+k} + δ_{0l}·p_{2k}`.
pub fn rotation_decomposition(p: &ComplexPolynomial, k: usize) -> Result<RotationDecomposition> {
    if k == 0 || p.degree() > 2 * k {
        return Err(Error::InvalidArgument("rotation decomposition needs deg P ≤ 2k".into()));
    }
    let xi = (0..k)
        .map(|l| p.coeff(l) + p.coeff(l + k) + if l == 0 { p.coeff(2 * k) } else { C64::new(0.0, 0.0) })
        .collect();
    Ok(RotationDecomposition { xi })
}

/// Cat-state Gauss-sum coefficients `e^{il(l−k)π/k}/√k`.
pub fn cat_coefficients(k: usize) -> Vec<C64> {
    let norm = (k as f64).sqrt();
    (0..k)
        .map(|l| C64::from_polar(1.0 / norm, (l as f64) * (l as f64 - k as f64) * PI / k as f64))
        .collect()
}

/// `Θ_n = arg Σ_l e^{il(l−k)π/k}e^{i2πln/k}/√k`.
pub fn cat_phases(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::InvalidArgument("cat preparation needs k ≥ 2".into()));
    }
    let g = cat_coefficients(k);
    (0..k)
        .map(|n| {
            let v: C64 = g
                .iter()
                .enumerate()
                .map(|(l, x)| x * crate::kernels::root_of_unity(k, (l * n) as i64))
                .sum();
            if (v.norm() - 1.0).abs() > CAT_UNIMODULAR_TOL {
                Err(Error::CatPhaseNotUnimodular)
            } else {
                Ok(v.arg())
            }
        })
        .collect()
}

/// Dressed-frame node values `(e^{−iMΦ/2}F, e^{−iMΦ/2}G)` of a pair.
fn dressed_nodes(pair: &PolynomialPair, kernels: &JcKernelSet) -> Vec<(C64, C64)> {
    let m = pair.rounds as f64;
    kernels
        .phase_nodes
        .iter()
        .map(|&phi| {
            let frame = C64::from_polar(1.0, -m * phi / 2.0);
            (frame * pair.p.eval_on_circle(phi), frame * pair.q.eval_on_circle(phi))
        })
        .collect()
}

fn jc_round(f: &ComplexPolynomial, kernels: &JcKernelSet) -> Result<(PolynomialPair, AngleSet)> {
    let pair = complete_pair(f, QspMode::Oqsp)?.with_rounds(kernels.degree());
    let angles = oqsp_angles(&pair, kernels.round_phase())?;
    Ok((pair, angles))
}

fn fits_disk(f: &ComplexPolynomial) -> bool {
    f.sup_on_circle(default_samples(f.degree())) <= 1.0 + EPS_NORM
}

/// Two hybridization rounds for `kernels`.
#[derive(Clone, Debug, PartialEq)]
pub struct Hybridization {
    /// Dressed phase fix, applied first.
    pub fix: AngleSet,
    /// Hadamard-type round.
    pub hadamard: AngleSet,
    /// Node phases `ζ_n` of the Hadamard branch.
    pub zeta: Vec<f64>,
    pub defect: f64,
}

/// Builds the rounds that take `|n,e⟩` to a phase times `|↓_n⟩`.
///
/// The Hadamard round has dressed node matrix `[[f, −b̄], [b, f̄]]` with
/// `|f| = |b| = 1/√2` and `b = |b|e^{iζ}`. A preceding dressed phase gate
/// `diag(e^{iα}, e^{−iα})` with `e^{2iα} = f̄/b` cancels the `|↑_n⟩`
/// component. `α_n` is free up to `π`, which flips the sign of a whole pair
/// and is undone by the inverse rounds, so those signs are searched when the
/// first choice leaves the unit disk.
pub fn jc_hybridization(kernels: &JcKernelSet) -> Result<Hybridization> {
    let (h_pair, hadamard) = jc_round(&hadamard_polynomial(kernels), kernels)?;
    let nodes = dressed_nodes(&h_pair, kernels);
    let zeta: Vec<f64> = nodes.iter().map(|(_, b)| b.arg()).collect();
    let alpha: Vec<f64> = nodes.iter().map(|(f, b)| (f.conj() / b).arg() / 2.0).collect();
    let levels = alpha.len();
    let patterns = 1usize << levels.min(12);
    for mask in 0..patterns {
        let shifted: Vec<f64> = alpha
            .iter()
            .enumerate()
            .map(|(n, &a)| if mask >> n & 1 == 1 { a + PI } else { a })
            .collect();
        let f = jc_snap_polynomial(&shifted, kernels)?;
        if !fits_disk(&f) {
            continue;
        }
        let (fix_pair, fix) = jc_round(&f, kernels)?;
        return Ok(Hybridization {
            fix,
            hadamard,
            zeta,
            defect: h_pair.defect.max(fix_pair.defect),
        });
    }
    Err(Error::NotCompletable {
        sup: jc_snap_polynomial(&alpha, kernels)?.sup_on_circle(4096),
    })
}

/// Offsets `0, g, 2g, …` (mod 2π) with the golden angle `g`.
fn phase_offsets() -> impl Iterator<Item = f64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..OFFSET_TRIES).map(move |i| (i as f64 * golden) % (2.0 * PI))
}

/// Dressed phase round for node values `e^{iΘ_n}` times a searched global
/// phase, returning the pair, angles and the offset used.
fn jc_phase_round(phases: &[f64], kernels: &JcKernelSet) -> Result<(PolynomialPair, AngleSet, f64)> {
    let mut worst = 0.0f64;
    for offset in phase_offsets() {
        let shifted: Vec<f64> = phases.iter().map(|t| t + offset).collect();
        let f = jc_snap_polynomial(&shifted, kernels)?;
        if !fits_disk(&f) {
            worst = worst.max(f.sup_on_circle(4096));
            continue;
        }
        let (pair, angles) = jc_round(&f, kernels)?;
        return Ok((pair, angles, offset));
    }
    Err(Error::NotCompletable { sup: worst })
}

fn kernels_for(spec: &GateSpec, n_max: usize) -> Result<JcKernelSet> {
    let (h, s) = match (spec.h, spec.s) {
        (Some(h), Some(s)) => (h, s),
        (None, None) => select_hs(n_max)?,
        _ => return Err(Error::InvalidArgument("give both h and s or neither".into())),
    };
    jc_kernels(n_max, h, s)
}

fn jc_gate(spec: GateSpec, kernels: &JcKernelSet, hyb: &Hybridization, middle: Vec<AngleSet>, defect: f64, offset: f64) -> CompiledGate {
    let mut sets = vec![hyb.fix.clone(), hyb.hadamard.clone()];
    sets.extend(middle);
    sets.push(oqsp_inverse(&hyb.hadamard));
    sets.push(oqsp_inverse(&hyb.fix));
    let step = kernels.round_phase();
    let total: usize = sets.iter().map(|a| a.rounds).sum();
    CompiledGate {
        backend: Backend::Jc,
        spec,
        k: None,
        round_duration: step,
        total_time: total as f64 * step,
        total_time_units: Backend::Jc.time_units().into(),
        polynomial_degree: kernels.degree(),
        normalization_defect: defect.max(hyb.defect),
        angle_sets: sets,
        jc: Some(JcInfo {
            n_max: kernels.n_max,
            h: kernels.h,
            s: kernels.s,
            zeta: hyb.zeta.clone(),
            phase_offset: offset,
        }),
    }
}

/// JC SNAP `|n,e⟩ → e^{iΘ_n}|n,e⟩` for `n ≤ n_max` in five oQSP rounds.
pub fn jc_snap_compile(spec: &GateSpec) -> Result<CompiledGate> {
    if spec.kind != GateKind::JcSnap {
        return Err(Error::InvalidArgument("not a jc_snap spec".into()));
    }
    let phases = spec.target_phases()?;
    let kernels = kernels_for(spec, phases.len() - 1)?;
    let hyb = jc_hybridization(&kernels)?;
    let (pair, angles, offset) = jc_phase_round(&phases, &kernels)?;
    Ok(jc_gate(spec.clone(), &kernels, &hyb, vec![angles], pair.defect, offset))
}

/// Builds the JC entangler rounds `[pre, entangler, post]` for Kraus targets.
/// See [`crate::nonunitary`].
pub(crate) fn jc_kraus_rounds(
    spec: &GateSpec,
    a: &[C64],
    b: &[C64],
) -> Result<CompiledGate> {
    let n_max = a.len() - 1;
    let kernels = kernels_for(spec, n_max)?;
    let hyb = jc_hybridization(&kernels)?;
    let f = jc_amplitude_polynomial(a, &kernels)?;
    let (pair, entangler) = jc_round(&f, &kernels)?;
    let nodes = dressed_nodes(&pair, &kernels);
    // Hybridization sends |n,e⟩ to c_n|↓_n⟩ and un-hybridization sends |↑_n⟩
    // to ε_n|n+1,g⟩; both phases are read off the simulator.
    let cfg = SimConfig::new(n_max + 2);
    let (hyb_op, _) = run_jc_sequence(&[hyb.fix.clone(), hyb.hadamard.clone()], &cfg)?;
    let (unhyb, _) = run_jc_sequence(&[oqsp_inverse(&hyb.hadamard), oqsp_inverse(&hyb.fix)], &cfg)?;
    let mut mu = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let (down, up) = crate::sim::dressed_states(n, cfg.n_trunc)?;
        let c = down.inner(&hyb_op.apply(&HybridState::fock(n, Qubit::E, cfg.n_trunc)?));
        let eps = unhyb.apply(&up).amplitudes[basis_index(n + 1, Qubit::G)];
        let realized = c * nodes[n].1 * eps;
        // Pre and post dressed phase gates diag(e^{±iμ}) then diag(e^{∓iμ})
        // leave |↓⟩ alone and rotate the |↑⟩ amplitude by e^{2iμ}.
        mu.push(if realized.norm() > 1e-12 && b[n].norm() > 1e-12 {
            (b[n] / realized).arg() / 2.0
        } else {
            0.0
        });
    }
    let (pre, post, fix_defect) = jc_bracket_rounds(&mu, &kernels)?;
    let defect = pair.defect.max(fix_defect);
    Ok(jc_gate(spec.clone(), &kernels, &hyb, vec![pre, entangler, post], defect, 0.0))
}

/// Dressed phase rounds `diag(e^{iμ}, e^{−iμ})` and `diag(e^{−iμ}, e^{iμ})`
/// around an entangler. Adding `π` to the same level in both keeps the
/// product, so sign patterns are searched until both fit the unit disk.
fn jc_bracket_rounds(mu: &[f64], kernels: &JcKernelSet) -> Result<(AngleSet, AngleSet, f64)> {
    let patterns = 1usize << mu.len().min(12);
    let mut worst = 0.0f64;
    for mask in 0..patterns {
        let flip = |n: usize| if mask >> n & 1 == 1 { PI } else { 0.0 };
        let pre_t: Vec<f64> = mu.iter().enumerate().map(|(n, m)| m + flip(n)).collect();
        let post_t: Vec<f64> = mu.iter().enumerate().map(|(n, m)| -m + flip(n)).collect();
        let pre_f = jc_snap_polynomial(&pre_t, kernels)?;
        let post_f = jc_snap_polynomial(&post_t, kernels)?;
        if !fits_disk(&pre_f) || !fits_disk(&post_f) {
            worst = worst.max(pre_f.sup_on_circle(4096)).max(post_f.sup_on_circle(4096));
            continue;
        }
        let (a, pre) = jc_round(&pre_f, kernels)?;
        let (b, post) = jc_round(&post_f, kernels)?;
        return Ok((pre, post, a.defect.max(b.defect)));
    }
    Err(Error::NotCompletable { sup: worst })
}

/// Compiles any spec.
pub fn compile(spec: &GateSpec) -> Result<CompiledGate> {
    match spec.kind {
        GateKind::JcSnap => jc_snap_compile(spec),
        GateKind::Kraus => crate::nonunitary::kraus_compile_spec(spec),
        _ => synth_modk(spec),
    }
}

impl CompiledGate {
    /// Default qumode truncation used for verification.
    pub fn default_n_trunc(&self) -> usize {
        match self.spec.kind {
            GateKind::ModK | GateKind::RotationCodePhase | GateKind::CatPrep => 2 * self.k.unwrap_or(1) + 2,
            GateKind::TwoModeModK => self.spec.d.unwrap_or(2) + 2,
            GateKind::Kraus => self.spec.a_amps.len().max(1) + 1,
            _ => self.spec.phases_rad.len().max(1) + 1,
        }
    }

    /// Full operator of the schedule. For two-mode gates `n_trunc` is the
    /// truncation per mode.
    pub fn simulate(&self, n_trunc: usize) -> Result<HybridOperator> {
        let mut cfg = SimConfig::new(n_trunc);
        match self.backend {
            Backend::Jc => Ok(run_jc_sequence(&self.angle_sets, &cfg)?.0),
            Backend::Dispersive => {
                let levels: Vec<usize> = if self.spec.kind == GateKind::TwoModeModK {
                    TwoModeSpace { n_per_mode: n_trunc }.levels()
                } else {
                    (0..n_trunc).collect()
                };
                cfg.n_trunc = levels.len();
                let mut op = HybridOperator::identity(levels.len());
                for a in &self.angle_sets {
                    let u = if self.spec.kind == GateKind::TwoModeModK {
                        run_dispersive_on_levels(a, &levels)?
                    } else {
                        run_dispersive_sequence(a, &cfg)?
                    };
                    op = op.then(&u);
                }
                Ok(op)
            }
        }
    }

    /// Basis columns and diagonal targets the gate is judged on.
    fn targets(&self, n_trunc: usize) -> Result<(Vec<usize>, Vec<C64>)> {
        let reference = self.backend.reference();
        let cis = |t: f64| C64::from_polar(1.0, t);
        match self.spec.kind {
            GateKind::Kraus => Err(Error::InvalidArgument("kraus gates have branch targets".into())),
            GateKind::TwoModeModK => {
                let phases = self.spec.target_phases()?;
                let d = self.spec.d.unwrap_or(2);
                let space = TwoModeSpace { n_per_mode: n_trunc };
                let mut cols = Vec::new();
                let mut tg = Vec::new();
                for na in 0..d.min(n_trunc) {
                    for nb in 0..d.min(n_trunc) {
                        cols.push(basis_index(space.index(na, nb), reference));
                        tg.push(cis(phases[(na + nb) % phases.len()]));
                    }
                }
                Ok((cols, tg))
            }
            GateKind::Snap | GateKind::JcSnap => {
                let phases = self.spec.target_phases()?;
                let levels = phases.len().min(n_trunc);
                Ok(((0..levels).map(|n| basis_index(n, reference)).collect(), phases[..levels].iter().map(|&t| cis(t)).collect()))
            }
            _ => {
                let phases = self.spec.target_phases()?;
                let k = phases.len();
                let top = n_trunc.saturating_sub(1).max(1);
                Ok((
                    (0..top).map(|n| basis_index(n, reference)).collect(),
                    (0..top).map(|n| cis(phases[n % k])).collect(),
                ))
            }
        }
    }

    /// Simulates the schedule and measures it against its target.
    pub fn verify(&self, n_trunc: Option<usize>) -> Result<GateReport> {
        let n_trunc = n_trunc.unwrap_or_else(|| self.default_n_trunc());
        if self.spec.kind == GateKind::Kraus {
            return crate::nonunitary::verify_kraus(self, n_trunc);
        }
        let op = self.simulate(n_trunc)?;
        let (cols, tg) = self.targets(n_trunc)?;
        let fidelity = subspace_fidelity(&op, &cols, &tg);
        let tr: C64 = cols.iter().zip(&tg).map(|(&c, t)| t.conj() * op.matrix[(c, c)]).sum();
        let global = if tr.norm() > 0.0 { tr / tr.norm() } else { C64::new(1.0, 0.0) };
        let node_errors = cols
            .iter()
            .zip(&tg)
            .map(|(&c, t)| (op.matrix[(c, c)] - t * global).norm())
            .collect();
        let leakage = cols
            .iter()
            .map(|&c| {
                (0..op.matrix.nrows())
                    .filter(|r| r % 2 != c % 2)
                    .map(|r| op.matrix[(r, c)].norm_sqr())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        Ok(GateReport {
            infidelity: (1.0 - fidelity).max(0.0),
            leakage,
            node_errors,
            normalization_defect: self.normalization_defect,
            total_time: self.total_time,
            unitarity_error: op.unitarity_error(),
        })
    }
}

/// Verification metrics of a compiled gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub infidelity: f64,
    pub leakage: f64,
    pub node_errors: Vec<f64>,
    pub normalization_defect: f64,
    pub total_time: f64,
    pub unitarity_error: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qudit_phases_small_d() {
        let p = qudit_cphase_phases(2).unwrap();
        assert_eq!(p, vec![0.0, PI / 2.0, 2.0 * PI]);
        let p = qudit_cphase_phases(3).unwrap();
        let e = [0.0, PI / 3.0, 4.0 * PI / 3.0, 3.0 * PI, 16.0 * PI / 3.0];
        for (a, b) in p.iter().zip(e) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(qudit_cphase_phases(1).is_err());
    }

    #[test]
    fn rotation_code_window_assignment() {
        let t = 0.8;
        assert_eq!(rotation_code_phases(1, t, true).unwrap(), vec![0.0, t]);
        assert_eq!(rotation_code_phases(2, t, true).unwrap(), vec![0.0, 0.0, t, 0.0]);
        assert_eq!(rotation_code_phases(3, t, true).unwrap(), vec![0.0, 0.0, t, t, t, 0.0]);
        assert_eq!(rotation_code_phases(3, t, false).unwrap(), vec![0.0, 0.0, 0.0, t, 0.0, 0.0]);
        assert_eq!(
            rotation_code_phases(4, t, true).unwrap(),
            vec![0.0, 0.0, 0.0, t, t, t, 0.0, 0.0]
        );
    }

    #[test]
    fn cat_phases_k2() {
        let p = cat_phases(2).unwrap();
        assert!((p[0] + PI / 4.0).abs() < 1e-14);
        assert!((p[1] - PI / 4.0).abs() < 1e-14);
        assert!(cat_phases(1).is_err());
    }

    #[test]
    fn cat_phases_unimodular_for_many_k() {
        for k in 2..=12 {
            assert_eq!(cat_phases(k).unwrap().len(), k);
        }
    }

    #[test]
    fn eparity_decomposition() {
        let th = 0.6f64;
        let p = modk_polynomial(&[th, -th]).unwrap();
        let xi = rotation_decomposition(&p, 2).unwrap();
        assert!((xi.xi[0] - C64::new(th.cos(), 0.0)).norm() < 1e-14);
        assert!((xi.xi[1] - C64::new(0.0, th.sin())).norm() < 1e-14);
        assert!((xi.node_value(0) - C64::from_polar(1.0, th)).norm() < 1e-14);
        assert!((xi.node_value(1) - C64::from_polar(1.0, -th)).norm() < 1e-14);
    }

    #[test]
    fn decomposition_rejects_high_degree() {
        let p = ComplexPolynomial::monomial(C64::new(1.0, 0.0), 5);
        assert!(rotation_decomposition(&p, 2).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = GateSpec::rotation_code(2, 0.5);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"kind":"rotation_code_phase","L":2,"theta_rad":0.5}"#);
        let back: GateSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn snap_rejects_mismatched_k() {
        let mut spec = GateSpec::snap(&[0.0, 1.0]);
        spec.k = Some(3);
        assert!(synth_modk(&spec).is_err());
    }

    #[test]
    fn modk_identity_gate() {
        let g = synth_modk(&GateSpec::mod_k(&[0.0])).unwrap();
        let r = g.verify(None).unwrap();
        assert!(r.infidelity < 1e-10);
        assert!((g.total_time - 4.0 * PI).abs() < 1e-12);
    }
}
