//! Exact simulation of a qumode coupled to a qubit on a truncated
//! Fock⊗{g,e} space.
//!
//! Basis order is `(|0,g⟩, |0,e⟩, |1,g⟩, |1,e⟩, …)`. Every primitive is
//! built analytically from diagonal or 2×2 blocks; nothing here integrates
//! in time.

mod wigner;

pub use wigner::{wigner, WignerGrid, WignerMap};

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::angles::{gqsp_rotation, AngleSet};
use crate::poly::QspMode;
use crate::{Error, Result, C64};

/// Tolerance on `‖U†U − I‖_max` for operators flagged unitary.
pub const UNITARY_TOL: f64 = 1e-10;

/// Qubit basis state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Qubit {
    G,
    E,
}

impl Qubit {
    pub fn offset(self) -> usize {
        match self {
            Qubit::G => 0,
            Qubit::E => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Qubit::G => Qubit::E,
            Qubit::E => Qubit::G,
        }
    }
}

/// Index of `|n, q⟩` in the hybrid basis.
pub fn basis_index(n: usize, q: Qubit) -> usize {
    2 * n + q.offset()
}

/// Couplings and truncation shared by the primitives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Dispersive strength χ.
    pub chi: f64,
    /// JC strength λ.
    pub lam: f64,
    /// Detuning Δ.
    pub delta: f64,
    /// Number of qumode basis states.
    pub n_trunc: usize,
    /// Integration step of the time-domain baseline.
    pub dt: f64,
}

impl SimConfig {
    /// Unit couplings and a step suited to the default baseline.
    pub fn new(n_trunc: usize) -> Self {
        Self {
            chi: 1.0,
            lam: 1.0,
            delta: 1.0,
            n_trunc,
            dt: 1e-3,
        }
    }

    /// Checks couplings and that the truncation holds `n_max + 2` levels.
    pub fn validate(&self, n_max: usize) -> Result<()> {
        let positive = [self.chi, self.lam, self.delta, self.dt];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("couplings and dt must be positive".into()));
        }
        if self.n_trunc < n_max + 2 {
            return Err(Error::InvalidArgument(format!(
                "n_trunc = {} must be at least n_max + 2 = {}",
                self.n_trunc,
                n_max + 2
            )));
        }
        Ok(())
    }
}

/// State vector on the hybrid space.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    pub n_trunc: usize,
    pub amplitudes: DVector<C64>,
}

impl HybridState {
    /// `|ψ⟩ ⊗ |q⟩` for qumode amplitudes `c_n`, zero-padded to `n_trunc`.
    pub fn product(qumode: &[C64], q: Qubit, n_trunc: usize) -> Result<Self> {
        if qumode.len() > n_trunc {
            return Err(Error::InvalidArgument(format!(
                "{} qumode amplitudes exceed n_trunc = {}",
                qumode.len(),
                n_trunc
            )));
        }
        let mut amplitudes = DVector::zeros(2 * n_trunc);
        for (n, &c) in qumode.iter().enumerate() {
            amplitudes[basis_index(n, q)] = c;
        }
        Ok(Self { n_trunc, amplitudes })
    }

    /// Fock state `|n, q⟩`.
    pub fn fock(n: usize, q: Qubit, n_trunc: usize) -> Result<Self> {
        if n >= n_trunc {
            return Err(Error::InvalidArgument(format!("level {n} outside truncation {n_trunc}")));
        }
        let mut amplitudes = DVector::zeros(2 * n_trunc);
        amplitudes[basis_index(n, q)] = C64::new(1.0, 0.0);
        Ok(Self { n_trunc, amplitudes })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Qumode amplitudes of the `q` branch (unnormalized).
    pub fn branch(&self, q: Qubit) -> Vec<C64> {
        (0..self.n_trunc).map(|n| self.amplitudes[basis_index(n, q)]).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Dense operator on the hybrid space.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridOperator {
    pub n_trunc: usize,
    pub matrix: DMatrix<C64>,
    pub unitary: bool,
}

impl HybridOperator {
    pub fn identity(n_trunc: usize) -> Self {
        Self {
            n_trunc,
            matrix: DMatrix::identity(2 * n_trunc, 2 * n_trunc),
            unitary: true,
        }
    }

    /// `next · self`: `self` acts first.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            n_trunc: self.n_trunc,
            matrix: &next.matrix * &self.matrix,
            unitary: self.unitary && next.unitary,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n_trunc: self.n_trunc,
            matrix: self.matrix.adjoint(),
            unitary: self.unitary,
        }
    }

    pub fn apply(&self, state: &HybridState) -> HybridState {
        HybridState {
            n_trunc: self.n_trunc,
            amplitudes: &self.matrix * &state.amplitudes,
        }
    }

    /// `⟨n, q_out| U |m, q_in⟩`.
    pub fn element(&self, n: usize, q_out: Qubit, m: usize, q_in: Qubit) -> C64 {
        self.matrix[(basis_index(n, q_out), basis_index(m, q_in))]
    }

    /// Qumode operator `⟨q_out| U |q_in⟩`.
    pub fn qumode_block(&self, q_out: Qubit, q_in: Qubit) -> DMatrix<C64> {
        DMatrix::from_fn(self.n_trunc, self.n_trunc, |n, m| self.element(n, q_out, m, q_in))
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_error(&self) -> f64 {
        let dim = self.matrix.nrows();
        let g = self.matrix.adjoint() * &self.matrix - DMatrix::<C64>::identity(dim, dim);
        g.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

fn cis(a: f64) -> C64 {
    C64::from_polar(1.0, a)
}

// In-place left multiplications used by the sequence runners. Each costs
// O(dim · columns) instead of a dense product.

fn left_diag(m: &mut DMatrix<C64>, diag: &[C64]) {
    for (r, &d) in diag.iter().enumerate() {
        if d != C64::new(1.0, 0.0) {
            m.row_mut(r).iter_mut().for_each(|x| *x *= d);
        }
    }
}

/// Applies the 2×2 block `b` to rows `(i, j)`.
fn left_pair(m: &mut DMatrix<C64>, i: usize, j: usize, b: &Matrix2<C64>) {
    for c in 0..m.ncols() {
        let (x, y) = (m[(i, c)], m[(j, c)]);
        m[(i, c)] = b[(0, 0)] * x + b[(0, 1)] * y;
        m[(j, c)] = b[(1, 0)] * x + b[(1, 1)] * y;
    }
}

fn left_qubit(m: &mut DMatrix<C64>, n_trunc: usize, b: &Matrix2<C64>) {
    for n in 0..n_trunc {
        left_pair(m, basis_index(n, Qubit::G), basis_index(n, Qubit::E), b);
    }
}

fn controlled_phase_diag(chi_t: f64, levels: &[usize]) -> Vec<C64> {
    let mut d = vec![C64::new(1.0, 0.0); 2 * levels.len()];
    for (i, &n) in levels.iter().enumerate() {
        d[2 * i] = cis(chi_t * n as f64);
    }
    d
}

/// Qubit block `e^{i(λ+φ−π)/2}·e^{i(φ/2+π/4)σz}·e^{iθσx}·e^{i(λ/2+π/4)σz}`
/// with `σz = |g⟩⟨g| − |e⟩⟨e|`.
pub fn qubit_drive_block(theta: f64, phi: f64, lam_angle: f64) -> Matrix2<C64> {
    let zero = C64::new(0.0, 0.0);
    let rz = |a: f64| Matrix2::new(cis(a), zero, zero, cis(-a));
    let (s, c) = theta.sin_cos();
    let rx = Matrix2::new(C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0));
    let quarter = std::f64::consts::FRAC_PI_4;
    let global = cis((lam_angle + phi - std::f64::consts::PI) / 2.0);
    rz(phi / 2.0 + quarter) * rx * rz(lam_angle / 2.0 + quarter) * global
}

/// Block of `e^{−iH_JC T}` on `(|n+1,g⟩, |n,e⟩)` with `Φ = λT√(n+1)`.
fn jc_block(lam_t: f64, n: usize) -> Matrix2<C64> {
    let (s, c) = (lam_t * ((n + 1) as f64).sqrt() / 2.0).sin_cos();
    Matrix2::new(C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0))
}

fn detuning_diag(delta_t: f64, n_trunc: usize) -> Vec<C64> {
    (0..2 * n_trunc)
        .map(|i| if i % 2 == 0 { cis(delta_t) } else { cis(-delta_t) })
        .collect()
}

fn left_jc(m: &mut DMatrix<C64>, n_trunc: usize, lam_t: f64) {
    for n in 0..n_trunc.saturating_sub(1) {
        left_pair(m, basis_index(n + 1, Qubit::G), basis_index(n, Qubit::E), &jc_block(lam_t, n));
    }
}

/// `|n,g⟩ → e^{iχTn}|n,g⟩`, `|n,e⟩ → |n,e⟩`.
pub fn controlled_phase(chi_t: f64, cfg: &SimConfig) -> HybridOperator {
    let levels: Vec<usize> = (0..cfg.n_trunc).collect();
    let mut op = HybridOperator::identity(cfg.n_trunc);
    left_diag(&mut op.matrix, &controlled_phase_diag(chi_t, &levels));
    op
}

/// Qubit rotation tensored with the identity on the qumode.
pub fn qubit_drive(theta: f64, phi: f64, lam_angle: f64, cfg: &SimConfig) -> HybridOperator {
    let mut op = HybridOperator::identity(cfg.n_trunc);
    left_qubit(&mut op.matrix, cfg.n_trunc, &qubit_drive_block(theta, phi, lam_angle));
    op
}

/// Exact JC evolution for the effective `H = (λ/2)(aσ+ + a†σ−)`. The
/// dressed states `|↓_n⟩ = (|n+1,g⟩−|n,e⟩)/√2` and `|↑_n⟩ = (|n+1,g⟩+|n,e⟩)/√2`
/// acquire `e^{+iΦ_n/2}` and `e^{−iΦ_n/2}`. `|0,g⟩` and the top `|e⟩` state,
/// whose partner lies outside the truncation, are left unchanged.
pub fn jc_evolution(lam_t: f64, cfg: &SimConfig) -> HybridOperator {
    let mut op = HybridOperator::identity(cfg.n_trunc);
    left_jc(&mut op.matrix, cfg.n_trunc, lam_t);
    op
}

/// `e^{iΔtσz}`: `|↓_n⟩ → cos Δt|↓_n⟩ + i sin Δt|↑_n⟩`.
pub fn detuning_rotation(delta_t: f64, cfg: &SimConfig) -> HybridOperator {
    let mut op = HybridOperator::identity(cfg.n_trunc);
    left_diag(&mut op.matrix, &detuning_diag(delta_t, cfg.n_trunc));
    op
}

/// GQSP schedule on the single-mode space: `T_M·C·T_{M−1}·…·C·T_0` with
/// `C = controlled_phase(phase_step)`.
pub fn run_dispersive_sequence(angles: &AngleSet, cfg: &SimConfig) -> Result<HybridOperator> {
    let levels: Vec<usize> = (0..cfg.n_trunc).collect();
    run_dispersive_on_levels(angles, &levels)
}

/// Same schedule on any qumode basis whose `i`-th state holds `levels[i]`
/// bosons in total, as in a multi-mode space with a shared dispersive shift.
pub fn run_dispersive_on_levels(angles: &AngleSet, levels: &[usize]) -> Result<HybridOperator> {
    if angles.convention != QspMode::Gqsp {
        return Err(Error::InvalidArgument("dispersive sequences use the gqsp convention".into()));
    }
    let dim = levels.len();
    let mut op = HybridOperator::identity(dim);
    let phase = controlled_phase_diag(angles.phase_step, levels);
    for m in 0..=angles.rounds {
        if m > 0 {
            left_diag(&mut op.matrix, &phase);
        }
        let r = gqsp_rotation(angles.thetas[m], angles.phis[m], angles.lambdas[m]);
        left_qubit(&mut op.matrix, dim, &r);
    }
    Ok(op)
}

/// Interaction time of a dispersive schedule, `M·phase_step/χ`.
pub fn dispersive_interaction_time(angles: &AngleSet, cfg: &SimConfig) -> f64 {
    angles.rounds as f64 * angles.phase_step / cfg.chi
}

/// Runs oQSP rounds in order. Each round starts with the detuning rotation
/// `θ_0` and alternates JC evolution by `phase_step` with `θ_m`. Returns the
/// operator and the total interaction time `Σ M_round·phase_step/λ`.
pub fn run_jc_sequence(rounds: &[AngleSet], cfg: &SimConfig) -> Result<(HybridOperator, f64)> {
    let mut op = HybridOperator::identity(cfg.n_trunc);
    let mut time = 0.0;
    for angles in rounds {
        if angles.convention != QspMode::Oqsp {
            return Err(Error::InvalidArgument("jc sequences use the oqsp convention".into()));
        }
        for m in 0..=angles.rounds {
            if m > 0 {
                left_jc(&mut op.matrix, cfg.n_trunc, angles.phase_step);
            }
            left_diag(&mut op.matrix, &detuning_diag(angles.thetas[m], cfg.n_trunc));
        }
        time += angles.rounds as f64 * angles.phase_step / cfg.lam;
    }
    Ok((op, time))
}

/// Dressed states `(|↓_n⟩, |↑_n⟩)` as hybrid states.
pub fn dressed_states(n: usize, n_trunc: usize) -> Result<(HybridState, HybridState)> {
    if n + 1 >= n_trunc {
        return Err(Error::InvalidArgument(format!("dressed pair {n} needs n_trunc > {}", n + 1)));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut down = DVector::zeros(2 * n_trunc);
    let mut up = DVector::zeros(2 * n_trunc);
    down[basis_index(n + 1, Qubit::G)] = C64::new(h, 0.0);
    down[basis_index(n, Qubit::E)] = C64::new(-h, 0.0);
    up[basis_index(n + 1, Qubit::G)] = C64::new(h, 0.0);
    up[basis_index(n, Qubit::E)] = C64::new(h, 0.0);
    Ok((
        HybridState { n_trunc, amplitudes: down },
        HybridState { n_trunc, amplitudes: up },
    ))
}

/// `|tr(V†U_sub)|²/d²` for a diagonal target `V = diag(targets)` on the
/// basis columns `columns`.
pub fn subspace_fidelity(actual: &HybridOperator, columns: &[usize], targets: &[C64]) -> f64 {
    assert_eq!(columns.len(), targets.len(), "one target per column");
    let tr: C64 = columns
        .iter()
        .zip(targets)
        .map(|(&c, t)| t.conj() * actual.matrix[(c, c)])
        .sum();
    let d = columns.len() as f64;
    tr.norm_sqr() / (d * d)
}

/// Trace fidelity of `actual` against `Σ_n e^{iΘ_n}|n⟩⟨n|` on levels
/// `0..=n_max` with the qubit held in `reference`.
pub fn gate_fidelity(actual: &HybridOperator, target_phases: &[f64], n_max: usize, reference: Qubit) -> f64 {
    assert!(target_phases.len() > n_max, "need a target phase per level");
    let columns: Vec<usize> = (0..=n_max).map(|n| basis_index(n, reference)).collect();
    let targets: Vec<C64> = target_phases[..=n_max].iter().map(|&t| cis(t)).collect();
    subspace_fidelity(actual, &columns, &targets)
}

/// Largest weight, over input levels `n ≤ n_max` with the qubit in
/// `reference`, that ends up with the qubit flipped.
pub fn qubit_leakage(actual: &HybridOperator, n_max: usize, reference: Qubit) -> f64 {
    let other = reference.flip();
    (0..=n_max.min(actual.n_trunc - 1))
        .map(|n| {
            (0..actual.n_trunc)
                .map(|m| actual.element(m, other, n, reference).norm_sqr())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Fock amplitudes `e^{−|α|²/2}α^n/√n!` for `n < n_trunc`, renormalized.
/// Returns the amplitudes and the truncated weight `1 − Σ|c_n|²`.
pub fn coherent_amplitudes(alpha: C64, n_trunc: usize) -> Result<(Vec<C64>, f64)> {
    let a = alpha.norm();
    if a * a + 6.0 * a + 10.0 > n_trunc as f64 {
        return Err(Error::TruncationTooSmall);
    }
    let mut c = Vec::with_capacity(n_trunc);
    let mut cur = C64::new((-a * a / 2.0).exp(), 0.0);
    for n in 0..n_trunc {
        if n > 0 {
            cur = cur * alpha / (n as f64).sqrt();
        }
        c.push(cur);
    }
    let weight: f64 = c.iter().map(|x| x.norm_sqr()).sum();
    let norm = weight.sqrt();
    Ok((c.iter().map(|x| x / norm).collect(), (1.0 - weight).max(0.0)))
}

/// `|α⟩ ⊗ |q⟩`.
pub fn coherent_state(alpha: C64, q: Qubit, cfg: &SimConfig) -> Result<HybridState> {
    let (c, _) = coherent_amplitudes(alpha, cfg.n_trunc)?;
    HybridState::product(&c, q, cfg.n_trunc)
}

/// `|⟨a|b⟩|²` for qumode vectors, normalizing both. Rounding above 1 is
/// clipped.
pub fn state_fidelity(a: &[C64], b: &[C64]) -> f64 {
    let len = a.len().max(b.len());
    let get = |v: &[C64], i: usize| v.get(i).copied().unwrap_or_default();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let ov: C64 = (0..len).map(|i| get(a, i).conj() * get(b, i)).sum();
    (ov.norm_sqr() / (na * nb)).min(1.0)
}

/// Qumode basis of two modes with `n_per_mode` levels each, ordered
/// `(n_A, n_B) → n_A·n_per_mode + n_B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TwoModeSpace {
    pub n_per_mode: usize,
}

impl TwoModeSpace {
    pub fn dim(&self) -> usize {
        self.n_per_mode * self.n_per_mode
    }

    pub fn index(&self, na: usize, nb: usize) -> usize {
        na * self.n_per_mode + nb
    }

    /// Total boson number `n_A + n_B` of every basis state.
    pub fn levels(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|i| i / self.n_per_mode + i % self.n_per_mode)
            .collect()
    }

    /// Mode-swap permutation on the hybrid space.
    pub fn swap(&self) -> HybridOperator {
        let dim = 2 * self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for na in 0..self.n_per_mode {
            for nb in 0..self.n_per_mode {
                for q in [Qubit::G, Qubit::E] {
                    m[(basis_index(self.index(nb, na), q), basis_index(self.index(na, nb), q))] = C64::new(1.0, 0.0);
                }
            }
        }
        HybridOperator {
            n_trunc: self.dim(),
            matrix: m,
            unitary: true,
        }
    }
}
