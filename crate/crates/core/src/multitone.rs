//! Time-domain multi-tone SNAP baseline.
//!
//! Two-stage geometric-phase scheme: every target level gets its own tone
//! with Rabi rate `Ω`. Stage 1 (phases `ϑ = 0`) is a π pulse out of the
//! reference state, stage 2 (phases `ϑ_n = π + Θ_n`) a π pulse back, which
//! leaves `e^{iΘ_n}` on level `n`. Each stage lasts `π/Ω`, so the gate takes
//! `2π/Ω`. All tones act on all levels; the off-resonant terms are kept and
//! are what limits the fidelity.
//!
//! The Hamiltonian is frozen over each step and exponentiated exactly. It is
//! block diagonal with 2×2 blocks, so the propagation is done per block.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::gates::Backend;
use crate::sim::{basis_index, gate_fidelity, qubit_leakage, HybridOperator, Qubit, SimConfig};
use crate::{Error, Result, C64};

/// Steps per fastest period required by the step bound.
const STEPS_PER_RATE: f64 = 200.0;

/// Baseline parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiToneConfig {
    pub backend: Backend,
    /// Rabi rate `Ω` of each tone.
    pub rabi: f64,
    pub n_max: usize,
    /// Per-tone drive phases of the two stages.
    pub stage_phases: [Vec<f64>; 2],
    /// Largest allowed step.
    pub dt: f64,
}

impl MultiToneConfig {
    /// Stage phases `0` and `π + Θ_n`.
    pub fn snap(backend: Backend, theta: &[f64], rabi: f64, dt: f64) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidArgument("need at least one target phase".into()));
        }
        Ok(Self {
            backend,
            rabi,
            n_max: theta.len() - 1,
            stage_phases: [vec![0.0; theta.len()], theta.iter().map(|t| PI + t).collect()],
            dt,
        })
    }
}

/// Largest step allowed for `backend` at rate `rabi`.
pub fn step_limit(backend: Backend, n_max: usize, rabi: f64, cfg: &SimConfig) -> f64 {
    let fastest = match backend {
        Backend::Dispersive => cfg.chi * n_max as f64,
        Backend::Jc => 2.0 * cfg.lam * ((n_max + 1) as f64).sqrt(),
    };
    1.0 / (STEPS_PER_RATE * fastest.max(rabi))
}

/// Propagator of one baseline gate and its figures of merit.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiToneRun {
    pub operator: HybridOperator,
    pub gate_time: f64,
    pub infidelity: f64,
    pub leakage: f64,
}

/// `exp(−iH·dt)` for `H = [[0, h̄], [h, 0]]` in the (lower, upper) order.
fn flip_step(h: C64, dt: f64) -> Matrix2<C64> {
    let r = h.norm();
    let (s, c) = (r * dt).sin_cos();
    let k = if r > 0.0 { s / r } else { dt };
    let mi = C64::new(0.0, -1.0);
    Matrix2::new(C64::new(c, 0.0), mi * k * h.conj(), mi * k * h, C64::new(c, 0.0))
}

/// Integrates the two stages for every block. `coupling(block, t, phases)`
/// returns the upper-from-lower matrix element `h(t)`.
fn integrate<F>(blocks: usize, cfg: &MultiToneConfig, coupling: F) -> Vec<Matrix2<C64>>
where
    F: Fn(usize, f64, &[C64]) -> C64,
{
    let stage = PI / cfg.rabi;
    let steps = (stage / cfg.dt).ceil().max(1.0) as usize;
    let dt = stage / steps as f64;
    let mut u = vec![Matrix2::<C64>::identity(); blocks];
    for (j, phases) in cfg.stage_phases.iter().enumerate() {
        let tones: Vec<C64> = phases.iter().map(|&p| C64::from_polar(1.0, -p)).collect();
        for i in 0..steps {
            let t = j as f64 * stage + (i as f64 + 0.5) * dt;
            for (b, ub) in u.iter_mut().enumerate() {
                *ub = flip_step(coupling(b, t, &tones), dt) * *ub;
            }
        }
    }
    u
}

fn check_inputs(theta: &[f64], rabi: f64, backend: Backend, cfg: &SimConfig) -> Result<MultiToneConfig> {
    if !(rabi > 0.0 && rabi.is_finite()) {
        return Err(Error::InvalidArgument("rabi rate must be positive".into()));
    }
    let mt = MultiToneConfig::snap(backend, theta, rabi, cfg.dt)?;
    cfg.validate(mt.n_max)?;
    let limit = step_limit(backend, mt.n_max, rabi, cfg);
    if cfg.dt > limit {
        return Err(Error::StepTooLarge { dt: cfg.dt, limit });
    }
    Ok(mt)
}

/// Dispersive baseline in the interaction frame of `−χa†a|g⟩⟨g|`:
/// `⟨n,e|H|n,g⟩ = Σ_m (Ω/2)·e^{i((n−m)χt − ϑ_m)}`.
pub fn dispersive_multitone_snap(theta: &[f64], rabi: f64, cfg: &SimConfig) -> Result<MultiToneRun> {
    let mt = check_inputs(theta, rabi, Backend::Dispersive, cfg)?;
    let half = rabi / 2.0;
    let chi = cfg.chi;
    let blocks = integrate(cfg.n_trunc, &mt, |n, t, tones| {
        tones
            .iter()
            .enumerate()
            .map(|(m, &w)| w * C64::from_polar(half, (n as f64 - m as f64) * chi * t))
            .sum()
    });
    let dim = 2 * cfg.n_trunc;
    let mut m = DMatrix::zeros(dim, dim);
    for (n, b) in blocks.iter().enumerate() {
        let (g, e) = (basis_index(n, Qubit::G), basis_index(n, Qubit::E));
        m[(g, g)] = b[(0, 0)];
        m[(g, e)] = b[(0, 1)];
        m[(e, g)] = b[(1, 0)];
        m[(e, e)] = b[(1, 1)];
    }
    let operator = HybridOperator {
        n_trunc: cfg.n_trunc,
        matrix: m,
        unitary: true,
    };
    let infidelity = (1.0 - gate_fidelity(&operator, theta, mt.n_max, Qubit::G)).max(0.0);
    let leakage = qubit_leakage(&operator, mt.n_max, Qubit::G);
    Ok(MultiToneRun {
        operator,
        gate_time: 2.0 * PI / rabi,
        infidelity,
        leakage,
    })
}

/// JC baseline on the dressed pairs. The drive modulates the detuning,
/// `Δ(t)σ_z` with `Δ(t) = Σ_m Ω cos(ω_m t + ϑ_m)` and `ω_m = λ√(m+1)`, which
/// couples `|↓_n⟩ ↔ |↑_n⟩`. In the interaction frame of the JC coupling
/// `⟨↑_n|H|↓_n⟩ = Δ(t)e^{iω_n t}`, counter-rotating parts included. The
/// target is `|↓_n⟩ → e^{iΘ_n}|↓_n⟩`; fidelity and leakage are taken on the
/// dressed states.
pub fn jc_multitone_snap(theta: &[f64], rabi: f64, cfg: &SimConfig) -> Result<MultiToneRun> {
    let mt = check_inputs(theta, rabi, Backend::Jc, cfg)?;
    let lam = cfg.lam;
    let pairs = cfg.n_trunc - 1;
    let freq = |n: usize| lam * ((n + 1) as f64).sqrt();
    let blocks = integrate(pairs, &mt, |n, t, tones| {
        // tones[m] = e^{−iϑ_m}; cos(ωt + ϑ) = Re(e^{iωt}·conj(tone)).
        let delta: f64 = tones
            .iter()
            .enumerate()
            .map(|(m, &w)| rabi * (C64::from_polar(1.0, freq(m) * t) * w.conj()).re)
            .sum();
        C64::from_polar(delta, freq(n) * t)
    });
    // Back to the bare basis: columns of B are (|↓_n⟩, |↑_n⟩) in (|n+1,g⟩, |n,e⟩).
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let basis = Matrix2::new(C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0), C64::new(h, 0.0));
    let dim = 2 * cfg.n_trunc;
    let mut m = DMatrix::<C64>::identity(dim, dim);
    for (n, b) in blocks.iter().enumerate() {
        let bare = basis * b * basis.adjoint();
        let idx = [basis_index(n + 1, Qubit::G), basis_index(n, Qubit::E)];
        for i in 0..2 {
            for j in 0..2 {
                m[(idx[i], idx[j])] = bare[(i, j)];
            }
        }
    }
    let operator = HybridOperator {
        n_trunc: cfg.n_trunc,
        matrix: m,
        unitary: true,
    };
    let tr: C64 = (0..=mt.n_max)
        .map(|n| C64::from_polar(1.0, -theta[n]) * blocks[n][(0, 0)])
        .sum();
    let d = (mt.n_max + 1) as f64;
    let leakage = (0..=mt.n_max).map(|n| blocks[n][(1, 0)].norm_sqr()).fold(0.0, f64::max);
    Ok(MultiToneRun {
        operator,
        gate_time: 2.0 * PI / rabi,
        infidelity: (1.0 - tr.norm_sqr() / (d * d)).max(0.0),
        leakage,
    })
}

/// Baseline at a prescribed gate time, `Ω = 2π/T`.
pub fn multitone_at_time(backend: Backend, theta: &[f64], gate_time: f64, cfg: &SimConfig) -> Result<MultiToneRun> {
    let rabi = 2.0 * PI / gate_time;
    match backend {
        Backend::Dispersive => dispersive_multitone_snap(theta, rabi, cfg),
        Backend::Jc => jc_multitone_snap(theta, rabi, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flip_step_is_unitary() {
        let u = flip_step(C64::new(0.3, -0.7), 0.9);
        let e = u.adjoint() * u - Matrix2::identity();
        assert!(e.iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn rejects_coarse_step() {
        let mut cfg = SimConfig::new(6);
        cfg.dt = 0.1;
        let r = dispersive_multitone_snap(&[0.0; 5], 0.5, &cfg);
        assert!(matches!(r, Err(Error::StepTooLarge { .. })));
    }

    #[test]
    fn weak_drive_is_accurate() {
        let mut cfg = SimConfig::new(3);
        cfg.dt = 5e-3;
        let run = dispersive_multitone_snap(&[0.0, 0.0], 0.01, &cfg).unwrap();
        assert!(run.infidelity <= 1e-3, "{}", run.infidelity);
        assert!(run.operator.unitarity_error() < 1e-8);
    }

    #[test]
    fn jc_zero_phases_have_crosstalk() {
        let cfg = SimConfig::new(5);
        let run = jc_multitone_snap(&[0.0; 4], 0.2, &cfg).unwrap();
        assert!(run.infidelity > 1e-10);
        assert!(run.operator.unitarity_error() < 1e-8);
    }
}
