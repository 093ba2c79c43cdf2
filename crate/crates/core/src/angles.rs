//! Rotation-angle schedules and their 2×2 reconstruction.
//!
//! A schedule of `M` rounds is the product `R_M·Z·R_{M−1}·…·Z·R_0` with the
//! phase shift `Z = diag(e^{iΦ}, 1)`. In GQSP mode
//! `R(θ,φ,λ) = [[e^{i(λ+φ)}cos θ, e^{iφ}sin θ], [e^{iλ}sin θ, −cos θ]]`; in
//! oQSP mode `R(θ) = e^{iθσ_x}`, the rotation generated by a qubit detuning in
//! the JC dressed frame.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::poly::{PolynomialPair, QspMode};
use crate::{Error, Result, C64};

/// Largest tolerated leftover coefficient when peeling one round.
const STALL_TOL: f64 = 1e-10;
/// Constant terms below this modulus carry no phase information.
const ZERO_TOL: f64 = 1e-12;

/// Compiled QSP schedule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "AngleSetJson", try_from = "AngleSetJson")]
pub struct AngleSet {
    pub convention: QspMode,
    pub rounds: usize,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub lambdas: Vec<f64>,
    /// Phase `Φ` applied by each phase shift.
    pub phase_step: f64,
}

impl AngleSet {
    pub fn new(
        convention: QspMode,
        thetas: Vec<f64>,
        phis: Vec<f64>,
        lambdas: Vec<f64>,
        phase_step: f64,
    ) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != phis.len() || thetas.len() != lambdas.len() {
            return Err(Error::InvalidArgument("angle lists must have equal, nonzero length".into()));
        }
        if convention == QspMode::Oqsp && (phis.iter().chain(&lambdas).any(|&a| a != 0.0)) {
            return Err(Error::InvalidArgument("oqsp schedules carry theta angles only".into()));
        }
        let all = thetas.iter().chain(&phis).chain(&lambdas);
        if !phase_step.is_finite() || all.clone().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(Self {
            convention,
            rounds: thetas.len() - 1,
            thetas,
            phis,
            lambdas,
            phase_step,
        })
    }

    /// oQSP schedule from rotation angles alone.
    pub fn oqsp(thetas: Vec<f64>, phase_step: f64) -> Result<Self> {
        let zeros = vec![0.0; thetas.len()];
        Self::new(QspMode::Oqsp, thetas, zeros.clone(), zeros, phase_step)
    }

    /// A lone GQSP rotation (zero rounds).
    pub fn single_rotation(theta: f64, phi: f64, lambda: f64) -> Self {
        Self {
            convention: QspMode::Gqsp,
            rounds: 0,
            thetas: vec![theta],
            phis: vec![phi],
            lambdas: vec![lambda],
            phase_step: 0.0,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct AngleTriple {
    theta: f64,
    phi: f64,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct AngleSetJson {
    convention: QspMode,
    phase_step_rad: f64,
    rounds: usize,
    angles: Vec<AngleTriple>,
}

impl From<AngleSet> for AngleSetJson {
    fn from(a: AngleSet) -> Self {
        let angles = (0..=a.rounds)
            .map(|m| AngleTriple {
                theta: a.thetas[m],
                phi: a.phis[m],
                lambda: a.lambdas[m],
            })
            .collect();
        Self {
            convention: a.convention,
            phase_step_rad: a.phase_step,
            rounds: a.rounds,
            angles,
        }
    }
}

impl TryFrom<AngleSetJson> for AngleSet {
    type Error = Error;

    fn try_from(j: AngleSetJson) -> Result<Self> {
        if j.angles.len() != j.rounds + 1 {
            return Err(Error::InvalidArgument("rounds must equal len(angles) - 1".into()));
        }
        AngleSet::new(
            j.convention,
            j.angles.iter().map(|a| a.theta).collect(),
            j.angles.iter().map(|a| a.phi).collect(),
            j.angles.iter().map(|a| a.lambda).collect(),
            j.phase_step_rad,
        )
    }
}

fn cis(a: f64) -> C64 {
    C64::from_polar(1.0, a)
}

/// GQSP rotation `R(θ, φ, λ)`.
pub fn gqsp_rotation(theta: f64, phi: f64, lambda: f64) -> Matrix2<C64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(
        cis(lambda + phi) * c,
        cis(phi) * s,
        cis(lambda) * s,
        C64::new(-c, 0.0),
    )
}

/// oQSP rotation `e^{iθσ_x}`.
pub fn oqsp_rotation(theta: f64) -> Matrix2<C64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(C64::new(c, 0.0), C64::new(0.0, s), C64::new(0.0, s), C64::new(c, 0.0))
}

fn rotation(a: &AngleSet, m: usize) -> Matrix2<C64> {
    match a.convention {
        QspMode::Gqsp => gqsp_rotation(a.thetas[m], a.phis[m], a.lambdas[m]),
        QspMode::Oqsp => oqsp_rotation(a.thetas[m]),
    }
}

/// `R_M·Z_φ·…·Z_φ·R_0` with `Z_φ = diag(e^{iφ}, 1)`.
pub fn reconstruct_sequence(angles: &AngleSet, phi: f64) -> Matrix2<C64> {
    let z = Matrix2::new(cis(phi), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0));
    let mut u = rotation(angles, 0);
    for m in 1..=angles.rounds {
        u = rotation(angles, m) * z * u;
    }
    u
}

/// Same product with the symmetric phase shift `diag(e^{iφ/2}, e^{−iφ/2})`
/// that a JC round applies to a dressed pair.
pub fn reconstruct_dressed(angles: &AngleSet, phi: f64) -> Matrix2<C64> {
    reconstruct_sequence(angles, phi) * cis(-(angles.rounds as f64) * phi / 2.0)
}

/// oQSP schedule whose dressed-frame action inverts that of `angles`, using
/// only forward rotations and forward JC evolution.
pub fn oqsp_inverse(angles: &AngleSet) -> AngleSet {
    let m = angles.rounds;
    let thetas = if m == 0 {
        vec![-angles.thetas[0]]
    } else {
        (0..=m)
            .map(|j| {
                if j == 0 {
                    1.5 * PI - angles.thetas[m]
                } else if j == m {
                    0.5 * PI - angles.thetas[0]
                } else {
                    -angles.thetas[m - j]
                }
            })
            .collect()
    };
    AngleSet::oqsp(thetas, angles.phase_step).expect("finite angles")
}

fn padded(p: &crate::poly::ComplexPolynomial, len: usize) -> Vec<C64> {
    (0..len).map(|m| p.coeff(m)).collect()
}

/// GQSP angles for a complementary pair, one rotation per round plus `R_0`.
/// `λ_m = 0` for `m ≥ 1`.
pub fn gqsp_angles(pair: &PolynomialPair, phase_step: f64) -> Result<AngleSet> {
    let big_m = pair.rounds;
    let mut p = padded(&pair.p, big_m + 1);
    let mut q = padded(&pair.q, big_m + 1);
    let mut thetas = vec![0.0; big_m + 1];
    let mut phis = vec![0.0; big_m + 1];
    let mut lambdas = vec![0.0; big_m + 1];
    for d in (1..=big_m).rev() {
        let lead = (p[d].norm_sqr() + q[d].norm_sqr()).sqrt();
        let tail = (p[0].norm_sqr() + q[0].norm_sqr()).sqrt();
        let mut options = vec![(0.0, 0.0)];
        if lead > 0.0 {
            options.push((q[d].norm().atan2(p[d].norm()), p[d].arg() - q[d].arg()));
        }
        if tail > 0.0 {
            options.push((p[0].norm().atan2(q[0].norm()), p[0].arg() - q[0].arg() + PI));
        }
        let peel = |theta: f64, phi: f64| {
            let (s, c) = theta.sin_cos();
            let e = cis(-phi);
            let top: Vec<C64> = (0..=d).map(|j| e * c * p[j] + s * q[j]).collect();
            let bottom: Vec<C64> = (0..=d).map(|j| e * s * p[j] - c * q[j]).collect();
            let residual = top[0].norm().max(bottom[d].norm());
            (residual, theta, phi, top, bottom)
        };
        let (residual, theta, phi, top, bottom) = options
            .into_iter()
            .map(|(t, f)| peel(t, f))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one option");
        if residual > STALL_TOL {
            return Err(Error::AngleExtraction { round: d });
        }
        thetas[d] = theta;
        phis[d] = phi;
        p = top[1..=d].to_vec();
        q = bottom[..d].to_vec();
    }
    let (p0, q0) = (p[0], q[0]);
    thetas[0] = q0.norm().atan2(p0.norm());
    if q0.norm() > ZERO_TOL {
        lambdas[0] = q0.arg();
        phis[0] = if p0.norm() > ZERO_TOL { p0.arg() - q0.arg() } else { 0.0 };
    } else {
        lambdas[0] = p0.arg();
    }
    AngleSet::new(QspMode::Gqsp, thetas, phis, lambdas, phase_step)
}

/// oQSP angles for `F` real and `G = i·(real)`.
pub fn oqsp_angles(pair: &PolynomialPair, phase_step: f64) -> Result<AngleSet> {
    let scale = pair.p.max_abs_coeff().max(pair.q.max_abs_coeff()).max(1.0);
    if pair.p.max_imag() > crate::EPS_REAL * scale || pair.q.max_real() > crate::EPS_REAL * scale {
        return Err(Error::InvalidArgument("oqsp pair must have F real and G imaginary".into()));
    }
    let big_m = pair.rounds;
    let mut f: Vec<f64> = (0..=big_m).map(|m| pair.p.coeff(m).re).collect();
    let mut g: Vec<f64> = (0..=big_m).map(|m| pair.q.coeff(m).im).collect();
    let mut thetas = vec![0.0; big_m + 1];
    for d in (1..=big_m).rev() {
        // Candidates: each boundary condition alone, and the joint
        // least-squares angle for both.
        let a11 = f[0] * f[0] + g[d] * g[d];
        let a22 = g[0] * g[0] + f[d] * f[d];
        let a12 = f[0] * g[0] - g[d] * f[d];
        let joint = 0.5 * (2.0 * a12).atan2(a11 - a22) + 0.5 * PI;
        let options = [0.0, g[d].atan2(f[d]), (-f[0]).atan2(g[0]), joint];
        let peel = |theta: f64| {
            let (s, c) = theta.sin_cos();
            let top: Vec<f64> = (0..=d).map(|j| c * f[j] + s * g[j]).collect();
            let bottom: Vec<f64> = (0..=d).map(|j| c * g[j] - s * f[j]).collect();
            (top[0].abs().max(bottom[d].abs()), theta, top, bottom)
        };
        let (residual, theta, top, bottom) = options
            .into_iter()
            .map(peel)
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .expect("at least one option");
        if residual > STALL_TOL {
            return Err(Error::AngleExtraction { round: d });
        }
        thetas[d] = theta;
        f = top[1..=d].to_vec();
        g = bottom[..d].to_vec();
    }
    thetas[0] = g[0].atan2(f[0]);
    AngleSet::oqsp(thetas, phase_step)
}

/// Dispatches on `mode`.
pub fn find_angles(pair: &PolynomialPair, mode: QspMode, phase_step: f64) -> Result<AngleSet> {
    match mode {
        QspMode::Gqsp => gqsp_angles(pair, phase_step),
        QspMode::Oqsp => oqsp_angles(pair, phase_step),
    }
}
