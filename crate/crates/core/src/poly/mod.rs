//! Complex polynomials in `z`, unit-circle evaluation, roots and
//! complementary-polynomial completion.

mod completion;
mod roots;

use serde::{Deserialize, Serialize};

use crate::{C64, TRIM_EPS};

pub use completion::{complementary_polynomial, complete_pair};
pub use roots::roots;

/// Which QSP family a polynomial pair belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QspMode {
    /// Single-axis rotations: `F` real, `G = i·(real)`.
    Oqsp,
    /// General SU(2) rotations with complex coefficients.
    Gqsp,
}

/// Polynomial `Σ_m coeffs[m]·z^m` with trimmed leading coefficients.
///
/// The zero polynomial is stored as the single coefficient `[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<[f64; 2]>", from = "Vec<[f64; 2]>")]
pub struct ComplexPolynomial {
    coeffs: Vec<C64>,
}

impl ComplexPolynomial {
    /// Builds a polynomial, trimming leading coefficients whose modulus is at
    /// most `TRIM_EPS` times the largest coefficient.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return Self::zero();
        }
        while coeffs.len() > 1 && coeffs.last().unwrap().norm() <= TRIM_EPS * max {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self {
            coeffs: vec![C64::new(0.0, 0.0)],
        }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(vec![c])
    }

    /// `c·z^m`.
    pub fn monomial(c: C64, m: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); m + 1];
        coeffs[m] = c;
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Coefficient of `z^m`, zero beyond the degree.
    pub fn coeff(&self, m: usize) -> C64 {
        self.coeffs.get(m).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == C64::new(0.0, 0.0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Horner evaluation at an arbitrary complex point.
    pub fn eval(&self, z: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first two derivatives at `z`.
    pub fn eval_with_derivatives(&self, z: C64) -> (C64, C64, C64) {
        let zero = C64::new(0.0, 0.0);
        let (mut p, mut d1, mut d2) = (zero, zero, zero);
        for &c in self.coeffs.iter().rev() {
            d2 = d2 * z + d1 * 2.0;
            d1 = d1 * z + p;
            p = p * z + c;
        }
        (p, d1, d2)
    }

    /// `P(e^{iφ})`.
    pub fn eval_on_circle(&self, phi: f64) -> C64 {
        if self.coeffs.len() == 1 {
            return self.coeffs[0];
        }
        self.eval(C64::from_polar(1.0, phi))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::new(self.coeffs.iter().map(|&a| a * c).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|m| self.coeff(m) + other.coeff(m)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|m| self.coeff(m) - other.coeff(m)).collect())
    }

    /// `P(z·e^{iα})`: coefficient `m` picks up `e^{imα}`.
    pub fn rotate(&self, alpha: f64) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(m, &c)| c * C64::from_polar(1.0, alpha * m as f64))
                .collect(),
        )
    }

    /// `P(z^r)`.
    pub fn substitute_power(&self, r: usize) -> Self {
        assert!(r >= 1, "power must be positive");
        let mut coeffs = vec![C64::new(0.0, 0.0); self.degree() * r + 1];
        for (m, &c) in self.coeffs.iter().enumerate() {
            coeffs[m * r] = c;
        }
        Self::new(coeffs)
    }

    /// If only powers divisible by `r` are present (relative tolerance
    /// `tol`), returns `P̃` with `P(z) = P̃(z^r)`.
    pub fn decimate(&self, r: usize, tol: f64) -> Option<Self> {
        let max = self.max_abs_coeff();
        let clean = self
            .coeffs
            .iter()
            .enumerate()
            .all(|(m, c)| m % r == 0 || c.norm() <= tol * max);
        clean.then(|| Self::new(self.coeffs.iter().step_by(r).copied().collect()))
    }

    /// Largest `|P|` over `samples` uniform points of the unit circle.
    pub fn sup_on_circle(&self, samples: usize) -> f64 {
        circle_grid(samples)
            .map(|phi| self.eval_on_circle(phi).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|Im c_m|` over all coefficients.
    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// Largest `|Re c_m|` over all coefficients.
    pub fn max_real(&self) -> f64 {
        self.coeffs.iter().map(|c| c.re.abs()).fold(0.0, f64::max)
    }
}

impl From<ComplexPolynomial> for Vec<[f64; 2]> {
    fn from(p: ComplexPolynomial) -> Self {
        p.coeffs.iter().map(|c| [c.re, c.im]).collect()
    }
}

impl From<Vec<[f64; 2]>> for ComplexPolynomial {
    fn from(v: Vec<[f64; 2]>) -> Self {
        if v.is_empty() {
            return Self::zero();
        }
        Self::new(v.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// `P(e^{iφ})` as a free function.
pub fn eval_on_circle(poly: &ComplexPolynomial, phi: f64) -> C64 {
    poly.eval_on_circle(phi)
}

/// Coefficient convolution.
pub fn multiply(a: &ComplexPolynomial, b: &ComplexPolynomial) -> ComplexPolynomial {
    if a.is_zero() || b.is_zero() {
        return ComplexPolynomial::zero();
    }
    let mut out = vec![C64::new(0.0, 0.0); a.coeffs.len() + b.coeffs.len() - 1];
    for (i, &x) in a.coeffs.iter().enumerate() {
        for (j, &y) in b.coeffs.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    ComplexPolynomial::new(out)
}

/// Uniform angles `2πj/samples`, `j = 0..samples`.
pub fn circle_grid(samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |j| 2.0 * std::f64::consts::PI * j as f64 / samples as f64)
}

/// A polynomial and its complement, with the measured normalization defect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialPair {
    pub p: ComplexPolynomial,
    pub q: ComplexPolynomial,
    pub defect: f64,
    /// Number of QSP rounds the pair is realized with; at least the larger
    /// of the two degrees. Leading coefficients beyond a polynomial's degree
    /// are zero.
    pub rounds: usize,
}

impl PolynomialPair {
    /// Pairs `p` and `q`, measuring the defect on a grid fine enough for
    /// both degrees.
    pub fn new(p: ComplexPolynomial, q: ComplexPolynomial) -> Self {
        let rounds = p.degree().max(q.degree());
        let mut pair = Self {
            p,
            q,
            defect: 0.0,
            rounds,
        };
        pair.defect = normalization_defect(&pair, default_samples(rounds));
        pair
    }

    /// Same pair realized with `rounds` rounds (must not be below either
    /// degree).
    pub fn with_rounds(mut self, rounds: usize) -> Self {
        assert!(
            rounds >= self.p.degree() && rounds >= self.q.degree(),
            "rounds below polynomial degree"
        );
        self.rounds = rounds;
        self
    }
}

/// Grid size used for sup-norm checks: the default grid, enlarged for very
/// high degrees.
pub fn default_samples(degree: usize) -> usize {
    crate::GRID_SAMPLES.max(8 * (degree + 1))
}

/// `max_j | |P(e^{iφ_j})|² + |Q(e^{iφ_j})|² − 1 |` on a uniform grid.
pub fn normalization_defect(pair: &PolynomialPair, samples: usize) -> f64 {
    circle_grid(samples)
        .map(|phi| {
            let p = pair.p.eval_on_circle(phi);
            let q = pair.q.eval_on_circle(phi);
            (p.norm_sqr() + q.norm_sqr() - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_evaluates_to_itself() {
        let p = ComplexPolynomial::constant(c(1.0, 0.0));
        assert_eq!(p.eval_on_circle(1.234), c(1.0, 0.0));
    }

    #[test]
    fn z_at_pi_is_minus_one() {
        let p = ComplexPolynomial::from_real(&[0.0, 1.0]);
        assert!((p.eval_on_circle(PI) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eparity_value_at_one() {
        let t = PI / 3.0;
        let p = ComplexPolynomial::new(vec![
            c(t.cos() / 2.0, 0.0),
            c(0.0, t.sin()),
            c(t.cos() / 2.0, 0.0),
        ]);
        assert!((p.eval_on_circle(0.0) - C64::from_polar(1.0, t)).norm() < 1e-15);
    }

    #[test]
    fn multiply_examples() {
        let zp1 = ComplexPolynomial::from_real(&[1.0, 1.0]);
        let zm1 = ComplexPolynomial::from_real(&[-1.0, 1.0]);
        assert_eq!(multiply(&zp1, &zp1), ComplexPolynomial::from_real(&[1.0, 2.0, 1.0]));
        assert_eq!(multiply(&zm1, &zp1), ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]));
        let sq = multiply(&zp1, &zp1);
        assert_eq!(
            multiply(&sq, &sq),
            ComplexPolynomial::from_real(&[1.0, 4.0, 6.0, 4.0, 1.0])
        );
    }

    #[test]
    fn trimming_and_zero() {
        let p = ComplexPolynomial::from_real(&[1.0, 2.0, 1e-15]);
        assert_eq!(p.degree(), 1);
        let z = ComplexPolynomial::from_real(&[0.0, 0.0]);
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
        assert!(multiply(&z, &p).is_zero());
    }

    #[test]
    fn derivatives_match_closed_form() {
        // z^3 - 2z + 1 at z = 0.3 + 0.2i
        let p = ComplexPolynomial::from_real(&[1.0, -2.0, 0.0, 1.0]);
        let z = c(0.3, 0.2);
        let (v, d1, d2) = p.eval_with_derivatives(z);
        assert!((v - (z * z * z - z * 2.0 + 1.0)).norm() < 1e-15);
        assert!((d1 - (z * z * 3.0 - 2.0)).norm() < 1e-15);
        assert!((d2 - z * 6.0).norm() < 1e-15);
    }

    #[test]
    fn decimate_and_substitute_are_inverse() {
        let p = ComplexPolynomial::new(vec![c(1.0, 0.5), c(0.0, 0.0), c(-0.3, 0.0), c(0.0, 0.0), c(0.2, 0.1)]);
        let w = p.decimate(2, 1e-14).unwrap();
        assert_eq!(w.degree(), 2);
        assert_eq!(w.substitute_power(2), p);
        assert!(ComplexPolynomial::from_real(&[1.0, 1.0]).decimate(2, 1e-14).is_none());
    }

    #[test]
    fn defect_examples() {
        let one = PolynomialPair::new(ComplexPolynomial::constant(c(1.0, 0.0)), ComplexPolynomial::zero());
        assert_eq!(normalization_defect(&one, 16), 0.0);
        for &a in &[0.1, 0.7, 2.3] {
            let pair = PolynomialPair::new(
                ComplexPolynomial::monomial(c(f64::cos(a), 0.0), 1),
                ComplexPolynomial::constant(c(0.0, f64::sin(a))),
            );
            assert!(normalization_defect(&pair, 64) < 1e-15);
        }
    }

    #[test]
    fn eparity_closed_form_pair_defect() {
        let t = PI / 3.0;
        let p = ComplexPolynomial::new(vec![c(t.cos() / 2.0, 0.0), c(0.0, t.sin()), c(t.cos() / 2.0, 0.0)]);
        let q = ComplexPolynomial::from_real(&[t.cos() / 2.0, 0.0, -t.cos() / 2.0]);
        let pair = PolynomialPair::new(p, q);
        assert!(normalization_defect(&pair, 4096) <= 1e-14);
    }

    #[test]
    fn json_is_array_of_pairs() {
        let p = ComplexPolynomial::new(vec![c(1.0, -2.0), c(0.5, 0.0)]);
        let s = serde_json_like(&p);
        assert_eq!(s, vec![[1.0, -2.0], [0.5, 0.0]]);
    }

    fn serde_json_like(p: &ComplexPolynomial) -> Vec<[f64; 2]> {
        p.clone().into()
    }
}
