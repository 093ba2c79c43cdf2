//! Fejér–Riesz completion: given `P` with `|P| ≤ 1` on the unit circle,
//! find `Q` with `|P|² + |Q|² = 1` there.

use nalgebra::{DMatrix, DVector};

use super::roots::roots_of_coeffs;
use super::{circle_grid, default_samples, multiply, roots, ComplexPolynomial, PolynomialPair, QspMode};
use crate::{Error, Result, C64, EPS_NORM, EPS_REAL};

/// Maximum log-distance between a root and the mirror image of its partner.
const PAIR_TOL: f64 = 1e-3;
/// Radial window inside which a pair is tested as an on-circle double root.
const CIRCLE_TOL: f64 = 1e-6;
/// Log-radius band treated as "near the circle" before pairing.
const NEAR_BAND: f64 = 1e-3;

/// Completes `p` to a unit-normalized pair.
///
/// In `Gqsp` mode the leading coefficient of `Q` is real and positive. In
/// `Oqsp` mode `p` must have real coefficients and the result has the form
/// `i·(real coefficients)` with a positive leading real part.
pub fn complementary_polynomial(p: &ComplexPolynomial, mode: QspMode) -> Result<ComplexPolynomial> {
    let scale = p.max_abs_coeff().max(1.0);
    if mode == QspMode::Oqsp && p.max_imag() > EPS_REAL * scale {
        return Err(Error::InvalidArgument(
            "oqsp completion requires real coefficients".into(),
        ));
    }
    let samples = default_samples(p.degree());
    let sup = p.sup_on_circle(samples);
    if sup > 1.0 + EPS_NORM {
        return Err(Error::NotCompletable { sup });
    }

    let r = exponent_gcd(p);
    let q = if r >= 2 {
        let reduced = p.decimate(r, 1e-14).expect("gcd exponent divides all powers");
        factor(&reduced, mode)?.substitute_power(r)
    } else {
        factor(p, mode)?
    };

    let pair = PolynomialPair::new(p.clone(), q);
    if pair.defect > EPS_NORM {
        let root = roots(&pair.q).ok().and_then(|v| v.first().copied()).unwrap_or_default();
        return Err(Error::FactorizationUnstable { root });
    }
    Ok(pair.q)
}

/// Completes `p` and returns the pair with its measured defect.
pub fn complete_pair(p: &ComplexPolynomial, mode: QspMode) -> Result<PolynomialPair> {
    let q = complementary_polynomial(p, mode)?;
    Ok(PolynomialPair::new(p.clone(), q))
}

/// Greatest common divisor of the exponents carrying non-negligible
/// coefficients (0 exponents ignored).
fn exponent_gcd(p: &ComplexPolynomial) -> usize {
    let max = p.max_abs_coeff();
    let mut g = 0usize;
    for (m, c) in p.coeffs().iter().enumerate().skip(1) {
        if c.norm() > 1e-14 * max {
            g = gcd(g, m);
        }
    }
    g.max(1)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

fn factor(p: &ComplexPolynomial, mode: QspMode) -> Result<ComplexPolynomial> {
    let m = p.degree();
    let pc = p.coeffs();
    // Laurent coefficients of 1 − P(z)·conj(P)(1/z), index j + m.
    let mut l = vec![C64::new(0.0, 0.0); 2 * m + 1];
    for j in -(m as isize)..=(m as isize) {
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..=m as isize {
            let i = k + j;
            if i >= 0 && i <= m as isize {
                acc += pc[i as usize] * pc[k as usize].conj();
            }
        }
        l[(j + m as isize) as usize] = -acc;
    }
    l[m] += 1.0;
    let lmax = l.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if lmax < 1e-13 {
        return Ok(ComplexPolynomial::zero());
    }
    let mut n = m;
    while n > 0 && l[m + n].norm() <= 1e-30 * lmax && l[m - n].norm() <= 1e-30 * lmax {
        n -= 1;
    }
    let q = if n == 0 {
        ComplexPolynomial::constant(C64::new(l[m].re.max(0.0).sqrt(), 0.0))
    } else {
        let chosen = select_roots(&l[m - n..=m + n])?;
        let monic = chosen.iter().fold(ComplexPolynomial::constant(C64::new(1.0, 0.0)), |acc, &r| {
            multiply(&acc, &ComplexPolynomial::new(vec![-r, C64::new(1.0, 0.0)]))
        });
        let scale = fit_scale(p, &monic);
        let q0 = monic.scale(C64::new(scale, 0.0));
        let refined = refine_factor(q0.coeffs(), &l[m..=m + n]);
        let lead = refined[refined.len() - 1];
        let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { C64::new(1.0, 0.0) };
        ComplexPolynomial::new(refined.iter().map(|c| c * phase).collect())
    };
    Ok(match mode {
        QspMode::Gqsp => q,
        QspMode::Oqsp => {
            let lead = q.coeff(q.degree());
            let sign = if lead.re < 0.0 { -1.0 } else { 1.0 };
            ComplexPolynomial::new(q.coeffs().iter().map(|c| C64::new(0.0, sign * c.re)).collect())
        }
    })
}

/// Picks one root of each conjugate-reciprocal pair of the palindromic
/// polynomial `lt` (degree 2n): the inner root for off-circle pairs, the
/// circle point for double roots on the circle.
///
/// Only roots inside or near the circle are used; the outer mirror images
/// can be far less accurate when the extreme coefficients are tiny.
fn select_roots(lt: &[C64]) -> Result<Vec<C64>> {
    let rs = roots_of_coeffs(lt)?;
    let half = rs.len() / 2;
    let coeff_sum: f64 = lt.iter().map(|c| c.norm()).sum();
    let mut inner = Vec::with_capacity(half);
    let mut near = Vec::new();
    for &r in &rs {
        let lr = r.norm().ln();
        if lr.abs() <= NEAR_BAND {
            near.push(r);
        } else if lr < 0.0 {
            inner.push(r);
        }
    }
    let mut chosen: Vec<C64> = inner.iter().map(|&r| polish_simple(lt, r)).collect();
    let pairs = pair_up(&near)?;
    for (a, b) in pairs {
        let x = (a + 1.0 / b.conj()) * 0.5;
        if let Some(c) = polish_double(lt, x, coeff_sum) {
            chosen.push(c);
        } else {
            let inside = if x.norm() < 1.0 { x } else { 1.0 / x.conj() };
            chosen.push(polish_simple(lt, inside));
        }
    }
    if chosen.len() != half {
        let root = rs.iter().copied().min_by(|a, b| (a.norm() - 1.0).abs().total_cmp(&(b.norm() - 1.0).abs()));
        return Err(Error::FactorizationUnstable { root: root.unwrap_or_default() });
    }
    Ok(chosen)
}

/// Greedy matching of each root with the nearest mirror image `1/r̄` of
/// another, under log-distance.
fn pair_up(rs: &[C64]) -> Result<Vec<(C64, C64)>> {
    let count = rs.len();
    if count % 2 == 1 {
        return Err(Error::FactorizationUnstable { root: rs[0] });
    }
    let logs: Vec<(f64, f64)> = rs.iter().map(|r| (r.norm().ln(), r.arg())).collect();
    let mut candidates = Vec::with_capacity(count * count / 2);
    for i in 0..count {
        for j in i + 1..count {
            let dr = logs[i].0 + logs[j].0;
            let da = wrap(logs[i].1 - logs[j].1);
            candidates.push(((dr * dr + da * da).sqrt(), i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used = vec![false; count];
    let mut pairs = Vec::with_capacity(count / 2);
    for (d, i, j) in candidates {
        if pairs.len() * 2 == count {
            break;
        }
        if used[i] || used[j] {
            continue;
        }
        if d > PAIR_TOL {
            return Err(Error::FactorizationUnstable { root: rs[i] });
        }
        used[i] = true;
        used[j] = true;
        pairs.push((rs[i], rs[j]));
    }
    Ok(pairs)
}

/// Newton on `L'` for a double root; accepted when it lies on the circle and
/// `L` vanishes there to rounding.
fn polish_double(lt: &[C64], start: C64, coeff_sum: f64) -> Option<C64> {
    let mut x = start / start.norm();
    for _ in 0..60 {
        let (_, d1, d2) = horner(lt, x);
        if d2.norm() == 0.0 {
            break;
        }
        let step = d1 / d2;
        x -= step;
        if step.norm() < 1e-16 {
            break;
        }
    }
    let on_circle = (x.norm() - 1.0).abs() < CIRCLE_TOL;
    let residual = horner(lt, x).0.norm();
    (on_circle && residual <= 1e-12 * coeff_sum).then(|| x / x.norm())
}

fn polish_simple(lt: &[C64], start: C64) -> C64 {
    let mut x = start;
    for _ in 0..20 {
        let (v, d1, _) = horner(lt, x);
        if d1.norm() == 0.0 {
            break;
        }
        let step = v / d1;
        let next = x - step;
        if !(next.re.is_finite() && next.im.is_finite()) || (next - start).norm() > 1e-3 {
            break;
        }
        x = next;
        if step.norm() < 1e-16 * x.norm().max(1.0) {
            break;
        }
    }
    x
}

/// Least-squares fit of `c` in `1 − |P|² ≈ c²·|Π(z − q_i)|²` on the grid.
/// Newton iteration on the coefficient equations `Σ_k q̄_k q_{k+j} = l_j`,
/// `j = 0..n`, solved in real form by SVD least squares. The minimum-norm
/// step leaves the free global phase alone.
fn refine_factor(q0: &[C64], l: &[C64]) -> Vec<C64> {
    let n = l.len() - 1;
    let mut q = q0.to_vec();
    q.resize(n + 1, C64::new(0.0, 0.0));
    let residual = |q: &[C64]| -> Vec<C64> {
        (0..=n)
            .map(|j| (0..=n - j).map(|k| q[k].conj() * q[k + j]).sum::<C64>() - l[j])
            .collect()
    };
    let norm = |r: &[C64]| r.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut res = residual(&q);
    let mut best = norm(&res);
    for _ in 0..30 {
        if best < 1e-16 {
            break;
        }
        let dim = 2 * (n + 1);
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        let mut rhs = DVector::<f64>::zeros(dim);
        for j in 0..=n {
            rhs[j] = -res[j].re;
            rhs[n + 1 + j] = -res[j].im;
            for k in 0..=n - j {
                // d(q̄_k q_{k+j}) = dq̄_k q_{k+j} + q̄_k dq_{k+j}
                let a = q[k + j];
                jac[(j, k)] += a.re;
                jac[(j, n + 1 + k)] += a.im;
                jac[(n + 1 + j, k)] += a.im;
                jac[(n + 1 + j, n + 1 + k)] -= a.re;
                let b = q[k].conj();
                jac[(j, k + j)] += b.re;
                jac[(j, n + 1 + k + j)] -= b.im;
                jac[(n + 1 + j, k + j)] += b.im;
                jac[(n + 1 + j, n + 1 + k + j)] += b.re;
            }
        }
        let svd = jac.svd(true, true);
        let Ok(step) = svd.solve(&rhs, 1e-13 * svd.singular_values.max()) else {
            break;
        };
        let trial: Vec<C64> = (0..=n).map(|k| q[k] + C64::new(step[k], step[n + 1 + k])).collect();
        let trial_res = residual(&trial);
        let trial_norm = norm(&trial_res);
        if !(trial_norm < best) {
            break;
        }
        q = trial;
        res = trial_res;
        best = trial_norm;
    }
    q
}

fn fit_scale(p: &ComplexPolynomial, monic: &ComplexPolynomial) -> f64 {
    let samples = default_samples(p.degree().max(monic.degree()));
    let (mut num, mut den) = (0.0, 0.0);
    for phi in circle_grid(samples) {
        let target = 1.0 - p.eval_on_circle(phi).norm_sqr();
        let basis = monic.eval_on_circle(phi).norm_sqr();
        num += target * basis;
        den += basis * basis;
    }
    (num / den).max(0.0).sqrt()
}

/// Value and first two derivatives of `Σ c[m]·z^m`.
fn horner(c: &[C64], z: C64) -> (C64, C64, C64) {
    let zero = C64::new(0.0, 0.0);
    let (mut p, mut d1, mut d2) = (zero, zero, zero);
    for &a in c.iter().rev() {
        d2 = d2 * z + d1 * 2.0;
        d1 = d1 * z + p;
        p = p * z + a;
    }
    (p, d1, d2)
}

fn wrap(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x < -PI {
        x += 2.0 * PI;
    }
    x
}
