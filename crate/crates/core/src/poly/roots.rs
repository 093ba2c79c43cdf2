//! Companion-matrix root finding.

use nalgebra::{DMatrix, Schur};

use super::ComplexPolynomial;
use crate::{Error, Result, C64};

/// All roots of `poly` (with multiplicity), from the eigenvalues of its
/// balanced companion matrix.
pub fn roots(poly: &ComplexPolynomial) -> Result<Vec<C64>> {
    roots_of_coeffs(poly.coeffs())
}

/// Roots of `Σ c[m]·z^m` without trimming; the last coefficient must be
/// nonzero.
pub(crate) fn roots_of_coeffs(c: &[C64]) -> Result<Vec<C64>> {
    let d = c.len().saturating_sub(1);
    if d == 0 {
        return Err(Error::ConstantRoots);
    }
    let lead = c[d];
    if lead.norm() == 0.0 {
        return Err(Error::InvalidArgument("leading coefficient is zero".into()));
    }
    let mut m = DMatrix::<C64>::zeros(d, d);
    for i in 1..d {
        m[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    for i in 0..d {
        m[(i, d - 1)] = -c[i] / lead;
    }
    let mut balanced = m.clone();
    balance(&mut balanced);
    let start = eigenvalues(balanced, d)
        .or_else(|| eigenvalues(m, d))
        .filter(|e| e.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .unwrap_or_else(|| newton_polygon_guesses(c));
    Ok(aberth(c, start))
}

fn eigenvalues(m: DMatrix<C64>, d: usize) -> Option<Vec<C64>> {
    Schur::try_new(m, f64::EPSILON, 30 * d.max(10))
        .and_then(|s| s.eigenvalues())
        .map(|e| e.iter().copied().collect())
}

/// `p(z)/p'(z)`, evaluated through the reversed polynomial when `|z| > 1`.
fn newton_ratio(c: &[C64], z: C64) -> C64 {
    let zero = C64::new(0.0, 0.0);
    let d = c.len() - 1;
    if z.norm() <= 1.0 {
        let (mut p, mut dp) = (zero, zero);
        for &a in c.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        p / dp
    } else {
        let y = 1.0 / z;
        let (mut r, mut dr) = (zero, zero);
        for &a in c.iter() {
            dr = dr * y + r;
            r = r * y + a;
        }
        z / (C64::new(d as f64, 0.0) - y * dr / r)
    }
}

/// Aberth–Ehrlich simultaneous refinement of all roots.
fn aberth(c: &[C64], mut z: Vec<C64>) -> Vec<C64> {
    let n = z.len();
    let mut done = vec![false; n];
    for _ in 0..500 {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let ratio = newton_ratio(c, z[i]);
            if !(ratio.re.is_finite() && ratio.im.is_finite()) {
                done[i] = true;
                continue;
            }
            let sum: C64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| 1.0 / (z[i] - z[j]))
                .sum();
            let step = ratio / (1.0 - ratio * sum);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
            }
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm() || !step.norm().is_finite() {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
    z
}

/// Starting points on circles whose radii come from the upper convex hull
/// of `(m, ln|c_m|)`.
fn newton_polygon_guesses(c: &[C64]) -> Vec<C64> {
    let pts: Vec<(f64, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(m, a)| (m as f64, a.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(c.len() - 1);
    // Roots at the origin from vanishing low coefficients.
    for _ in 0..pts[0].0 as usize {
        out.push(C64::new(0.0, 0.0));
    }
    for w in hull.windows(2) {
        let k = (w[1].0 - w[0].0) as usize;
        let radius = ((w[0].1 - w[1].1) / k as f64).exp();
        for j in 0..k {
            let angle = 2.0 * std::f64::consts::PI * j as f64 / k as f64 + 0.4 + out.len() as f64 * 0.1;
            out.push(C64::from_polar(radius, angle));
        }
    }
    out
}

/// Parlett–Reinsch diagonal similarity scaling (powers of two) so that row
/// and column norms are comparable.
fn balance(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].l1_norm();
                    r += m[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / radix;
            let mut f = 1.0;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= g;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::multiply;
    use std::f64::consts::PI;

    fn check_residuals(p: &ComplexPolynomial, rs: &[C64]) {
        assert_eq!(rs.len(), p.degree());
        let scale = p.max_abs_coeff();
        for &r in rs {
            assert!(p.eval(r).norm() <= crate::EPS_ROOT * scale, "residual at {r}");
        }
    }

    #[test]
    fn square_roots_of_one() {
        let p = ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]);
        let mut rs = roots(&p).unwrap();
        check_residuals(&p, &rs);
        rs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((rs[0] + 1.0).norm() < 1e-14);
        assert!((rs[1] - 1.0).norm() < 1e-14);
    }

    #[test]
    fn quadruple_root() {
        let p = ComplexPolynomial::from_real(&[1.0, 4.0, 6.0, 4.0, 1.0]);
        let rs = roots(&p).unwrap();
        check_residuals(&p, &rs);
        for r in rs {
            assert!((r + 1.0).norm() < 1e-3);
        }
    }

    #[test]
    fn cube_roots_of_unity() {
        let p = ComplexPolynomial::from_real(&[-1.0, 0.0, 0.0, 1.0]);
        let rs = roots(&p).unwrap();
        check_residuals(&p, &rs);
        for k in 0..3 {
            let w = C64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0);
            assert!(rs.iter().any(|r| (r - w).norm() < 1e-13));
        }
    }

    #[test]
    fn constant_has_no_roots() {
        assert_eq!(
            roots(&ComplexPolynomial::constant(C64::new(2.0, 0.0))),
            Err(Error::ConstantRoots)
        );
    }

    #[test]
    fn product_roots_are_union() {
        let a = ComplexPolynomial::new(vec![C64::new(0.3, -0.2), C64::new(1.0, 0.0)]);
        let b = ComplexPolynomial::new(vec![C64::new(-2.0, 0.5), C64::new(0.0, 1.0), C64::new(1.0, 0.0)]);
        let ra = roots(&a).unwrap();
        let rb = roots(&b).unwrap();
        let rab = roots(&multiply(&a, &b)).unwrap();
        for r in ra.iter().chain(rb.iter()) {
            assert!(rab.iter().any(|x| (x - r).norm() < 1e-9));
        }
    }
}
