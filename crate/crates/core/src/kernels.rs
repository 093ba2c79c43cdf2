//! Interpolation kernels: polynomials equal to a prescribed value at one node
//! of the unit circle and zero at all others.
//!
//! Dispersive kernels live on the k-th roots of unity. JC kernels live on the
//! dressed phase nodes `e^{iΦ_n}` and only contain even powers of `z`; they
//! are built in `w = z²` and expanded at the end.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::poly::{multiply, ComplexPolynomial};
use crate::{Error, Result, C64, GRID_SAMPLES};

/// `e^{i2πm/k}` with the exponent reduced modulo `k` first.
pub fn root_of_unity(k: usize, m: i64) -> C64 {
    let r = m.rem_euclid(k as i64);
    C64::from_polar(1.0, 2.0 * PI * r as f64 / k as f64)
}

/// The `k` dispersive kernels `K_0..K_{k−1}`, each of degree `2k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersiveKernelSet {
    pub k: usize,
    pub kernels: Vec<ComplexPolynomial>,
}

impl DispersiveKernelSet {
    pub fn new(k: usize) -> Result<Self> {
        let base = base_kernel(k)?;
        let kernels = (0..k).map(|n| rotate_kernel(&base, k, n)).collect();
        Ok(Self { k, kernels })
    }

    /// `Σ_n values[n]·K_n`.
    pub fn combine(&self, values: &[C64]) -> Result<ComplexPolynomial> {
        if values.len() != self.k {
            return Err(Error::InvalidArgument(format!(
                "expected {} node values, got {}",
                self.k,
                values.len()
            )));
        }
        let deg = 2 * self.k;
        let mut coeffs = vec![C64::new(0.0, 0.0); deg + 1];
        for (kernel, &v) in self.kernels.iter().zip(values) {
            for (m, &c) in kernel.coeffs().iter().enumerate() {
                coeffs[m] += v * c;
            }
        }
        Ok(ComplexPolynomial::new(coeffs))
    }
}

/// `K_0(z) = (z+1)²·Π_{m=1}^{k−1}(z−ω^m)² / [4·Π(1−ω^m)²]`.
fn base_kernel(k: usize) -> Result<ComplexPolynomial> {
    if k == 0 {
        return Err(Error::InvalidArgument("modulus k must be at least 1".into()));
    }
    let one = C64::new(1.0, 0.0);
    let mut num = ComplexPolynomial::from_real(&[1.0, 2.0, 1.0]);
    let mut den = C64::new(4.0, 0.0);
    for m in 1..k {
        let w = root_of_unity(k, m as i64);
        let lin = ComplexPolynomial::new(vec![-w, one]);
        num = multiply(&num, &multiply(&lin, &lin));
        den *= (one - w) * (one - w);
    }
    Ok(num.scale(one / den))
}

/// `K_n(z) = K_0(z·ω^{−n})`.
fn rotate_kernel(base: &ComplexPolynomial, k: usize, n: usize) -> ComplexPolynomial {
    ComplexPolynomial::new(
        base.coeffs()
            .iter()
            .enumerate()
            .map(|(m, &c)| c * root_of_unity(k, -((n * m) as i64)))
            .collect(),
    )
}

/// Kernel `K_n` for modulus `k`.
pub fn dispersive_kernel(k: usize, n: usize) -> Result<ComplexPolynomial> {
    if n >= k {
        return Err(Error::InvalidArgument(format!("kernel index {n} out of range for k = {k}")));
    }
    Ok(rotate_kernel(&base_kernel(k)?, k, n))
}

/// `P(z) = Σ_n e^{iΘ_n}K_n(z)` with `k = phases.len()`.
pub fn modk_polynomial(phases: &[f64]) -> Result<ComplexPolynomial> {
    let set = DispersiveKernelSet::new(phases.len())?;
    let values: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    set.combine(&values)
}

/// Dressed phase nodes `Φ_n = π√(n+1)/(2√(n_max+2))`.
pub fn jc_phase_nodes(n_max: usize) -> Vec<f64> {
    let lt = jc_round_phase(n_max);
    (0..=n_max).map(|n| lt * ((n + 1) as f64).sqrt()).collect()
}

/// `λT = π/(2√(n_max+2))`, the JC evolution phase of one QSP round.
pub fn jc_round_phase(n_max: usize) -> f64 {
    PI / (2.0 * ((n_max + 2) as f64).sqrt())
}

/// Real (`K^R`) and imaginary (`K^I`) JC kernel families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JcKernelSet {
    pub n_max: usize,
    pub h: usize,
    pub s: usize,
    pub phase_nodes: Vec<f64>,
    pub real_kernels: Vec<ComplexPolynomial>,
    pub imag_kernels: Vec<ComplexPolynomial>,
    pub deltas_r: Vec<f64>,
    pub deltas_i: Vec<f64>,
    pub upsilon: Vec<f64>,
}

impl JcKernelSet {
    /// Kernel degree in `z`: `4s·n_max + 2h`.
    pub fn degree(&self) -> usize {
        4 * self.s * self.n_max + 2 * self.h
    }

    /// Phase-shift magnitude of one round, `λT`.
    pub fn round_phase(&self) -> f64 {
        jc_round_phase(self.n_max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Family {
    Real,
    Imag,
}

/// Node geometry in the squared variable `w = z² = e^{iψ}`.
struct Geometry {
    psi: Vec<f64>,
}

impl Geometry {
    fn new(n_max: usize) -> Self {
        Self {
            psi: jc_phase_nodes(n_max).iter().map(|p| 2.0 * p).collect(),
        }
    }

    /// `ln|cos^h a ± cos^h b|` with `a = ψ/2+δ`, `b = ψ/2−δ`.
    fn log_prefactor(family: Family, h: usize, delta: f64, psi: f64) -> f64 {
        let ca = (psi / 2.0 + delta).cos();
        let cb = (psi / 2.0 - delta).cos();
        let v = match family {
            Family::Real => ca.powi(h as i32) + cb.powi(h as i32),
            Family::Imag => ca.powi(h as i32) - cb.powi(h as i32),
        };
        v.abs().ln()
    }

    /// `s·Σ_{m≠n} ln|2cosψ − 2cosψ_m|`.
    fn log_product(&self, n: usize, s: usize, psi: f64) -> f64 {
        let c = psi.cos();
        s as f64
            * self
                .psi
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != n)
                .map(|(_, pm)| (2.0 * (c - pm.cos())).abs().ln())
                .sum::<f64>()
    }

    /// `ln|K_n(e^{iψ})|` up to the node normalization.
    fn log_shape(&self, family: Family, n: usize, h: usize, s: usize, delta: f64, psi: f64) -> f64 {
        Self::log_prefactor(family, h, delta, psi) + self.log_product(n, s, psi)
    }

    /// `d/dψ ln|K_n|` at the own node, as a function of `δ`.
    fn node_slope(&self, family: Family, n: usize, h: usize, s: usize, delta: f64) -> f64 {
        let psi = self.psi[n];
        let a = psi / 2.0 + delta;
        let b = psi / 2.0 - delta;
        let hi = h as i32;
        let (ca, cb) = (a.cos(), b.cos());
        let (num, den) = match family {
            Family::Real => (
                -(ca.powi(hi - 1) * a.sin() + cb.powi(hi - 1) * b.sin()),
                ca.powi(hi) + cb.powi(hi),
            ),
            Family::Imag => (
                -(ca.powi(hi - 1) * a.sin() - cb.powi(hi - 1) * b.sin()),
                ca.powi(hi) - cb.powi(hi),
            ),
        };
        let prefactor = 0.5 * h as f64 * num / den;
        let c = psi.cos();
        let product: f64 = self
            .psi
            .iter()
            .enumerate()
            .filter(|&(m, _)| m != n)
            .map(|(_, pm)| -psi.sin() / (c - pm.cos()))
            .sum();
        prefactor + s as f64 * product
    }

    /// Solves for `δ` making the own node a stationary point of `|K_n|` on
    /// the circle. The root nearest `δ = ψ_n/2` is returned.
    fn solve_delta(&self, family: Family, n: usize, h: usize, s: usize) -> Result<f64> {
        let center = self.psi[n] / 2.0;
        let steps = 4000;
        let half = 0.5 * PI * (1.0 - 1e-6);
        let f = |t: f64| self.node_slope(family, n, h, s, center + t);
        let mut best: Option<f64> = None;
        let mut prev_t = -half;
        let mut prev = f(prev_t);
        for i in 1..=steps {
            let t = -half + 2.0 * half * i as f64 / steps as f64;
            let v = f(t);
            if prev.is_finite() && v.is_finite() && prev.signum() != v.signum() {
                let (mut lo, mut hi, mut flo) = (prev_t, t, prev);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm.signum() == flo.signum() {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                    if hi - lo < 1e-16 {
                        break;
                    }
                }
                let root = 0.5 * (lo + hi);
                let is_zero = f(root).abs() < 1e-6 * (1.0 + h as f64 + s as f64);
                let node_ok = Self::log_prefactor(family, h, center + root, self.psi[n]).is_finite();
                if is_zero && node_ok && best.is_none_or(|b| root.abs() < b.abs()) {
                    best = Some(root);
                }
            }
            prev_t = t;
            prev = v;
        }
        best.map(|t| center + t).ok_or(Error::DeltaSolve { node: n })
    }

    /// Grid maximum of `Σ_n max(|K_n^R|, |K_n^I|)`.
    fn bound(&self, h: usize, s: usize, deltas_r: &[f64], deltas_i: &[f64]) -> f64 {
        let norms: Vec<(f64, f64)> = (0..self.psi.len())
            .map(|n| {
                (
                    self.log_shape(Family::Real, n, h, s, deltas_r[n], self.psi[n]),
                    self.log_shape(Family::Imag, n, h, s, deltas_i[n], self.psi[n]),
                )
            })
            .collect();
        let grid = (0..GRID_SAMPLES).map(|j| 2.0 * PI * j as f64 / GRID_SAMPLES as f64);
        grid.chain(self.psi.iter().copied())
            .map(|psi| {
                (0..self.psi.len())
                    .map(|n| {
                        let r = self.log_shape(Family::Real, n, h, s, deltas_r[n], psi) - norms[n].0;
                        let i = self.log_shape(Family::Imag, n, h, s, deltas_i[n], psi) - norms[n].1;
                        r.max(i).exp()
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

fn solve_all_deltas(geo: &Geometry, h: usize, s: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = geo.psi.len();
    let mut dr = Vec::with_capacity(n);
    let mut di = Vec::with_capacity(n);
    for node in 0..n {
        dr.push(geo.solve_delta(Family::Real, node, h, s)?);
        di.push(geo.solve_delta(Family::Imag, node, h, s)?);
    }
    Ok((dr, di))
}

/// Grid maximum of `Σ_n max(|K_n^R|, |K_n^I|)` for the given powers. Any
/// phase assignment then gives `|F| ≤` this value.
pub fn jc_kernel_bound(n_max: usize, h: usize, s: usize) -> Result<f64> {
    let geo = Geometry::new(n_max);
    let (dr, di) = solve_all_deltas(&geo, h, s)?;
    Ok(geo.bound(h, s, &dr, &di))
}

/// Grid maximum of `Σ_n (|K_n^R| + |K_n^I|)`.
pub fn jc_kernel_sum(n_max: usize, h: usize, s: usize) -> Result<f64> {
    let geo = Geometry::new(n_max);
    let (dr, di) = solve_all_deltas(&geo, h, s)?;
    let grid = (0..GRID_SAMPLES).map(|j| 2.0 * PI * j as f64 / GRID_SAMPLES as f64);
    Ok(grid
        .chain(geo.psi.iter().copied())
        .map(|psi| {
            (0..=n_max)
                .map(|n| {
                    let r = geo.log_shape(Family::Real, n, h, s, dr[n], psi)
                        - geo.log_shape(Family::Real, n, h, s, dr[n], geo.psi[n]);
                    let i = geo.log_shape(Family::Imag, n, h, s, di[n], psi)
                        - geo.log_shape(Family::Imag, n, h, s, di[n], geo.psi[n]);
                    r.exp() + i.exp()
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}

const MAX_S: usize = 32;
const MAX_H: usize = 64;
const BOUND_SLACK: f64 = 1e-12;

/// Smallest-degree `(h, s)` (ties broken by smaller `s`) whose kernels keep
/// `Σ_n max(|K_n^R|, |K_n^I|) ≤ 1` on the grid.
pub fn select_hs(n_max: usize) -> Result<(usize, usize)> {
    let geo = Geometry::new(n_max);
    let s_max = if n_max == 0 { 1 } else { MAX_S };
    let d_max = 2 * s_max * n_max + MAX_H;
    for d in 1..=d_max {
        for s in 1..=s_max {
            let used = 2 * s * n_max;
            if used >= d || d - used > MAX_H {
                continue;
            }
            let h = d - used;
            if hs_satisfies_bound(&geo, h, s) {
                return Ok((h, s));
            }
        }
    }
    Err(Error::KernelSearchExhausted)
}

/// Smallest `s` such that `(h, s)` with `h = degree_w − 2s·n_max` satisfies
/// the bound, for a fixed kernel degree `degree_w` in `w = z²`.
pub fn select_hs_with_degree(n_max: usize, degree_w: usize) -> Result<(usize, usize)> {
    let geo = Geometry::new(n_max);
    for s in 1..=MAX_S {
        let used = 2 * s * n_max;
        if used >= degree_w {
            break;
        }
        let h = degree_w - used;
        if h <= MAX_H && hs_satisfies_bound(&geo, h, s) {
            return Ok((h, s));
        }
        if n_max == 0 {
            break;
        }
    }
    Err(Error::KernelSearchExhausted)
}

fn hs_satisfies_bound(geo: &Geometry, h: usize, s: usize) -> bool {
    match solve_all_deltas(geo, h, s) {
        Ok((dr, di)) => geo.bound(h, s, &dr, &di) <= 1.0 + BOUND_SLACK,
        Err(_) => false,
    }
}

fn binomial_row(h: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for i in 0..h {
        let mut next = vec![1.0; i + 2];
        for j in 1..=i {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    row
}

/// Builds both JC kernel families for `(h, s)`.
pub fn jc_kernels(n_max: usize, h: usize, s: usize) -> Result<JcKernelSet> {
    if h == 0 || s == 0 {
        return Err(Error::InvalidArgument("h and s must be positive".into()));
    }
    let geo = Geometry::new(n_max);
    let (deltas_r, deltas_i) = solve_all_deltas(&geo, h, s)?;
    let degree_w = 2 * s * n_max + h;
    let binom = binomial_row(h);
    let phase_nodes = jc_phase_nodes(n_max);
    let upsilon: Vec<f64> = phase_nodes.iter().map(|p| degree_w as f64 * p).collect();

    let mut real_kernels = Vec::with_capacity(n_max + 1);
    let mut imag_kernels = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut product = ComplexPolynomial::from_real(&[1.0]);
        for (m, pm) in geo.psi.iter().enumerate() {
            if m == n {
                continue;
            }
            let factor = ComplexPolynomial::from_real(&[1.0, -2.0 * pm.cos(), 1.0]);
            for _ in 0..s {
                product = multiply(&product, &factor);
            }
        }
        let w_n = C64::from_polar(1.0, geo.psi[n]);
        let rotate = C64::from_polar(1.0, -upsilon[n]);

        let prefactor_r: Vec<f64> = (0..=h)
            .map(|j| 2.0 * binom[j] * (deltas_r[n] * (2.0 * j as f64 - h as f64)).cos())
            .collect();
        let shape_r = multiply(&ComplexPolynomial::from_real(&prefactor_r), &product);
        let node_r = shape_r.eval(w_n) * rotate;
        if node_r.im.abs() > 1e-8 * node_r.norm() {
            return Err(Error::DeltaSolve { node: n });
        }
        real_kernels.push(shape_r.scale(C64::new(1.0 / node_r.re, 0.0)).substitute_power(2));

        let prefactor_i: Vec<f64> = (0..=h)
            .map(|j| 2.0 * binom[j] * (deltas_i[n] * (2.0 * j as f64 - h as f64)).sin())
            .collect();
        let shape_i = multiply(&ComplexPolynomial::from_real(&prefactor_i), &product);
        let node_i = shape_i.eval(w_n) * rotate;
        if node_i.re.abs() > 1e-8 * node_i.norm() {
            return Err(Error::DeltaSolve { node: n });
        }
        imag_kernels.push(shape_i.scale(C64::new(0.0, -1.0 / node_i.im)).substitute_power(2));
    }
    Ok(JcKernelSet {
        n_max,
        h,
        s,
        phase_nodes,
        real_kernels,
        imag_kernels,
        deltas_r,
        deltas_i,
        upsilon,
    })
}

/// `F(z) = Σ_n [cosΘ_n·K_n^R + i·sinΘ_n·K_n^I]`.
pub fn jc_snap_polynomial(phases: &[f64], kernels: &JcKernelSet) -> Result<ComplexPolynomial> {
    let amps: Vec<C64> = phases.iter().map(|&t| C64::from_polar(1.0, t)).collect();
    jc_amplitude_polynomial(&amps, kernels)
}

/// `F(z) = Σ_n [Re A_n·K_n^R + i·Im A_n·K_n^I]`, so that
/// `F(e^{iΦ_n}) = e^{iΥ_n}A_n`.
pub fn jc_amplitude_polynomial(amps: &[C64], kernels: &JcKernelSet) -> Result<ComplexPolynomial> {
    if amps.len() != kernels.n_max + 1 {
        return Err(Error::InvalidArgument(format!(
            "expected {} node values, got {}",
            kernels.n_max + 1,
            amps.len()
        )));
    }
    let mut coeffs = vec![C64::new(0.0, 0.0); kernels.degree() + 1];
    for (n, a) in amps.iter().enumerate() {
        for (m, &c) in kernels.real_kernels[n].coeffs().iter().enumerate() {
            coeffs[m] += c * a.re;
        }
        for (m, &c) in kernels.imag_kernels[n].coeffs().iter().enumerate() {
            coeffs[m] += c * C64::new(0.0, a.im);
        }
    }
    // The construction is real by design; drop rounding noise.
    Ok(ComplexPolynomial::new(coeffs.iter().map(|c| C64::new(c.re, 0.0)).collect()))
}

/// `F(z) = Σ_n K_n^R(z)/√2`.
pub fn hadamard_polynomial(kernels: &JcKernelSet) -> ComplexPolynomial {
    let amps = vec![C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0); kernels.n_max + 1];
    jc_amplitude_polynomial(&amps, kernels).expect("amplitude count matches kernel set")
}
