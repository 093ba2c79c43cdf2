//! Wigner function by displaced parity, `W(β) = (2/π)⟨ψ|D(β)ΠD†(β)|ψ⟩`.
//!
//! `D(β)ΠD†(β) = D(2β)Π`, and the Fock matrix elements of `D(γ)` have the
//! closed form `√(n!/m!)·γ^{m−n}·e^{−|γ|²/2}·L_n^{(m−n)}(|γ|²)` for `m ≥ n`.
//! The Laguerre values are produced by their three-term recurrence and the
//! prefactor is combined in log space so large `|γ|` neither overflows nor
//! underflows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Imaginary residue above which the map is rejected.
const IMAG_LIMIT: f64 = 1e-6;

/// Square sampling grid, `β = x + ip`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_points: usize,
}

impl WignerGrid {
    pub fn symmetric(half_width: f64, n_points: usize) -> Self {
        Self {
            x_min: -half_width,
            x_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            n_points,
        }
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::axis(self.x_min, self.x_max, self.n_points)
    }

    pub fn ps(&self) -> Vec<f64> {
        Self::axis(self.p_min, self.p_max, self.n_points)
    }

    fn validate(&self) -> Result<()> {
        let ends = [self.x_min, self.x_max, self.p_min, self.p_max];
        if self.n_points == 0 || ends.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("wigner grid must be finite and non-empty".into()));
        }
        Ok(())
    }
}

/// Sampled Wigner function, `values[ix][ip]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerMap {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Largest discarded imaginary part.
    pub imag_residue: f64,
}

impl WignerMap {
    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid point holding the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for (i, row) in self.values.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                if w > best.0 {
                    best = (w, self.xs[i], self.ps[j]);
                }
            }
        }
        (best.1, best.2)
    }

    /// CSV with header `x,p,w`, `x` outer, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,p,w")?;
        for (i, &x) in self.xs.iter().enumerate() {
            for (j, &p) in self.ps.iter().enumerate() {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", x, p, self.values[i][j])?;
            }
        }
        Ok(())
    }
}

/// Wigner function of the qumode state `c` (normalized internally).
pub fn wigner(state: &[C64], grid: &WignerGrid) -> Result<WignerMap> {
    grid.validate()?;
    let norm: f64 = state.iter().map(|c| c.norm_sqr()).sum();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("wigner of a zero state".into()));
    }
    let n = state.len();
    let c: Vec<C64> = state.iter().map(|x| x / norm.sqrt()).collect();
    // Π|ψ⟩
    let pc: Vec<C64> = c.iter().enumerate().map(|(k, &x)| if k % 2 == 0 { x } else { -x }).collect();
    let mut ln_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        ln_fact[k] = ln_fact[k - 1] + (k as f64).ln();
    }
    let (xs, ps) = (grid.xs(), grid.ps());
    let mut values = vec![vec![0.0; ps.len()]; xs.len()];
    let mut residue = 0.0f64;
    let mut d = vec![C64::new(0.0, 0.0); n * n];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            let gamma = C64::new(2.0 * x, 2.0 * p);
            displacement(gamma, n, &ln_fact, &mut d);
            let mut acc = C64::new(0.0, 0.0);
            for m in 0..n {
                if c[m] == C64::new(0.0, 0.0) {
                    continue;
                }
                let row: C64 = (0..n).map(|k| d[m * n + k] * pc[k]).sum();
                acc += c[m].conj() * row;
            }
            let w = acc * (2.0 / std::f64::consts::PI);
            residue = residue.max(w.im.abs());
            values[i][j] = w.re;
        }
    }
    if residue > IMAG_LIMIT {
        return Err(Error::WignerTruncation);
    }
    Ok(WignerMap {
        xs,
        ps,
        values,
        imag_residue: residue,
    })
}

/// Fills `d[m·n + k] = ⟨m|D(γ)|k⟩` for `m, k < n`.
fn displacement(gamma: C64, n: usize, ln_fact: &[f64], d: &mut [C64]) {
    let x = gamma.norm_sqr();
    let r = gamma.norm();
    let arg = gamma.arg();
    let mut lag = vec![0.0f64; n];
    for a in 0..n {
        // L_k^{(a)}(x) for k = 0..n−a−1.
        let len = n - a;
        lag[0] = 1.0;
        if len > 1 {
            lag[1] = 1.0 + a as f64 - x;
        }
        for k in 1..len.saturating_sub(1) {
            let kf = k as f64;
            lag[k + 1] = ((2.0 * kf + 1.0 + a as f64 - x) * lag[k] - (kf + a as f64) * lag[k - 1]) / (kf + 1.0);
        }
        for k in 0..len {
            let m = k + a;
            let value = if a > 0 && r == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                let ln_mag = 0.5 * (ln_fact[k] - ln_fact[m]) + if a > 0 { a as f64 * r.ln() } else { 0.0 } - x / 2.0;
                C64::from_polar(ln_mag.exp() * lag[k], a as f64 * arg)
            };
            // ⟨m|D(γ)|k⟩ with m = k + a.
            d[m * n + k] = value;
            if a > 0 {
                // ⟨k|D(γ)|m⟩ = conj⟨m|D(−γ)|k⟩, and (−γ)^a flips the sign for odd a.
                let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                d[k * n + m] = value.conj() * sign;
            }
        }
    }
}
