//! Variance, relative entropy, Dirichlet form and entropy dissipation of a
//! function against a reversible generator.

use serde::{Deserialize, Serialize};

use super::generator::GeneratorMatrix;
use crate::error::{Result, ZrpError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub mean: f64,
    pub variance: f64,
    /// `None` when `f` has negative entries.
    pub entropy: Option<f64>,
    pub dirichlet: f64,
    pub dirichlet_sqrt: Option<f64>,
}

pub fn functionals(gen: &GeneratorMatrix, f: &[f64]) -> Functionals {
    let nonneg = f.iter().all(|&v| v >= 0.0);
    Functionals {
        mean: mean(&gen.nu, f),
        variance: variance(&gen.nu, f),
        entropy: nonneg.then(|| entropy(&gen.nu, f).expect("checked nonnegative")),
        dirichlet: dirichlet(gen, f),
        dirichlet_sqrt: nonneg.then(|| dirichlet_sqrt(gen, f).expect("checked nonnegative")),
    }
}

pub fn mean(nu: &[f64], f: &[f64]) -> f64 {
    nu.iter().zip(f).map(|(p, v)| p * v).sum()
}

pub fn variance(nu: &[f64], f: &[f64]) -> f64 {
    let m = mean(nu, f);
    nu.iter().zip(f).map(|(p, v)| p * (v - m) * (v - m)).sum()
}

fn check_nonneg(f: &[f64]) -> Result<()> {
    match f.iter().position(|&v| v < 0.0 || v.is_nan()) {
        Some(i) => Err(ZrpError::NegativeDensity { index: i, value: f[i] }),
        None => Ok(()),
    }
}

/// `g log g − g + 1`, accurate near `g = 1`.
pub(crate) fn entropy_kernel(g: f64) -> f64 {
    if g == 0.0 {
        return 1.0;
    }
    let u = g - 1.0;
    if u.abs() < 1e-3 {
        // u²/2 − u³/6 + u⁴/12 − u⁵/20 + u⁶/30
        let u2 = u * u;
        u2 * (0.5 + u * (-1.0 / 6.0 + u * (1.0 / 12.0 + u * (-1.0 / 20.0 + u / 30.0))))
    } else {
        g * g.ln() - u
    }
}

/// `H(f) = ν[f log f] − ν[f] log ν[f]`, with `0 log 0 = 0`.
pub fn entropy(nu: &[f64], f: &[f64]) -> Result<f64> {
    check_nonneg(f)?;
    let m = mean(nu, f);
    if m == 0.0 {
        return Ok(0.0);
    }
    // with g = f/m: H = m ν[g log g − g + 1], a sum of nonnegative terms
    let s: f64 = nu.iter().zip(f).map(|(p, v)| p * entropy_kernel(v / m)).sum();
    Ok(m * s)
}

/// `D(f) = ½ Σ_{i,j} ν_i L(i,j) (f_j − f_i)² = ν[f (−L) f]`.
pub fn dirichlet(gen: &GeneratorMatrix, f: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..gen.len() {
        for (j, v) in gen.row(i) {
            let d = f[j] - f[i];
            s += gen.nu[i] * v * d * d;
        }
    }
    0.5 * s
}

/// `D(√f)`.
pub fn dirichlet_sqrt(gen: &GeneratorMatrix, f: &[f64]) -> Result<f64> {
    check_nonneg(f)?;
    let s: Vec<f64> = f.iter().map(|v| v.sqrt()).collect();
    Ok(dirichlet(gen, &s))
}

/// `ν[f (−L) log f] = ½ Σ ν_i L(i,j) (f_j − f_i)(log f_j − log f_i)`.
/// Infinite when `f` vanishes at a state connected to a positive one.
pub fn entropy_dissipation(gen: &GeneratorMatrix, f: &[f64]) -> Result<f64> {
    check_nonneg(f)?;
    let mut s = 0.0;
    for i in 0..gen.len() {
        for (j, v) in gen.row(i) {
            let (a, b) = (f[i], f[j]);
            if a == b {
                continue;
            }
            if a == 0.0 || b == 0.0 {
                return Ok(f64::INFINITY);
            }
            let dl = ((b - a) / a).ln_1p();
            s += gen.nu[i] * v * (b - a) * dl;
        }
    }
    Ok(0.5 * s)
}
