//! Hermite polynomials and Edgeworth correction terms for the law of the
//! total particle count.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZrpError};
use crate::model::grand::moments;
use crate::model::RateFamily;

/// Probabilists' Hermite polynomial `H_m(x)`.
pub fn hermite(m: usize, x: f64) -> f64 {
    let (mut h0, mut h1) = (1.0, x);
    if m == 0 {
        return h0;
    }
    for k in 1..m {
        let h2 = x * h1 - k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// A solution of `k_1 + 2k_2 + … + j k_j = j` with `a = Σ k_l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeworthTerm {
    pub ks: Vec<usize>,
    pub a: usize,
}

pub fn edgeworth_terms(j: usize) -> Vec<EdgeworthTerm> {
    fn rec(m: usize, left: usize, ks: &mut Vec<usize>, out: &mut Vec<EdgeworthTerm>) {
        if m == 0 {
            if left == 0 {
                let mut v = ks.clone();
                v.reverse();
                out.push(EdgeworthTerm {
                    a: v.iter().sum(),
                    ks: v,
                });
            }
            return;
        }
        for k in (0..=left / m).rev() {
            ks.push(k);
            rec(m - 1, left - k * m, ks, out);
            ks.pop();
        }
    }
    let mut out = Vec::new();
    if j > 0 {
        rec(j, j, &mut Vec::new(), &mut out);
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeworthExpansion {
    /// number of retained orders: `g_0 … g_{J−2}`
    pub order: usize,
    pub num_sites: usize,
    pub phi: f64,
    /// site-averaged mean and standard deviation
    pub rho: f64,
    pub sigma: f64,
    /// `λ_m = κ_{m+2} / ((m+2)! σ^{m+2})` for `m = 1..=J−2`, at index `m−1`
    pub lambdas: Vec<f64>,
    terms: Vec<Vec<EdgeworthTerm>>,
}

impl EdgeworthExpansion {
    /// Expansion for `R = Σ η_x` under `μ_{Λ,φ}`, with cumulants averaged
    /// over sites.
    pub fn new(rf: &RateFamily, phi: f64, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(ZrpError::InvalidArgument(format!("expansion order must be >= 2, got {order}")));
        }
        if order > 8 {
            return Err(ZrpError::InvalidArgument(format!("expansion order must be <= 8, got {order}")));
        }
        let mt = moments(rf, phi, order.max(2))?;
        let sigma = mt.sigma2_avg.sqrt();
        let lambdas = (1..=order - 2)
            .map(|m| mt.cumulant_avg(m + 2) / (factorial(m + 2) * sigma.powi(m as i32 + 2)))
            .collect();
        Ok(EdgeworthExpansion {
            order,
            num_sites: rf.num_sites(),
            phi,
            rho: mt.rho_avg,
            sigma,
            lambdas,
            terms: (0..=order - 2).map(edgeworth_terms).collect(),
        })
    }

    pub fn g(&self, j: usize, x: f64) -> f64 {
        if j == 0 {
            return normal_density(x);
        }
        let s: f64 = self.terms[j]
            .iter()
            .map(|t| {
                let prod: f64 = t
                    .ks
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| self.lambdas[i].powi(k as i32) / factorial(k))
                    .product();
                hermite(j + 2 * t.a, x) * prod
            })
            .sum();
        normal_density(x) * s
    }

    /// `Σ_{j=0}^{J−2} N^{−j/2} g_j(z)`.
    pub fn density(&self, z: f64) -> f64 {
        let n = self.num_sites as f64;
        (0..=self.order - 2).map(|j| n.powf(-(j as f64) / 2.0) * self.g(j, z)).sum()
    }

    /// Standardized coordinate of the count `k`.
    pub fn z(&self, k: f64) -> f64 {
        let n = self.num_sites as f64;
        (k - n * self.rho) / (self.sigma * n.sqrt())
    }
}
