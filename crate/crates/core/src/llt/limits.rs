//! Exact law of the total count and its normal and Poisson approximations.

use serde::{Deserialize, Serialize};

use super::edgeworth::EdgeworthExpansion;
use crate::error::{Result, ZrpError};
use crate::model::conditions::{convolve_upto, local_limit_statistic};
use crate::model::grand::{all_marginals, marginal, moments, phi_of_rho, DEFAULT_EPS_TRUNC};
use crate::model::RateFamily;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SumDistribution {
    pub phi: f64,
    pub pmf: Vec<f64>,
    /// bound on the mass lost to per-site truncation
    pub tail_bound: f64,
}

/// Law of `R = Σ_x η_x` under `μ_{Λ,φ}`, by convolving the truncated site
/// marginals in site order.
pub fn sum_distribution(rf: &RateFamily, phi: f64) -> Result<SumDistribution> {
    let margs = all_marginals(rf, phi, DEFAULT_EPS_TRUNC)?;
    let kmax: usize = margs.iter().map(|m| m.pmf.len() - 1).sum();
    let pmf = convolve_upto(margs.iter().map(|m| m.pmf.as_slice()), kmax);
    Ok(SumDistribution {
        phi,
        pmf,
        tail_bound: margs.iter().map(|m| m.tail_mass_bound).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LltComparison {
    pub k: usize,
    pub z: f64,
    pub approx: f64,
    pub exact: f64,
    pub abs_err: f64,
    /// `√(Nσ²)·|approx − exact|`
    pub scaled_err: f64,
}

fn compare(e: &EdgeworthExpansion, dist: &SumDistribution, k: usize) -> LltComparison {
    let scale = e.sigma * (e.num_sites as f64).sqrt();
    let z = e.z(k as f64);
    let approx = e.density(z) / scale;
    let exact = dist.pmf.get(k).copied().unwrap_or(0.0);
    LltComparison {
        k,
        z,
        approx,
        exact,
        abs_err: (approx - exact).abs(),
        scaled_err: scale * (approx - exact).abs(),
    }
}

/// Normal-regime approximation of `μ_{Λ,φ(r/N)}(R = r)` with `J − 1` terms.
pub fn llt_normal(rf: &RateFamily, r: usize, order: usize) -> Result<LltComparison> {
    if !(2..=4).contains(&order) {
        return Err(ZrpError::InvalidArgument(format!("J must be 2, 3 or 4, got {order}")));
    }
    let phi = phi_of_rho(rf, r as f64 / rf.num_sites() as f64)?;
    let e = EdgeworthExpansion::new(rf, phi, order)?;
    let dist = sum_distribution(rf, phi)?;
    Ok(compare(&e, &dist, r))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeworthScan {
    pub num_sites: usize,
    pub order: usize,
    pub points: Vec<LltComparison>,
    pub sup_err: f64,
}

/// Scaled error at every count with `|z| ≤ z_max`, at fugacity `phi`.
pub fn edgeworth_scan(rf: &RateFamily, phi: f64, order: usize, z_max: f64) -> Result<EdgeworthScan> {
    let e = EdgeworthExpansion::new(rf, phi, order)?;
    let dist = sum_distribution(rf, phi)?;
    let n = rf.num_sites() as f64;
    let centre = n * e.rho;
    let half = z_max * e.sigma * n.sqrt();
    let lo = (centre - half).ceil().max(0.0) as usize;
    let hi = (centre + half).floor() as usize;
    let points: Vec<LltComparison> = (lo..=hi).map(|k| compare(&e, &dist, k)).collect();
    let sup_err = points.iter().map(|p| p.scaled_err).fold(0.0, f64::max);
    Ok(EdgeworthScan {
        num_sites: rf.num_sites(),
        order,
        points,
        sup_err,
    })
}

/// `μ_{Λ,φ(r/N)}(R = k)` against `r^k e^{−r}/k!`.
pub fn llt_poisson(rf: &RateFamily, r: usize, k: usize) -> Result<LltComparison> {
    let dist = poisson_regime_distribution(rf, r)?;
    Ok(poisson_point(&dist, r, k))
}

fn poisson_regime_distribution(rf: &RateFamily, r: usize) -> Result<SumDistribution> {
    if r == 0 {
        return Ok(SumDistribution {
            phi: 0.0,
            pmf: vec![1.0],
            tail_bound: 0.0,
        });
    }
    let phi = phi_of_rho(rf, r as f64 / rf.num_sites() as f64)?;
    sum_distribution(rf, phi)
}

fn poisson_pmf(r: usize, k: usize) -> f64 {
    if r == 0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let lr = (r as f64).ln();
    let lf: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    (k as f64 * lr - r as f64 - lf).exp()
}

fn poisson_point(dist: &SumDistribution, r: usize, k: usize) -> LltComparison {
    let approx = poisson_pmf(r, k);
    let exact = dist.pmf.get(k).copied().unwrap_or(0.0);
    LltComparison {
        k,
        z: f64::NAN,
        approx,
        exact,
        abs_err: (approx - exact).abs(),
        scaled_err: (approx - exact).abs(),
    }
}

/// `sup_k |μ(R = k) − r^k e^{−r}/k!|` over the support of the exact law.
pub fn poisson_sup_error(rf: &RateFamily, r: usize) -> Result<f64> {
    let dist = poisson_regime_distribution(rf, r)?;
    Ok((0..dist.pmf.len())
        .map(|k| poisson_point(&dist, r, k).abs_err)
        .fold(0.0, f64::max))
}

/// `|μ̂^x_φ(t)| = |Σ_k μ^x_φ(k) e^{ikt/σ_x}|` on a grid of `t`.
pub fn charfn_scan(rf: &RateFamily, x: usize, phi: f64, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let m = marginal(rf, x, phi, DEFAULT_EPS_TRUNC)?;
    let mean = m.mean();
    let var: f64 = m.pmf.iter().enumerate().map(|(k, p)| p * (k as f64 - mean).powi(2)).sum();
    let sigma = var.sqrt();
    Ok(t_grid
        .iter()
        .map(|&t| {
            let th = t / sigma;
            let (re, im) = m.pmf.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, p)| {
                let (s, c) = (k as f64 * th).sin_cos();
                (a + p * c, b + p * s)
            });
            (t, re.hypot(im))
        })
        .collect())
}

/// `max_{δ ≤ |θ| ≤ π} |Σ_k μ^x_φ(k) e^{ikθ}|` on a grid of `n` points.
pub fn charfn_max_outside(rf: &RateFamily, x: usize, phi: f64, delta: f64, n: usize) -> Result<f64> {
    let m = marginal(rf, x, phi, DEFAULT_EPS_TRUNC)?;
    let n = n.max(2);
    Ok((0..n)
        .map(|i| {
            let th = delta + (std::f64::consts::PI - delta) * i as f64 / (n - 1) as f64;
            let (re, im) = m.pmf.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, p)| {
                let (s, c) = (k as f64 * th).sin_cos();
                (a + p * c, b + p * s)
            });
            re.hypot(im)
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EScan {
    pub values: Vec<(usize, usize, f64)>,
    pub inf: f64,
    pub sup: f64,
}

/// `√r·μ_{Λ,φ(r/|Λ|)}(R = r)` for every size in `sizes` and `r = 1..=r_max`.
pub fn condition_e_scan(rf: &RateFamily, sizes: &[usize], r_max: usize) -> Result<EScan> {
    let mut values = Vec::new();
    for &size in sizes {
        for r in 1..=r_max {
            values.push((size, r, local_limit_statistic(rf, size, r)?));
        }
    }
    if values.is_empty() {
        return Err(ZrpError::DegenerateSample("empty (|Λ|, r) grid".into()));
    }
    let inf = values.iter().map(|v| v.2).fold(f64::INFINITY, f64::min);
    let sup = values.iter().map(|v| v.2).fold(0.0, f64::max);
    Ok(EScan { values, inf, sup })
}

/// `max_x m^x_{2k}/σ_x^{2k}` at each `φ` in `phis`.
pub fn standardized_moment_scan(rf: &RateFamily, phis: &[f64], k: usize) -> Result<Vec<(f64, f64)>> {
    if k == 0 || 2 * k > 8 {
        return Err(ZrpError::InvalidArgument(format!("moment order 2k must lie in 2..=8, got {}", 2 * k)));
    }
    phis.iter()
        .map(|&phi| {
            let mt = moments(rf, phi, 2 * k)?;
            let v = (0..rf.num_sites())
                .map(|x| mt.central[x][2 * k] / mt.sigma2[x].powi(k as i32))
                .fold(0.0, f64::max);
            Ok((phi, v))
        })
        .collect()
}
