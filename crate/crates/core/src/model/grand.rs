//! Grand canonical single-site marginals, moment tables and the
//! density/fugacity map.

use serde::{Deserialize, Serialize};

use super::rates::{RateFamily, SiteRate};
use crate::error::{Result, ZrpError};

pub const DEFAULT_EPS_TRUNC: f64 = 1e-14;
pub const TRUNCATION_CAP: usize = 200_000;
const MOMENT_ORDER: i32 = 8;

/// Truncated, renormalized marginal `μ_{x,φ}(η_x = k) = φ^k / (c_x(k)! Z_x(φ))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrandCanonicalMarginal {
    pub site: usize,
    pub phi: f64,
    pub pmf: Vec<f64>,
    pub log_z: f64,
    pub k_trunc: usize,
    pub tail_mass_bound: f64,
}

impl GrandCanonicalMarginal {
    pub fn z(&self) -> f64 {
        self.log_z.exp()
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Marginal of a single site rate. `phi = 0` gives the point mass at 0.
pub fn site_marginal(rate: &SiteRate, site: usize, phi: f64, eps_trunc: f64) -> Result<GrandCanonicalMarginal> {
    if !(phi >= 0.0) || !phi.is_finite() {
        return Err(ZrpError::InvalidArgument(format!("fugacity must be >= 0, got {phi}")));
    }
    if !(eps_trunc > 0.0 && eps_trunc <= 1e-6) {
        return Err(ZrpError::InvalidArgument(format!(
            "eps_trunc must lie in (0, 1e-6], got {eps_trunc}"
        )));
    }
    if phi == 0.0 {
        return Ok(GrandCanonicalMarginal {
            site,
            phi,
            pmf: vec![1.0],
            log_z: 0.0,
            k_trunc: 0,
            tail_mass_bound: 0.0,
        });
    }
    let (c1, _) = rate.ratio_bounds();
    let lphi = phi.ln();
    let lq = (phi / c1).ln();
    let q = phi / c1;
    let leps = eps_trunc.ln();

    let mut logw = vec![0.0];
    let mut lfact = 0.0; // log c(k)!
    let mut lenv = 0.0; // log (q^k / k!) of the envelope
    // running log-sum of weights
    let mut log_z = 0.0f64;
    let mut k = 0usize;
    loop {
        // envelope bounds on Σ_{j>k} φ^j / c(j)! and on Σ_{j>k} j^8 φ^j / c(j)!;
        // the second keeps moments up to order 8 accurate to eps as well
        let next = k + 1;
        let lt_next = lenv + lq - (next as f64).ln();
        let ratio = q / (next + 1) as f64;
        let ratio_m = ratio * ((next + 1) as f64 / next as f64).powi(MOMENT_ORDER);
        if ratio_m < 1.0 {
            let lbound = lt_next - (1.0 - ratio).ln();
            let lbound_m = lt_next + MOMENT_ORDER as f64 * (next as f64).ln() - (1.0 - ratio_m).ln();
            if lbound_m < leps + log_z {
                let tail_mass_bound = (lbound - log_z).exp();
                let pmf: Vec<f64> = logw.iter().map(|w| (w - log_z).exp()).collect();
                let s: f64 = pmf.iter().sum();
                return Ok(GrandCanonicalMarginal {
                    site,
                    phi,
                    pmf: pmf.into_iter().map(|p| p / s).collect(),
                    log_z: log_z + s.ln(),
                    k_trunc: k,
                    tail_mass_bound,
                });
            }
        }
        if next > TRUNCATION_CAP {
            return Err(ZrpError::TruncationOverflow { cap: TRUNCATION_CAP });
        }
        lfact += rate.eval(next).ln();
        lenv = lt_next;
        let lw = next as f64 * lphi - lfact;
        logw.push(lw);
        log_z = if lw > log_z {
            lw + (log_z - lw).exp().ln_1p()
        } else {
            log_z + (lw - log_z).exp().ln_1p()
        };
        k = next;
    }
}

pub fn marginal(rf: &RateFamily, x: usize, phi: f64, eps_trunc: f64) -> Result<GrandCanonicalMarginal> {
    site_marginal(rf.site_rate(x), x, phi, eps_trunc)
}

/// Marginals for every site, computed once per distinct site rate.
pub fn all_marginals(rf: &RateFamily, phi: f64, eps_trunc: f64) -> Result<Vec<GrandCanonicalMarginal>> {
    let mut out: Vec<GrandCanonicalMarginal> = Vec::with_capacity(rf.num_sites());
    for x in 0..rf.num_sites() {
        let twin = (0..x).find(|&y| rf.site_rate(y) == rf.site_rate(x));
        match twin {
            Some(y) => {
                let mut m = out[y].clone();
                m.site = x;
                out.push(m);
            }
            None => out.push(marginal(rf, x, phi, eps_trunc)?),
        }
    }
    Ok(out)
}

/// Per-site moments and cumulants of the grand canonical measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentTable {
    pub phi: f64,
    pub order: usize,
    pub rho: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// `central[x][k] = E[(η_x − ρ_x)^k]`, `k = 0..=order`.
    pub central: Vec<Vec<f64>>,
    /// `cumulants[x][m]`, `m = 0..=order` (index 0 unused, index 1 is 0).
    pub cumulants: Vec<Vec<f64>>,
    /// `E[c_x(η_x)]`, equal to `φ` for every site.
    pub mean_rate: Vec<f64>,
    pub rho_avg: f64,
    pub sigma2_avg: f64,
}

impl MomentTable {
    /// Average over sites of the order-`m` cumulant.
    pub fn cumulant_avg(&self, m: usize) -> f64 {
        self.cumulants.iter().map(|c| c[m]).sum::<f64>() / self.cumulants.len() as f64
    }
}

/// Cumulants `κ_1..κ_n` from moments about any origin (`moments[0] = 1`).
pub fn cumulants_from_moments(moments: &[f64]) -> Vec<f64> {
    let n = moments.len() - 1;
    let mut binom = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..=n {
        binom[i][0] = 1.0;
        for j in 1..=i {
            binom[i][j] = binom[i - 1][j - 1] + if j < i { binom[i - 1][j] } else { 0.0 };
        }
    }
    let mut kappa = vec![0.0; n + 1];
    for m in 1..=n {
        let mut s = moments[m];
        for j in 1..m {
            s -= binom[m - 1][j - 1] * kappa[j] * moments[m - j];
        }
        kappa[m] = s;
    }
    kappa
}

fn site_moments(rate: &SiteRate, pmf: &[f64], order: usize) -> (f64, Vec<f64>, Vec<f64>, f64) {
    let rho: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let mut central = vec![0.0; order + 1];
    for (k, p) in pmf.iter().enumerate() {
        let d = k as f64 - rho;
        let mut pw = 1.0;
        for c in central.iter_mut() {
            *c += p * pw;
            pw *= d;
        }
    }
    let kappa = cumulants_from_moments(&central);
    let mean_rate = pmf.iter().enumerate().map(|(k, p)| p * rate.eval(k)).sum();
    (rho, central, kappa, mean_rate)
}

pub fn moments_from_marginals(rf: &RateFamily, margs: &[GrandCanonicalMarginal], order: usize) -> MomentTable {
    let n = rf.num_sites();
    let mut rho = Vec::with_capacity(n);
    let mut sigma2 = Vec::with_capacity(n);
    let mut central = Vec::with_capacity(n);
    let mut cumulants = Vec::with_capacity(n);
    let mut mean_rate = Vec::with_capacity(n);
    for (x, m) in margs.iter().enumerate() {
        let (r, c, k, mr) = site_moments(rf.site_rate(x), &m.pmf, order.max(2));
        rho.push(r);
        sigma2.push(c[2]);
        central.push(c);
        cumulants.push(k);
        mean_rate.push(mr);
    }
    MomentTable {
        phi: margs.first().map(|m| m.phi).unwrap_or(0.0),
        order,
        rho_avg: rho.iter().sum::<f64>() / n as f64,
        sigma2_avg: sigma2.iter().sum::<f64>() / n as f64,
        rho,
        sigma2,
        central,
        cumulants,
        mean_rate,
    }
}

/// Moments up to `order <= 8` at fugacity `phi`.
pub fn moments(rf: &RateFamily, phi: f64, order: usize) -> Result<MomentTable> {
    if order > 8 {
        return Err(ZrpError::InvalidArgument(format!("moment order {order} exceeds 8")));
    }
    let margs = all_marginals(rf, phi, DEFAULT_EPS_TRUNC)?;
    Ok(moments_from_marginals(rf, &margs, order))
}

/// Average density and variance `(ρ_Λ(φ), σ²_Λ(φ))`.
pub fn density_and_variance(rf: &RateFamily, phi: f64) -> Result<(f64, f64)> {
    let t = moments(rf, phi, 2)?;
    Ok((t.rho_avg, t.sigma2_avg))
}

const PHI_MAX_ITER: usize = 300;

/// Invert `ρ_Λ(φ) = rho`; `rho = 0` maps to `φ = 0`.
pub fn phi_of_rho(rf: &RateFamily, rho: f64) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(ZrpError::InvalidArgument(format!("density must be >= 0, got {rho}")));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let tol = 1e-12 * rho.max(1.0);
    let dens = |phi: f64| density_and_variance(rf, phi);

    // bracket by factor-4 growth from φ = ρ
    let mut lo = rho;
    let mut hi = rho;
    let (mut rlo, _) = dens(lo)?;
    let mut rhi = rlo;
    let mut iters = 0;
    while rhi < rho {
        lo = hi;
        rlo = rhi;
        hi *= 4.0;
        rhi = dens(hi)?.0;
        iters += 1;
        if iters > PHI_MAX_ITER {
            return Err(ZrpError::NoConvergence {
                what: "bracketing φ from above".into(),
                iterations: iters,
            });
        }
    }
    while rlo > rho {
        hi = lo;
        lo /= 4.0;
        rlo = dens(lo)?.0;
        iters += 1;
        if iters > PHI_MAX_ITER {
            return Err(ZrpError::NoConvergence {
                what: "bracketing φ from below".into(),
                iterations: iters,
            });
        }
    }

    // safeguarded Newton with dφ/dρ = φ/σ²
    let mut phi = 0.5 * (lo + hi);
    for it in 0..PHI_MAX_ITER {
        let (r, s2) = dens(phi)?;
        let err = r - rho;
        if err.abs() <= tol {
            return Ok(phi);
        }
        if err > 0.0 {
            hi = phi;
        } else {
            lo = phi;
        }
        let newton = phi - err * phi / s2;
        phi = if newton > lo && newton < hi && s2 > 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            let (r, _) = dens(phi)?;
            if (r - rho).abs() <= tol {
                return Ok(phi);
            }
            return Err(ZrpError::NoConvergence {
                what: format!("φ(ρ = {rho}) bracket collapsed with residual {}", r - rho),
                iterations: it,
            });
        }
    }
    Err(ZrpError::NoConvergence {
        what: format!("φ(ρ = {rho})"),
        iterations: PHI_MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Cube;

    fn linear(n: usize) -> RateFamily {
        RateFamily::preset("linear", &Cube::segment(n)).unwrap()
    }

    #[test]
    fn poisson_one() {
        let m = marginal(&linear(1), 0, 1.0, 1e-14).unwrap();
        assert!((m.z() - std::f64::consts::E).abs() < 1e-12);
        assert!((m.pmf[2] - 0.18393972058572117).abs() < 1e-12);
        assert!((m.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(m.tail_mass_bound < 1e-14);
    }

    #[test]
    fn rescaled_rate_is_rescaled_poisson() {
        let rf = RateFamily::preset("linear-theta:2", &Cube::segment(1)).unwrap();
        let m = marginal(&rf, 0, 1.0, 1e-14).unwrap();
        let mut p = (-0.5f64).exp();
        for k in 0..m.pmf.len() {
            assert!((m.pmf[k] - p).abs() < 1e-14, "k = {k}");
            p *= 0.5 / (k + 1) as f64;
        }
    }

    #[test]
    fn bad_eps_rejected() {
        assert!(marginal(&linear(1), 0, 1.0, 1e-3).is_err());
        assert!(marginal(&linear(1), 0, -1.0, 1e-14).is_err());
    }

    #[test]
    fn poisson_cumulants() {
        let t = moments(&linear(2), 2.0, 8).unwrap();
        assert!((t.rho[0] - 2.0).abs() < 1e-12);
        assert!((t.sigma2[0] - 2.0).abs() < 1e-12);
        for m in 2..=8 {
            assert!((t.cumulants[0][m] - 2.0).abs() < 1e-8, "κ_{m} = {}", t.cumulants[0][m]);
        }
        assert!(t.cumulants[0][1].abs() < 1e-15);
        assert!((t.cumulants[1][2] - t.central[1][2]).abs() < 1e-12);
    }

    #[test]
    fn alternating_average_density() {
        let rf = RateFamily::preset("alternating:1,2", &Cube::segment(2)).unwrap();
        let t = moments(&rf, 2.0, 4).unwrap();
        assert!((t.rho_avg - 1.5).abs() < 1e-12);
    }

    #[test]
    fn fugacity_identity() {
        let rf = RateFamily::preset("staircase", &Cube::segment(3)).unwrap();
        for &phi in &[0.1, 1.0, 7.5] {
            let t = moments(&rf, phi, 2).unwrap();
            for &v in &t.mean_rate {
                assert!((v - phi).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn phi_inversion() {
        assert!((phi_of_rho(&linear(3), 2.5).unwrap() - 2.5).abs() < 1e-11);
        let rf = RateFamily::preset("alternating:1,2", &Cube::segment(4)).unwrap();
        let phi = phi_of_rho(&rf, 1.5).unwrap();
        assert!((phi - 2.0).abs() < 1e-11, "{phi}");
        let (r, _) = density_and_variance(&rf, phi).unwrap();
        assert!((r - 1.5).abs() <= 1e-12 * 1.5);
    }

    #[test]
    fn phi_goes_to_zero_monotonically() {
        let rf = linear(2);
        let mut last = f64::INFINITY;
        for e in 1..12 {
            let rho = 10f64.powi(-e);
            let phi = phi_of_rho(&rf, rho).unwrap();
            assert!(phi < last && phi > 0.0);
            last = phi;
        }
        assert!(last < 1e-10);
    }

    #[test]
    fn cumulant_recursion_on_bernoulli() {
        // Bernoulli(p): κ2 = p q, κ3 = p q (q − p)
        let p: f64 = 0.3;
        let raw = vec![1.0, p, p, p, p];
        let k = cumulants_from_moments(&raw);
        assert!((k[1] - p).abs() < 1e-15);
        assert!((k[2] - p * (1.0 - p)).abs() < 1e-15);
        assert!((k[3] - p * (1.0 - p) * (1.0 - 2.0 * p)).abs() < 1e-15);
    }
}
