//! The modified count law `γ₁^ε`: `γ₁` is replaced on the central window
//! `I_ε = [εr, (1−ε)r]` by `e^{−H}/Z`, where `H` compares half-lattice
//! local-limit probabilities at matched and at central fugacities.

use serde::{Deserialize, Serialize};

use super::reductions::BoundaryCountLaw;
use crate::error::{Result, ZrpError};
use crate::model::grand::{all_marginals, phi_of_rho, DEFAULT_EPS_TRUNC};
use crate::model::RateFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModifiedMeasure {
    pub epsilon: f64,
    pub r_bar: usize,
    /// inclusive bounds of `I_ε`
    pub window: (usize, usize),
    pub h_vals: Vec<f64>,
    pub z_norm: f64,
    pub gamma1_eps: Vec<f64>,
    /// `inf` and `sup` of `γ₁^ε/γ₁`
    pub ratio_min: f64,
    pub ratio_max: f64,
}

/// `log μ_{S,φ(k/|S|)}(R_S = k) − log μ_{S,φ(k̄/|S|)}(R_S = k)` as a function
/// of `k`. The unnormalized count weights cancel, leaving
/// `k log(φ_k/φ_k̄) − log Z_S(φ_k) + log Z_S(φ_k̄)`.
fn half_term(rf: &RateFamily, k: usize, kbar: usize) -> Result<f64> {
    let n = rf.num_sites() as f64;
    let log_z = |phi: f64| -> Result<f64> {
        if phi == 0.0 {
            return Ok(0.0);
        }
        Ok(all_marginals(rf, phi, DEFAULT_EPS_TRUNC)?.iter().map(|m| m.log_z).sum())
    };
    let pk = phi_of_rho(rf, k as f64 / n)?;
    let pb = phi_of_rho(rf, kbar as f64 / n)?;
    if k == kbar {
        return Ok(0.0);
    }
    if pb == 0.0 {
        return Ok(f64::INFINITY);
    }
    let lead = if k == 0 { 0.0 } else { k as f64 * (pk.ln() - pb.ln()) };
    Ok(lead - log_z(pk)? + log_z(pb)?)
}

/// `H(r₁)` with central counts `r̄ = ⌈r/2⌉` on `Λ₁` and `r − r̄` on `Λ₂`.
pub fn h_function(rf: &RateFamily, law: &BoundaryCountLaw) -> Result<Vec<f64>> {
    let r = law.r;
    let r_bar = r.div_ceil(2);
    let rf1 = rf.restrict(&law.lambda1)?;
    let rf2 = rf.restrict(&law.lambda2)?;
    (0..=r)
        .map(|r1| Ok(half_term(&rf1, r1, r_bar)? + half_term(&rf2, r - r1, r - r_bar)?))
        .collect()
}

pub fn modified_measure(rf: &RateFamily, law: &BoundaryCountLaw, epsilon: f64) -> Result<ModifiedMeasure> {
    if !(epsilon > 0.0 && epsilon < 0.25) {
        return Err(ZrpError::InvalidArgument(format!("epsilon must lie in (0, 1/4), got {epsilon}")));
    }
    let r = law.r;
    if r < 4 {
        return Err(ZrpError::InvalidArgument(format!("modified measure needs r >= 4, got {r}")));
    }
    let r_bar = r.div_ceil(2);
    let lo = (epsilon * r as f64).ceil() as usize;
    let hi = ((1.0 - epsilon) * r as f64).floor() as usize;
    let h_vals = h_function(rf, law)?;
    if let Some(k) = (lo..=hi).find(|&k| !h_vals[k].is_finite()) {
        return Err(ZrpError::InvalidArgument(format!("H({k}) is not finite")));
    }
    let g = &law.gamma1;
    // Z = Σ_I e^{−H} / Σ_I γ₁, kept in log space
    let hmin = (lo..=hi).map(|k| h_vals[k]).fold(f64::INFINITY, f64::min);
    let s_h: f64 = (lo..=hi).map(|k| (hmin - h_vals[k]).exp()).sum();
    let s_g: f64 = g[lo..=hi].iter().sum();
    if !(s_g > 0.0) {
        return Err(ZrpError::ZeroMass(lo));
    }
    let log_z = -hmin + s_h.ln() - s_g.ln();
    let gamma1_eps: Vec<f64> = (0..=r)
        .map(|k| if (lo..=hi).contains(&k) { (-h_vals[k] - log_z).exp() } else { g[k] })
        .collect();
    let ratios = gamma1_eps.iter().zip(g).filter(|(_, &b)| b > 0.0).map(|(a, b)| a / b);
    let ratio_min = ratios.clone().fold(f64::INFINITY, f64::min);
    let ratio_max = ratios.fold(0.0, f64::max);
    Ok(ModifiedMeasure {
        epsilon,
        r_bar,
        window: (lo, hi),
        h_vals,
        z_norm: log_z.exp(),
        gamma1_eps,
        ratio_min,
        ratio_max,
    })
}
