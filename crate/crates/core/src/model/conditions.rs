//! Checks of the standing hypotheses on the rates: Lipschitz growth (LG),
//! weak monotonicity (M), the linear envelope, and sampled statistics for
//! the local-limit condition (E).

use serde::{Deserialize, Serialize};

use super::grand::{all_marginals, phi_of_rho, DEFAULT_EPS_TRUNC};
use super::rates::RateFamily;
use crate::error::{Result, ZrpError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionFlags {
    pub lg: bool,
    pub m: bool,
    pub e: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub a1: f64,
    pub k0: usize,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
    /// Domination threshold coefficient `(a1/a2)·k0·(k0+1) + k0 + 1`.
    pub b: f64,
    pub e_inf: f64,
    pub e_sup: f64,
    pub satisfied: ConditionFlags,
}

pub fn domination_threshold(a1: f64, a2: f64, k0: usize) -> f64 {
    let k = k0 as f64;
    a1 / a2 * k * (k + 1.0) + k + 1.0
}

/// `sup_{k,x} |c_x(k+1) − c_x(k)|`.
pub fn lipschitz_constant(rf: &RateFamily) -> f64 {
    rf.rates()
        .iter()
        .map(|r| {
            (0..r.scan_limit())
                .map(|k| (r.eval(k + 1) - r.eval(k)).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `inf_{k,x} c_x(k+k0) − c_x(k)`.
pub fn monotonicity_gap(rf: &RateFamily, k0: usize) -> f64 {
    rf.rates()
        .iter()
        .map(|r| {
            (0..r.scan_limit() + k0)
                .map(|k| r.eval(k + k0) - r.eval(k))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
}

/// `√r · μ_{Λ,φ(r/|Λ|)}(R = r)` on a lattice of `size` sites whose rates
/// cycle through the sites of `rf`.
pub fn local_limit_statistic(rf: &RateFamily, size: usize, r: usize) -> Result<f64> {
    if size < 2 || r == 0 {
        return Err(ZrpError::DegenerateSample(format!(
            "need |Λ| >= 2 and r >= 1, got ({size}, {r})"
        )));
    }
    let sub = if size == rf.num_sites() {
        rf.clone()
    } else {
        let idx: Vec<usize> = (0..size).map(|i| i % rf.num_sites()).collect();
        rf.restrict(&idx)?
    };
    let phi = phi_of_rho(&sub, r as f64 / size as f64)?;
    let margs = all_marginals(&sub, phi, DEFAULT_EPS_TRUNC)?;
    let pmf = convolve_upto(margs.iter().map(|m| m.pmf.as_slice()), r);
    Ok((r as f64).sqrt() * pmf[r])
}

/// Law of the sum of independent variables, truncated to `0..=kmax`.
pub fn convolve_upto<'a>(pmfs: impl Iterator<Item = &'a [f64]>, kmax: usize) -> Vec<f64> {
    let mut acc = vec![0.0; kmax + 1];
    acc[0] = 1.0;
    for p in pmfs {
        let mut next = vec![0.0; kmax + 1];
        for (i, &a) in acc.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in p.iter().enumerate().take(kmax + 1 - i) {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    acc
}

/// Compute the condition constants. Among the valid `k0 <= k0_max`, the one
/// minimising the domination threshold `B` is reported.
pub fn verify_conditions(rf: &RateFamily, k0_max: usize, e_sample: &[(usize, usize)]) -> Result<ConditionReport> {
    if e_sample.is_empty() {
        return Err(ZrpError::DegenerateSample("empty (|Λ|, r) sample".into()));
    }
    let a1 = lipschitz_constant(rf);
    let mut best: Option<(usize, f64, f64)> = None;
    for k0 in 1..=k0_max {
        let a2 = monotonicity_gap(rf, k0);
        if a2 > 0.0 {
            let b = domination_threshold(a1, a2, k0);
            if best.is_none_or(|(_, _, bb)| b < bb) {
                best = Some((k0, a2, b));
            }
        }
    }
    let (k0, a2, b) = best.ok_or(ZrpError::MNotSatisfied { k0_max })?;
    let (c1, c2) = rf.envelope();

    let mut e_inf = f64::INFINITY;
    let mut e_sup = f64::NEG_INFINITY;
    for &(size, r) in e_sample {
        let v = local_limit_statistic(rf, size, r)?;
        e_inf = e_inf.min(v);
        e_sup = e_sup.max(v);
    }

    Ok(ConditionReport {
        a1,
        k0,
        a2,
        c1,
        c2,
        b,
        e_inf,
        e_sup,
        satisfied: ConditionFlags {
            lg: a1.is_finite(),
            m: true,
            e: e_inf > 0.0 && e_sup.is_finite(),
        },
    })
}
