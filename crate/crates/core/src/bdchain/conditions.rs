//! Hypothesis checks for birth–death gap and log-Sobolev criteria.

use serde::{Deserialize, Serialize};

use super::chain::BirthDeathChain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BdGapConditions {
    pub j0: f64,
    pub j1: f64,
    pub j2: f64,
    pub d_star: f64,
    pub admissible: bool,
}

/// `J2 = max_k |b(k+1) − b(k)|`; `J1` is the chord slope of `d` over
/// `{1..r}` and `J0` the smallest offset with `d(k) − d(j) ≥ J1(k−j) − J0`
/// for all `k > j ≥ 1`. Admissible when `J1 > J2` and `d* > 0`.
pub fn check_gap_conditions(chain: &BirthDeathChain) -> BdGapConditions {
    let r = chain.r();
    let b = &chain.birth;
    let d = &chain.death;
    let j2 = b.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
    let j1 = if r >= 2 { (d[r - 1] - d[0]) / (r - 1) as f64 } else { d.first().copied().unwrap_or(0.0) };
    let mut j0 = 0.0f64;
    for k in 0..r {
        for j in 0..k {
            j0 = j0.max(j1 * (k - j) as f64 - (d[k] - d[j]));
        }
    }
    let d_star = d.iter().copied().fold(f64::INFINITY, f64::min);
    BdGapConditions {
        j0,
        j1,
        j2,
        d_star,
        admissible: j1 > j2 && d_star > 0.0,
    }
}

/// Smallest `C` with `C⁻¹ q ≤ γ(k−1)/γ(k) ≤ C q`, `q = k/(r−k+1)`, over
/// `k = 1..=r`. Infinite if `γ` has a zero.
pub fn gamma_ratio_constant(gamma: &[f64]) -> f64 {
    let r = gamma.len() - 1;
    (1..=r)
        .map(|k| {
            let ratio = gamma[k - 1] / gamma[k];
            let q = k as f64 / (r - k + 1) as f64;
            if !(ratio > 0.0) || !ratio.is_finite() {
                f64::INFINITY
            } else {
                (ratio / q).max(q / ratio)
            }
        })
        .fold(1.0, f64::max)
}

/// Default `A0` grid: `1.25^k` up to 64, with 64 itself included.
pub fn default_a0_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..).map(|k| 1.25f64.powi(k)).take_while(|&a| a < 64.0).collect();
    g.push(64.0);
    g
}

/// Log-scale margins of each condition; a condition holds iff its margin
/// is nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicloMargins {
    pub balance: f64,
    /// ratio decay above `r̄`
    pub decay_above: f64,
    /// ratio decay below `r̄`
    pub decay_below: f64,
    pub gauss_lower: f64,
    pub gauss_upper: f64,
}

impl MicloMargins {
    pub fn min(&self) -> f64 {
        [self.balance, self.decay_above, self.decay_below, self.gauss_lower, self.gauss_upper]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicloResult {
    /// smallest passing grid value
    pub a0_min: Option<f64>,
    pub r_bar: usize,
    /// margins at the passing point, or at the best point of the largest
    /// grid value on failure
    pub margins: MicloMargins,
}

/// Margins for a fixed `(A0, r̄)`:
/// - balance `A0⁻¹ r̄ ≤ r − r̄ ≤ A0 r̄`;
/// - `γ(k+1)/γ(k) ≤ exp(−(k−r̄)/(A0 r̄))` for `r̄ < k < r`;
/// - `γ(k−1)/γ(k) ≤ exp(−(r̄−k)/(A0 r̄))` for `0 < k < r̄`;
/// - `exp(−A0 (k−r̄)²/r̄)/(A0√r̄) ≤ γ(k) ≤ A0 exp(−(k−r̄)²/(A0 r̄))/√r̄` for all `k`.
pub fn miclo_margins(gamma: &[f64], a0: f64, r_bar: usize) -> MicloMargins {
    let r = gamma.len() - 1;
    let rb = r_bar as f64;
    let rest = (r - r_bar) as f64;
    let balance = (rest - rb / a0).min(a0 * rb - rest);
    let lg: Vec<f64> = gamma.iter().map(|g| g.ln()).collect();
    let mut decay_above = f64::INFINITY;
    for k in r_bar + 1..r {
        let bound = -((k - r_bar) as f64) / (a0 * rb);
        decay_above = decay_above.min(bound - (lg[k + 1] - lg[k]));
    }
    let mut decay_below = f64::INFINITY;
    for k in 1..r_bar {
        let bound = -((r_bar - k) as f64) / (a0 * rb);
        decay_below = decay_below.min(bound - (lg[k - 1] - lg[k]));
    }
    let mut gauss_lower = f64::INFINITY;
    let mut gauss_upper = f64::INFINITY;
    for (k, &l) in lg.iter().enumerate() {
        let z2 = (k as f64 - rb).powi(2);
        let lower = -a0 * z2 / rb - a0.ln() - 0.5 * rb.ln();
        let upper = -z2 / (a0 * rb) + a0.ln() - 0.5 * rb.ln();
        gauss_lower = gauss_lower.min(l - lower);
        gauss_upper = gauss_upper.min(upper - l);
    }
    let fix = |m: f64| if m.is_nan() { f64::NEG_INFINITY } else { m };
    MicloMargins {
        balance,
        decay_above: fix(decay_above),
        decay_below: fix(decay_below),
        gauss_lower: fix(gauss_lower),
        gauss_upper: fix(gauss_upper),
    }
}

/// Scan `grid` in increasing order for the first `A0` admitting some
/// `r̄ ∈ {1..r−1}` with all margins nonnegative.
pub fn miclo_check(gamma: &[f64], grid: &[f64]) -> MicloResult {
    let r = gamma.len().saturating_sub(1);
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let mut fallback = None;
    for &a0 in &grid {
        let best = (1..r)
            .map(|rb| (rb, miclo_margins(gamma, a0, rb)))
            .max_by(|a, b| a.1.min().total_cmp(&b.1.min()));
        let Some((r_bar, margins)) = best else { break };
        if margins.min() >= 0.0 {
            return MicloResult {
                a0_min: Some(a0),
                r_bar,
                margins,
            };
        }
        fallback = Some((r_bar, margins));
    }
    let (r_bar, margins) = fallback.unwrap_or((
        0,
        MicloMargins {
            balance: f64::NEG_INFINITY,
            decay_above: f64::NEG_INFINITY,
            decay_below: f64::NEG_INFINITY,
            gauss_lower: f64::NEG_INFINITY,
            gauss_upper: f64::NEG_INFINITY,
        },
    ));
    MicloResult {
        a0_min: None,
        r_bar,
        margins,
    }
}
