//! Two-colour bookkeeping: colour rates, the rate family seen by one colour
//! when the other is frozen, and the colour-blind projection check.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZrpError};
use crate::lattice::Cube;
use crate::model::{CanonicalEnsemble, RateFamily, SiteRate};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColourState {
    pub eta1: Vec<u32>,
    pub eta2: Vec<u32>,
}

impl ColourState {
    pub fn new(eta1: Vec<u32>, eta2: Vec<u32>) -> Result<Self> {
        if eta1.len() != eta2.len() {
            return Err(ZrpError::InvalidInitial(format!(
                "colour vectors of lengths {} and {}",
                eta1.len(),
                eta2.len()
            )));
        }
        Ok(ColourState { eta1, eta2 })
    }

    pub fn blind(&self) -> Vec<u32> {
        self.eta1.iter().zip(&self.eta2).map(|(a, b)| a + b).collect()
    }
}

/// `(c¹, c²)` with `c¹(k1, k2) = k1·c(k1+k2)/(k1+k2)` and `c² = c − c¹`.
pub fn colour_rates(c: &SiteRate, k1: usize, k2: usize) -> (f64, f64) {
    let k = k1 + k2;
    if k == 0 {
        return (0.0, 0.0);
    }
    let total = c.eval(k);
    let c1 = if k1 == 0 { 0.0 } else { k1 as f64 * total / k as f64 };
    (c1, total - c1)
}

/// Rates `c̃_x(k) = k·c(k + η₂(x))/(k + η₂(x))` of the first colour given the
/// second colour frozen at `eta2`.
pub fn conditioned_rate_family(c: &SiteRate, eta2: &[u32]) -> Result<RateFamily> {
    RateFamily::new(
        eta2.iter()
            .map(|&s| {
                if s == 0 {
                    c.clone()
                } else {
                    SiteRate::Conditioned {
                        base: Box::new(c.clone()),
                        shift: s as usize,
                    }
                }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColourBlindCheck {
    pub colour_states: usize,
    pub blind_states: usize,
    /// `max |(L^colour P)(s, j) − (P L)(s, j)|`
    pub max_abs_err: f64,
}

/// Compare the two-colour generator applied to colour-blind functions with
/// the one-colour generator on the projected state, entrywise.
pub fn colour_blind_check(rf: &RateFamily, cube: &Cube, k1: usize, k2: usize) -> Result<ColourBlindCheck> {
    let e1 = CanonicalEnsemble::new(rf, cube, k1)?;
    let e2 = CanonicalEnsemble::new(rf, cube, k2)?;
    let blind = CanonicalEnsemble::new(rf, cube, k1 + k2)?;
    let edges = cube.ordered_edges();
    let m = blind.len();
    let mut worst = 0.0f64;
    let mut count = 0;
    for a in e1.states() {
        for b in e2.states() {
            count += 1;
            let s: Vec<u32> = a.iter().zip(b).map(|(p, q)| p + q).collect();
            let i = blind.rank(&s).expect("projection lies in the ensemble");
            // row of L^colour P
            let mut lhs = vec![0.0; m];
            for &(x, y) in &edges {
                let (c1, c2) = colour_rates(rf.site_rate(x), a[x] as usize, b[x] as usize);
                let mut t = s.clone();
                if t[x] == 0 {
                    continue;
                }
                t[x] -= 1;
                t[y] += 1;
                let j = blind.rank(&t).unwrap();
                for c in [c1, c2] {
                    lhs[j] += 0.5 * c;
                    lhs[i] -= 0.5 * c;
                }
            }
            // row of P L
            let mut rhs = vec![0.0; m];
            for &(x, y) in &edges {
                if s[x] == 0 {
                    continue;
                }
                let c = rf.rate(x, s[x] as usize);
                let mut t = s.clone();
                t[x] -= 1;
                t[y] += 1;
                rhs[blind.rank(&t).unwrap()] += 0.5 * c;
                rhs[i] -= 0.5 * c;
            }
            for (l, r) in lhs.iter().zip(&rhs) {
                worst = worst.max((l - r).abs());
            }
        }
    }
    Ok(ColourBlindCheck {
        colour_states: count,
        blind_states: m,
        max_abs_err: worst,
    })
}
