//! The Rothaus inequality `H(f) ≤ H(f̃) + 2 Var(√f)` with
//! `f̃ = (√f − ν[√f])²`.

use serde::{Deserialize, Serialize};

use super::functionals::{entropy, mean, variance};
use crate::error::Result;

const SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RothausCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn rothaus_check(nu: &[f64], f: &[f64]) -> Result<RothausCheck> {
    let lhs = entropy(nu, f)?;
    let s: Vec<f64> = f.iter().map(|v| v.sqrt()).collect();
    let m = mean(nu, &s);
    let ft: Vec<f64> = s.iter().map(|v| (v - m) * (v - m)).collect();
    let rhs = entropy(nu, &ft)? + 2.0 * variance(nu, &s);
    Ok(RothausCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + SLACK,
    })
}
