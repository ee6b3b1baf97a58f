//! Birth–death chains on `{0, …, r}`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZrpError};
use crate::spectral::eigen::{spectral_gap, GapResult};
use crate::spectral::generator::GeneratorMatrix;
use crate::spectral::optimize::{estimate_constant, Budget, ConstantEstimate, ConstantKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirthDeathChain {
    /// `b(k)` for `k = 0..r`
    pub birth: Vec<f64>,
    /// `d(k)` for `k = 1..=r`, stored at index `k − 1`
    pub death: Vec<f64>,
    pub stationary: Vec<f64>,
}

impl BirthDeathChain {
    pub fn new(birth: Vec<f64>, death: Vec<f64>) -> Result<Self> {
        if birth.len() != death.len() {
            return Err(ZrpError::InvalidArgument(format!(
                "{} birth rates but {} death rates",
                birth.len(),
                death.len()
            )));
        }
        for (k, (&b, &d)) in birth.iter().zip(&death).enumerate() {
            if !(b > 0.0 && d > 0.0) || !b.is_finite() || !d.is_finite() {
                return Err(ZrpError::InvalidArgument(format!(
                    "rates must be positive: b({k}) = {b}, d({}) = {d}",
                    k + 1
                )));
            }
        }
        let mut logp = vec![0.0; birth.len() + 1];
        for k in 0..birth.len() {
            logp[k + 1] = logp[k] + birth[k].ln() - death[k].ln();
        }
        let top = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logp.iter().map(|l| (l - top).exp()).sum();
        let stationary = logp.iter().map(|l| (l - top).exp() / z).collect();
        Ok(BirthDeathChain {
            birth,
            death,
            stationary,
        })
    }

    /// Top state `r`.
    pub fn r(&self) -> usize {
        self.birth.len()
    }

    pub fn d(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.death[k - 1]
        }
    }

    pub fn b(&self, k: usize) -> f64 {
        self.birth.get(k).copied().unwrap_or(0.0)
    }

    /// `max_k |π(k) b(k) − π(k+1) d(k+1)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        (0..self.r())
            .map(|k| (self.stationary[k] * self.birth[k] - self.stationary[k + 1] * self.death[k]).abs())
            .fold(0.0, f64::max)
    }

    pub fn generator(&self) -> Result<GeneratorMatrix> {
        let r = self.r();
        let rows = (0..=r)
            .map(|k| {
                let mut row = Vec::new();
                if k > 0 {
                    row.push((k - 1, self.death[k - 1]));
                }
                if k < r {
                    row.push((k + 1, self.birth[k]));
                }
                row
            })
            .collect();
        GeneratorMatrix::from_rows(rows, self.stationary.clone(), None)
    }

    pub fn gap(&self) -> Result<GapResult> {
        spectral_gap(&self.generator()?)
    }

    pub fn log_sobolev(&self, budget: Budget, seed: u64) -> Result<ConstantEstimate> {
        estimate_constant(&self.generator()?, ConstantKind::LogSobolev, budget, seed)
    }
}
