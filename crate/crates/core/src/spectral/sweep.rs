//! Constants across lattice sizes and their fitted power-law exponent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eigen::spectral_gap;
use super::generator::{build_generator, Topology};
use super::optimize::{estimate_constant, Budget, ConstantKind};
use crate::error::{Result, ZrpError};
use crate::lattice::Cube;
use crate::model::{CanonicalEnsemble, RateFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepKind {
    Gap,
    LogSobolev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub r: usize,
    pub constant: f64,
    pub log_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub kind: SweepKind,
    pub dim: usize,
    pub rows: Vec<SweepRow>,
    /// least-squares slope of log(constant) against log(N)
    pub slope: f64,
    pub intercept: f64,
}

/// Ordinary least squares `y ≈ a + b x`, returning `(b, a)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(ZrpError::FitUnderdetermined(n));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(ZrpError::FitUnderdetermined(1));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Ok((b, my - b * mx))
}

pub struct SweepConfig {
    pub dim: usize,
    pub sides: Vec<usize>,
    pub kind: SweepKind,
    pub topology: Topology,
    pub budget: Budget,
    pub seed: u64,
}

/// `C_SG` or `Ĉ_LS` for each side `N` with `r = r_rule(N)`, in parallel.
pub fn scaling_sweep<F, R>(rates: F, r_rule: R, cfg: &SweepConfig) -> Result<SweepResult>
where
    F: Fn(&Cube) -> Result<RateFamily> + Sync,
    R: Fn(usize) -> usize + Sync,
{
    if cfg.sides.len() < 2 {
        return Err(ZrpError::FitUnderdetermined(cfg.sides.len()));
    }
    let rows: Vec<SweepRow> = cfg
        .sides
        .par_iter()
        .map(|&n| {
            let cube = Cube::new(cfg.dim, n)?;
            let rf = rates(&cube)?;
            let r = r_rule(n);
            let ens = CanonicalEnsemble::new(&rf, &cube, r)?;
            let gen = build_generator(&ens, &rf, cfg.topology)?;
            let constant = match cfg.kind {
                SweepKind::Gap => spectral_gap(&gen)?.c_sg,
                SweepKind::LogSobolev => {
                    estimate_constant(&gen, ConstantKind::LogSobolev, cfg.budget, cfg.seed ^ n as u64)?.value
                }
            };
            Ok(SweepRow {
                n,
                r,
                constant,
                log_constant: constant.ln(),
            })
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log_constant).collect();
    let (slope, intercept) = fit_line(&xs, &ys)?;
    Ok(SweepResult {
        kind: cfg.kind,
        dim: cfg.dim,
        rows,
        slope,
        intercept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sides: Vec<usize>) -> SweepConfig {
        SweepConfig {
            dim: 1,
            sides,
            kind: SweepKind::Gap,
            topology: Topology::NearestNeighbour,
            budget: Budget::default(),
            seed: 0,
        }
    }

    #[test]
    fn linear_gap_exponent() {
        let res = scaling_sweep(|c| RateFamily::preset("linear", c), |n| n, &cfg((2..=8).collect())).unwrap();
        for row in &res.rows {
            let exact = 1.0 / (1.0 - (std::f64::consts::PI / row.n as f64).cos());
            assert!((row.constant - exact).abs() < 1e-8 * exact);
        }
        assert!((res.slope - 2.0).abs() < 0.2, "slope {}", res.slope);
    }

    #[test]
    fn alternating_gap_exponent() {
        let res =
            scaling_sweep(|c| RateFamily::preset("alternating:1,2", c), |n| n, &cfg((2..=6).collect())).unwrap();
        assert!((1.6..=2.4).contains(&res.slope), "slope {}", res.slope);
    }

    #[test]
    fn single_side_is_underdetermined() {
        let err = scaling_sweep(|c| RateFamily::preset("linear", c), |n| n, &cfg(vec![4])).unwrap_err();
        assert_eq!(err, ZrpError::FitUnderdetermined(1));
    }

    #[test]
    fn exact_line() {
        let (b, a) = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((b - 2.0).abs() < 1e-14 && (a - 1.0).abs() < 1e-14);
    }
}
