//! Empirical relaxation rate from replica autocovariances.
//!
//! With `η_0 ~ ν` and reversibility, `Var_ν[P_t f] = Cov(f(η_0), f(η_{2t}))`,
//! so one forward run per replica yields the whole variance curve.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sim::{multinomial_placement, simulate_streams, stream_rng, Dynamics, Initial, SimConfig};
use crate::error::{Result, ZrpError};
use crate::lattice::Cube;
use crate::model::{CanonicalEnsemble, RateFamily};
use crate::spectral::{build_generator, spectral_gap, Topology, DENSE_LIMIT};

pub const MIN_REPLICAS: usize = 100;
const JACKKNIFE_GROUPS: usize = 20;
/// a covariance point is usable while it exceeds this many standard errors
const NOISE_SIGMAS: f64 = 3.0;
/// stop the fit after this many e-foldings of the variance
const MAX_EFOLDINGS: f64 = 2.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayConfig {
    pub replicas: usize,
    /// horizon in `t`; runs last `2t`
    pub t_max: f64,
    /// sampling step in `t`
    pub sample_dt: f64,
    pub seed: u64,
    pub topology: Topology,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    /// replica mean of `f(η_{2t})`
    pub mean: f64,
    /// estimate of `Var_ν[P_t f]`
    pub var: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub lambda_hat: f64,
    pub stderr: f64,
    pub fit_points: usize,
    pub series: Vec<SeriesRow>,
}

/// Sampling step `0.1/gap` when the chain is small enough to diagonalize.
pub fn default_sample_dt(rf: &RateFamily, cube: &Cube, r: usize, topology: Topology) -> Result<f64> {
    let ens = CanonicalEnsemble::new(rf, cube, r)?;
    if ens.len() < 2 || ens.len() > DENSE_LIMIT {
        return Err(ZrpError::InvalidArgument("no gap estimate for this chain; pass a sample step".into()));
    }
    let gen = build_generator(&ens, rf, topology)?;
    Ok(0.1 / spectral_gap(&gen)?.gap)
}

fn cov_series(f0: &[f64], ft: &[Vec<f64>], idx: &[usize]) -> Vec<f64> {
    let n = idx.len() as f64;
    let m0 = idx.iter().map(|&i| f0[i]).sum::<f64>() / n;
    ft.iter()
        .map(|col| {
            let mt = idx.iter().map(|&i| col[i]).sum::<f64>() / n;
            idx.iter().map(|&i| (f0[i] - m0) * (col[i] - mt)).sum::<f64>() / n
        })
        .collect()
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Regress `log Var[P_t f]` on `t`; `lambda_hat` is minus the slope and the
/// standard error comes from a grouped jackknife over replicas.
pub fn estimate_decay<F>(rf: &RateFamily, cube: &Cube, r: usize, f: F, cfg: &DecayConfig) -> Result<DecayEstimate>
where
    F: Fn(&[u32]) -> f64 + Sync,
{
    if cfg.replicas < MIN_REPLICAS {
        return Err(ZrpError::InvalidArgument(format!(
            "at least {MIN_REPLICAS} replicas required, got {}",
            cfg.replicas
        )));
    }
    let dynamics = match cfg.topology {
        Topology::NearestNeighbour => Dynamics::NearestNeighbour,
        Topology::CompleteGraph => Dynamics::CompleteGraph,
    };
    // exact draws from ν when enumerable, otherwise burn-in from a
    // multinomial start for 10·side² time units
    let ens = CanonicalEnsemble::new(rf, cube, r).ok();
    let cdf: Option<Vec<f64>> = ens.as_ref().map(|e| {
        e.nu.iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    });
    let burn_in = 10.0 * (cube.side * cube.side) as f64;
    let sim_cfg = SimConfig {
        dynamics,
        t_max: 2.0 * cfg.t_max,
        sample_dt: 2.0 * cfg.sample_dt,
        seed: cfg.seed,
        max_events: None,
    };

    let paths: Vec<Vec<f64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let stream = 2 * i as u64 + 1;
            let mut init_rng = stream_rng(cfg.seed, 4 * cfg.replicas as u64 + i as u64);
            let start = match (&ens, &cdf) {
                (Some(e), Some(c)) => {
                    let u = init_rng.random::<f64>() * c[c.len() - 1];
                    let k = c.partition_point(|&v| v <= u).min(c.len() - 1);
                    e.state(k).to_vec()
                }
                _ => {
                    let eta = multinomial_placement(cube.num_sites(), r, &mut init_rng);
                    let warm = SimConfig {
                        t_max: burn_in,
                        sample_dt: burn_in,
                        ..sim_cfg.clone()
                    };
                    let tr = simulate_streams(rf, cube, &Initial::Config(eta), &warm, stream + 1)?;
                    tr.samples.last().unwrap().clone()
                }
            };
            let tr = simulate_streams(rf, cube, &Initial::Config(start), &sim_cfg, stream)?;
            Ok(tr.samples.iter().map(|s| f(s)).collect())
        })
        .collect::<Result<_>>()?;

    let n_t = paths[0].len();
    let f0: Vec<f64> = paths.iter().map(|p| p[0]).collect();
    let ft: Vec<Vec<f64>> = (0..n_t).map(|k| paths.iter().map(|p| p[k]).collect()).collect();
    let all: Vec<usize> = (0..cfg.replicas).collect();
    let cov = cov_series(&f0, &ft, &all);
    let n = cfg.replicas as f64;
    let series: Vec<SeriesRow> = (0..n_t)
        .map(|k| SeriesRow {
            t: k as f64 * cfg.sample_dt,
            mean: ft[k].iter().sum::<f64>() / n,
            var: cov[k],
            n: cfg.replicas,
        })
        .collect();

    if !(cov[0] > 1e-12 * (1.0 + f0.iter().map(|v| v * v).sum::<f64>() / n)) {
        return Err(ZrpError::InsufficientSignal("observable has no variance under the sampled law".into()));
    }
    // contiguous window above the noise floor
    let m0 = f0.iter().sum::<f64>() / n;
    let mut window = 0;
    for k in 0..n_t {
        let mt = series[k].mean;
        let prods: Vec<f64> = (0..cfg.replicas).map(|i| (f0[i] - m0) * (ft[k][i] - mt)).collect();
        let sd = (prods.iter().map(|p| (p - cov[k]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        if cov[k] <= NOISE_SIGMAS * sd / n.sqrt() || (cov[0] / cov[k]).ln() > MAX_EFOLDINGS {
            break;
        }
        window = k + 1;
    }
    if window < 3 {
        return Err(ZrpError::InsufficientSignal(format!(
            "only {window} sample times above the noise floor"
        )));
    }
    let ts: Vec<f64> = series[..window].iter().map(|s| s.t).collect();
    let fit = |c: &[f64]| -> f64 {
        let ys: Vec<f64> = c[..window].iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
        -slope(&ts, &ys)
    };
    let lambda_hat = fit(&cov);

    let g = JACKKNIFE_GROUPS;
    let loo: Vec<f64> = (0..g)
        .map(|j| {
            let idx: Vec<usize> = (0..cfg.replicas).filter(|i| i % g != j).collect();
            fit(&cov_series(&f0, &ft, &idx))
        })
        .collect();
    let mean_loo = loo.iter().sum::<f64>() / g as f64;
    let stderr = ((g as f64 - 1.0) / g as f64 * loo.iter().map(|v| (v - mean_loo).powi(2)).sum::<f64>()).sqrt();

    Ok(DecayEstimate {
        lambda_hat,
        stderr,
        fit_points: window,
        series,
    })
}
