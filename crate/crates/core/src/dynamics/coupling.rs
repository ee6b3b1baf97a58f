//! Order-preserving coupling of the complete-graph dynamics with `r` and
//! `r + M` particles.
//!
//! Each ordered pair `(x, y)` moves both components together at rate
//! `min(c_x(η_x), c_x(ξ_x))`. Excess `ξ` jumps never break the order. An excess
//! `η` jump into a site where `η_y = ξ_y` is paired with an excess `ξ` jump
//! into the same site, which is possible while the total excess `ξ` rate
//! dominates the total excess `η` rate; any unmatched remainder is a
//! violation event and ends the run.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sim::{exp_time, multinomial_placement, stream_rng};
use crate::error::{Result, ZrpError};
use crate::model::RateFamily;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub m: usize,
    pub t_max: f64,
    pub max_events: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingResult {
    pub order_preserved: bool,
    pub violation_time: Option<f64>,
    pub events: usize,
    pub t_end: f64,
    /// time-averaged occupations of each component
    pub eta_occupation: Vec<f64>,
    pub xi_occupation: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Eta(usize, usize),
    Xi(usize, usize),
    Both(usize, usize),
    /// η from `.0` and ξ from `.1`, both into `.2`
    Matched(usize, usize, usize),
    Violation(usize, usize),
}

/// Start from `η` with `r` particles placed uniformly and `ξ = η` plus `M`
/// more uniformly placed particles.
pub fn coupled_order_sim(rf: &RateFamily, r: usize, cfg: &CouplingConfig) -> Result<CouplingResult> {
    let n = rf.num_sites();
    let mut rng = stream_rng(cfg.seed, 1);
    let eta = multinomial_placement(n, r, &mut rng);
    let extra = multinomial_placement(n, cfg.m, &mut rng);
    let xi = eta.iter().zip(&extra).map(|(a, b)| a + b).collect();
    coupled_order_sim_from(rf, eta, xi, cfg)
}

pub fn coupled_order_sim_from(rf: &RateFamily, mut eta: Vec<u32>, mut xi: Vec<u32>, cfg: &CouplingConfig) -> Result<CouplingResult> {
    let n = rf.num_sites();
    if cfg.m == 0 {
        return Err(ZrpError::InvalidArgument("M must be at least 1".into()));
    }
    if eta.len() != n || xi.len() != n {
        return Err(ZrpError::InvalidInitial(format!("{n} sites expected")));
    }
    if eta.iter().zip(&xi).any(|(a, b)| a > b) {
        return Err(ZrpError::InvalidInitial("initial pair is not ordered (η ≤ ξ fails)".into()));
    }
    let (re, rx) = (eta.iter().sum::<u32>(), xi.iter().sum::<u32>());
    if rx != re + cfg.m as u32 {
        return Err(ZrpError::InvalidInitial(format!("ξ has {rx} particles, expected {}", re as usize + cfg.m)));
    }
    if n < 2 {
        return Err(ZrpError::InvalidArgument("coupling needs at least two sites".into()));
    }
    let mut rng = stream_rng(cfg.seed, 0);
    let mut t = 0.0;
    let mut events = 0;
    let mut occ_e = vec![0.0; n];
    let mut occ_x = vec![0.0; n];
    let mut violation = None;
    let mut moves: Vec<(f64, Move)> = Vec::new();

    while events < cfg.max_events {
        moves.clear();
        let a: Vec<f64> = (0..n).map(|x| if eta[x] > 0 { rf.rate(x, eta[x] as usize) } else { 0.0 }).collect();
        let b: Vec<f64> = (0..n).map(|x| if xi[x] > 0 { rf.rate(x, xi[x] as usize) } else { 0.0 }).collect();
        let e: Vec<f64> = (0..n).map(|x| (a[x] - b[x]).max(0.0)).collect();
        let f: Vec<f64> = (0..n).map(|x| (b[x] - a[x]).max(0.0)).collect();
        for y in 0..n {
            let tight = eta[y] == xi[y];
            let e_tot: f64 = (0..n).filter(|&x| x != y).map(|x| e[x]).sum();
            let f_tot: f64 = (0..n).filter(|&x| x != y).map(|x| f[x]).sum();
            for x in (0..n).filter(|&x| x != y) {
                let joint = a[x].min(b[x]);
                if joint > 0.0 {
                    moves.push((joint, Move::Both(x, y)));
                }
                if !tight {
                    if e[x] > 0.0 {
                        moves.push((e[x], Move::Eta(x, y)));
                    }
                    if f[x] > 0.0 {
                        moves.push((f[x], Move::Xi(x, y)));
                    }
                    continue;
                }
                // y is tight: pair η excess with ξ excess into y
                let denom = e_tot.max(f_tot);
                if e[x] > 0.0 {
                    for z in (0..n).filter(|&z| z != y && f[z] > 0.0) {
                        moves.push((e[x] * f[z] / denom, Move::Matched(x, z, y)));
                    }
                    if e_tot > f_tot {
                        moves.push((e[x] * (1.0 - f_tot / e_tot), Move::Violation(x, y)));
                    }
                }
                if f[x] > 0.0 && f_tot > e_tot {
                    moves.push((f[x] * (1.0 - e_tot / f_tot), Move::Xi(x, y)));
                }
            }
        }
        let total: f64 = moves.iter().map(|m| m.0).sum();
        let dt = if total > 0.0 { exp_time(total, &mut rng) } else { f64::INFINITY };
        let t_next = (t + dt).min(cfg.t_max);
        for x in 0..n {
            occ_e[x] += eta[x] as f64 * (t_next - t);
            occ_x[x] += xi[x] as f64 * (t_next - t);
        }
        t = t_next;
        if t >= cfg.t_max {
            break;
        }
        let mut u = rng.random::<f64>() * total;
        let mut pick = moves[moves.len() - 1].1;
        for &(w, mv) in &moves {
            if u < w {
                pick = mv;
                break;
            }
            u -= w;
        }
        events += 1;
        match pick {
            Move::Eta(x, y) => {
                eta[x] -= 1;
                eta[y] += 1;
            }
            Move::Xi(x, y) => {
                xi[x] -= 1;
                xi[y] += 1;
            }
            Move::Both(x, y) => {
                eta[x] -= 1;
                eta[y] += 1;
                xi[x] -= 1;
                xi[y] += 1;
            }
            Move::Matched(x, z, y) => {
                eta[x] -= 1;
                xi[z] -= 1;
                eta[y] += 1;
                xi[y] += 1;
            }
            Move::Violation(x, y) => {
                eta[x] -= 1;
                eta[y] += 1;
                violation = Some(t);
                break;
            }
        }
        debug_assert!(eta.iter().zip(&xi).all(|(a, b)| a <= b));
    }
    if t > 0.0 {
        occ_e.iter_mut().chain(occ_x.iter_mut()).for_each(|v| *v /= t);
    }
    Ok(CouplingResult {
        order_preserved: violation.is_none(),
        violation_time: violation,
        events,
        t_end: t,
        eta_occupation: occ_e,
        xi_occupation: occ_x,
    })
}
