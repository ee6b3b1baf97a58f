//! Stochastic domination between canonical ensembles.
//!
//! `ν_lo ≤ ν_hi` holds iff there is a coupling supported on `{η ≤ ξ}`. That
//! is a transport feasibility problem on the bipartite order graph, decided
//! exactly by a maximum flow: source → η (capacity `ν_lo(η)`), η → ξ when
//! `η ≤ ξ` (unbounded), ξ → sink (capacity `ν_hi(ξ)`). When the flow falls
//! short, the source side of a minimum cut yields an increasing event `U`
//! with `ν_lo(U) > ν_hi(U)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::canonical::{CanonicalEnsemble, Configuration};
use crate::error::{Result, ZrpError};

pub const DEFAULT_PAIR_CAP: usize = 20_000_000;
const FLOW_TOL: f64 = 1e-12;
const RESIDUAL_EPS: f64 = 1e-300;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DominationWitness {
    /// Coupling entries `(rank_lo, rank_hi, mass)` with `η ≤ ξ`.
    Coupling(Vec<(usize, usize, f64)>),
    /// Increasing event generated by `generators` (its up-closure), with
    /// `lo_mass > hi_mass`.
    IncreasingEvent {
        generators: Vec<Configuration>,
        lo_mass: f64,
        hi_mass: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationResult {
    pub dominated: bool,
    pub flow: f64,
    pub witness: DominationWitness,
}

struct Edge {
    to: usize,
    cap: f64,
    rev: usize,
}

struct Dinic {
    adj: Vec<Vec<Edge>>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

impl Dinic {
    fn new(n: usize) -> Self {
        Dinic {
            adj: (0..n).map(|_| Vec::new()).collect(),
            level: vec![-1; n],
            iter: vec![0; n],
        }
    }

    fn add_edge(&mut self, a: usize, b: usize, cap: f64) -> (usize, usize) {
        let ra = self.adj[b].len();
        let rb = self.adj[a].len();
        self.adj[a].push(Edge { to: b, cap, rev: ra });
        self.adj[b].push(Edge { to: a, cap: 0.0, rev: rb });
        (a, rb)
    }

    fn bfs(&mut self, s: usize) {
        self.level.iter_mut().for_each(|l| *l = -1);
        let mut q = VecDeque::new();
        self.level[s] = 0;
        q.push_back(s);
        while let Some(v) = q.pop_front() {
            for e in &self.adj[v] {
                if e.cap > RESIDUAL_EPS && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[v] + 1;
                    q.push_back(e.to);
                }
            }
        }
    }

    fn dfs(&mut self, v: usize, t: usize, f: f64) -> f64 {
        if v == t {
            return f;
        }
        while self.iter[v] < self.adj[v].len() {
            let i = self.iter[v];
            let (to, cap) = (self.adj[v][i].to, self.adj[v][i].cap);
            if cap > RESIDUAL_EPS && self.level[v] < self.level[to] {
                let d = self.dfs(to, t, f.min(cap));
                if d > 0.0 {
                    self.adj[v][i].cap -= d;
                    let rev = self.adj[v][i].rev;
                    self.adj[to][rev].cap += d;
                    return d;
                }
            }
            self.iter[v] += 1;
        }
        0.0
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            self.bfs(s);
            if self.level[t] < 0 {
                return flow;
            }
            self.iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

pub fn check_stochastic_domination(lo: &CanonicalEnsemble, hi: &CanonicalEnsemble) -> Result<DominationResult> {
    check_stochastic_domination_capped(lo, hi, DEFAULT_PAIR_CAP)
}

pub fn check_stochastic_domination_capped(
    lo: &CanonicalEnsemble,
    hi: &CanonicalEnsemble,
    pair_cap: usize,
) -> Result<DominationResult> {
    if lo.cube != hi.cube {
        return Err(ZrpError::InvalidArgument(
            "domination check needs ensembles on the same lattice".into(),
        ));
    }
    let pairs = lo.len() as u128 * hi.len() as u128;
    if pairs > pair_cap as u128 {
        return Err(ZrpError::PairSpaceTooLarge { count: pairs, cap: pair_cap });
    }
    let (nl, nh) = (lo.len(), hi.len());
    let s = nl + nh;
    let t = s + 1;
    let mut g = Dinic::new(nl + nh + 2);
    for (i, &p) in lo.nu.iter().enumerate() {
        g.add_edge(s, i, p);
    }
    for (j, &p) in hi.nu.iter().enumerate() {
        g.add_edge(nl + j, t, p);
    }
    let mut order_edges = Vec::new();
    if hi.r >= lo.r {
        for i in 0..nl {
            let eta = lo.state(i);
            for j in 0..nh {
                let xi = hi.state(j);
                if eta.iter().zip(xi).all(|(a, b)| a <= b) {
                    let h = g.add_edge(i, nl + j, f64::INFINITY);
                    order_edges.push((i, j, h));
                }
            }
        }
    }
    let flow = g.max_flow(s, t);
    let total: f64 = lo.nu.iter().sum();

    if flow >= total - FLOW_TOL {
        let coupling = order_edges
            .into_iter()
            .filter_map(|(i, j, (a, idx))| {
                let e = &g.adj[a][idx];
                let pushed = g.adj[e.to][e.rev].cap;
                (pushed > 0.0).then_some((i, j, pushed))
            })
            .collect();
        return Ok(DominationResult {
            dominated: true,
            flow,
            witness: DominationWitness::Coupling(coupling),
        });
    }

    // residual reachability from the source after the final BFS
    g.bfs(s);
    let reach: Vec<usize> = (0..nl).filter(|&i| g.level[i] >= 0).collect();
    let generators: Vec<Configuration> = reach.iter().map(|&i| lo.configuration(i)).collect();
    let in_up = |eta: &[u32]| generators.iter().any(|gen| gen.0.iter().zip(eta).all(|(a, b)| a <= b));
    let lo_mass = lo.states().zip(&lo.nu).filter(|(e, _)| in_up(e)).map(|(_, p)| p).sum();
    let hi_mass = hi.states().zip(&hi.nu).filter(|(e, _)| in_up(e)).map(|(_, p)| p).sum();
    Ok(DominationResult {
        dominated: false,
        flow,
        witness: DominationWitness::IncreasingEvent {
            generators,
            lo_mass,
            hi_mass,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Cube;
    use crate::model::rates::RateFamily;

    fn ens(preset: &str, n: usize, r: usize) -> CanonicalEnsemble {
        let cube = Cube::segment(n);
        let rf = RateFamily::preset(preset, &cube).unwrap();
        CanonicalEnsemble::new(&rf, &cube, r).unwrap()
    }

    fn check_coupling(lo: &CanonicalEnsemble, hi: &CanonicalEnsemble, res: &DominationResult) {
        let DominationWitness::Coupling(q) = &res.witness else {
            panic!("expected a coupling");
        };
        let mut ml = vec![0.0; lo.len()];
        let mut mh = vec![0.0; hi.len()];
        for &(i, j, m) in q {
            assert!(lo.configuration(i).le(&hi.configuration(j)));
            ml[i] += m;
            mh[j] += m;
        }
        for (a, b) in ml.iter().zip(&lo.nu) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in mh.iter().zip(&hi.nu) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_measures_dominate() {
        let e = ens("staircase", 3, 3);
        let res = check_stochastic_domination(&e, &e).unwrap();
        assert!(res.dominated);
        check_coupling(&e, &e, &res);
    }

    #[test]
    fn adding_a_particle_dominates_for_linear_rates() {
        let lo = ens("linear", 2, 2);
        let hi = ens("linear", 2, 3);
        let res = check_stochastic_domination(&lo, &hi).unwrap();
        assert!(res.dominated);
        check_coupling(&lo, &hi, &res);
    }

    #[test]
    fn wrong_order_is_refuted() {
        let lo = ens("linear", 2, 3);
        let hi = ens("linear", 2, 2);
        let res = check_stochastic_domination(&lo, &hi).unwrap();
        assert!(!res.dominated);
        match res.witness {
            DominationWitness::IncreasingEvent { lo_mass, hi_mass, .. } => assert!(lo_mass > hi_mass),
            _ => panic!("expected a certificate"),
        }
    }

    #[test]
    fn pair_cap() {
        let lo = ens("linear", 3, 4);
        let err = check_stochastic_domination_capped(&lo, &lo, 10).unwrap_err();
        assert!(matches!(err, ZrpError::PairSpaceTooLarge { .. }));
    }
}
