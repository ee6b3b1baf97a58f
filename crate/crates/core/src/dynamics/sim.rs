//! Event-driven simulation of the nearest-neighbour, complete-graph and
//! two-colour dynamics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::colour::ColourState;
use crate::error::{Result, ZrpError};
use crate::lattice::Cube;
use crate::model::RateFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Dynamics {
    /// rate `½c_x(η_x)` per ordered adjacent pair
    NearestNeighbour,
    /// rate `c_x(η_x)` per ordered pair of distinct sites
    CompleteGraph,
    /// nearest-neighbour jumps with labelled colours
    TwoColour,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Initial {
    /// `r` particles, each placed on a uniform site
    Particles(usize),
    Config(Vec<u32>),
    /// `(k1, k2)` particles of each colour, placed like `Particles`
    Colours(usize, usize),
    ColourConfig(ColourState),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: f64,
    pub from: usize,
    pub to: usize,
    /// 0 for uncoloured dynamics, otherwise 1 or 2
    pub colour: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub dynamics: Dynamics,
    pub t_max: f64,
    pub sample_dt: f64,
    pub seed: u64,
    /// stop early after this many jumps
    pub max_events: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub dynamics: Dynamics,
    pub initial: Vec<u32>,
    pub initial_colour: Option<ColourState>,
    pub jumps: Vec<Jump>,
    pub sample_times: Vec<f64>,
    pub samples: Vec<Vec<u32>>,
    pub colour_samples: Option<Vec<ColourState>>,
    /// time at which the run stopped
    pub t_end: f64,
}

impl Trajectory {
    pub fn event_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.jumps.iter().map(|j| j.t)
    }

    pub fn observe(&self, f: impl Fn(&[u32]) -> f64) -> Vec<f64> {
        self.samples.iter().map(|s| f(s)).collect()
    }

    pub fn total_particles(&self) -> u32 {
        self.initial.iter().sum()
    }

    /// Occupation time of each site divided by the run length.
    pub fn time_averaged_occupation(&self) -> Vec<f64> {
        let mut eta = self.initial.clone();
        let mut acc = vec![0.0; eta.len()];
        let mut last = 0.0;
        for j in &self.jumps {
            for (a, &e) in acc.iter_mut().zip(&eta) {
                *a += e as f64 * (j.t - last);
            }
            eta[j.from] -= 1;
            eta[j.to] += 1;
            last = j.t;
        }
        for (a, &e) in acc.iter_mut().zip(&eta) {
            *a += e as f64 * (self.t_end - last);
        }
        if self.t_end > 0.0 {
            acc.iter_mut().for_each(|a| *a /= self.t_end);
        }
        acc
    }
}

/// RNG for the `stream`-th independent sequence under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sequential multinomial placement of `r` particles on `n` sites.
pub fn multinomial_placement(n: usize, r: usize, rng: &mut impl Rng) -> Vec<u32> {
    let mut eta = vec![0u32; n];
    for _ in 0..r {
        eta[rng.random_range(0..n)] += 1;
    }
    eta
}

pub(crate) fn exp_time(total: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / total
}

/// Jump selection shared by every uncoupled dynamics.
pub(crate) struct Mover {
    neighbours: Option<Vec<Vec<usize>>>,
    n: usize,
}

impl Mover {
    pub fn new(cube: &Cube, complete: bool) -> Self {
        let n = cube.num_sites();
        Mover {
            neighbours: (!complete).then(|| (0..n).map(|x| cube.neighbours(x)).collect()),
            n,
        }
    }

    fn weight(&self, rf: &RateFamily, eta: &[u32], x: usize) -> f64 {
        if eta[x] == 0 {
            return 0.0;
        }
        let c = rf.rate(x, eta[x] as usize);
        match &self.neighbours {
            Some(nb) => 0.5 * nb[x].len() as f64 * c,
            None => (self.n - 1) as f64 * c,
        }
    }

    pub fn total(&self, rf: &RateFamily, eta: &[u32]) -> f64 {
        (0..self.n).map(|x| self.weight(rf, eta, x)).sum()
    }

    pub fn pick(&self, rf: &RateFamily, eta: &[u32], total: f64, rng: &mut impl Rng) -> (usize, usize) {
        let mut u = rng.random::<f64>() * total;
        let mut x = self.n - 1;
        for s in 0..self.n {
            let w = self.weight(rf, eta, s);
            if u < w {
                x = s;
                break;
            }
            u -= w;
        }
        // rounding can leave x on an empty site
        while eta[x] == 0 {
            x -= 1;
        }
        let y = match &self.neighbours {
            Some(nb) => nb[x][rng.random_range(0..nb[x].len())],
            None => {
                let j = rng.random_range(0..self.n - 1);
                if j < x {
                    j
                } else {
                    j + 1
                }
            }
        };
        (x, y)
    }
}

fn resolve_initial(init: &Initial, n: usize, dynamics: Dynamics, rng: &mut impl Rng) -> Result<(Vec<u32>, Option<ColourState>)> {
    let colour = dynamics == Dynamics::TwoColour;
    match init {
        Initial::Particles(r) if !colour => Ok((multinomial_placement(n, *r, rng), None)),
        Initial::Config(eta) if !colour => {
            if eta.len() != n {
                return Err(ZrpError::InvalidInitial(format!("{} sites expected, got {}", n, eta.len())));
            }
            Ok((eta.clone(), None))
        }
        Initial::Colours(k1, k2) if colour => {
            let eta1 = multinomial_placement(n, *k1, rng);
            let eta2 = multinomial_placement(n, *k2, rng);
            let cs = ColourState::new(eta1, eta2)?;
            Ok((cs.blind(), Some(cs)))
        }
        Initial::ColourConfig(cs) if colour => {
            if cs.eta1.len() != n || cs.eta2.len() != n {
                return Err(ZrpError::InvalidInitial(format!("{n} sites expected per colour")));
            }
            Ok((cs.blind(), Some(cs.clone())))
        }
        _ => Err(ZrpError::InvalidInitial(format!("initial state {init:?} does not fit {dynamics:?} dynamics"))),
    }
}

/// Simulate up to `cfg.t_max`. The colour-blind path of the two-colour
/// dynamics uses the same random stream as the nearest-neighbour dynamics,
/// colours being drawn from a second stream.
pub fn simulate(rf: &RateFamily, cube: &Cube, init: &Initial, cfg: &SimConfig) -> Result<Trajectory> {
    simulate_streams(rf, cube, init, cfg, 0)
}

pub(crate) fn simulate_streams(
    rf: &RateFamily,
    cube: &Cube,
    init: &Initial,
    cfg: &SimConfig,
    stream: u64,
) -> Result<Trajectory> {
    let n = cube.num_sites();
    if rf.num_sites() != n {
        return Err(ZrpError::InvalidArgument(format!("{} rates for {} sites", rf.num_sites(), n)));
    }
    if !(cfg.t_max > 0.0 && cfg.t_max.is_finite()) {
        return Err(ZrpError::InvalidArgument(format!("T must be positive, got {}", cfg.t_max)));
    }
    if !(cfg.sample_dt > 0.0) {
        return Err(ZrpError::InvalidArgument(format!("sample_dt must be positive, got {}", cfg.sample_dt)));
    }
    let mut rng = stream_rng(cfg.seed, 2 * stream);
    let mut colour_rng = stream_rng(cfg.seed, 2 * stream + 1);
    let (initial, initial_colour) = resolve_initial(init, n, cfg.dynamics, &mut rng)?;
    let mover = Mover::new(cube, cfg.dynamics == Dynamics::CompleteGraph);

    let mut eta = initial.clone();
    let mut cs = initial_colour.clone();
    let mut jumps = Vec::new();
    let n_samples = (cfg.t_max / cfg.sample_dt + 1e-9).floor() as usize + 1;
    let mut sample_times = Vec::with_capacity(n_samples);
    let mut samples = Vec::with_capacity(n_samples);
    let mut colour_samples = cs.as_ref().map(|_| Vec::with_capacity(n_samples));
    // record samples at times `< upto`, or `<= upto` when `inclusive`
    let mut record = |upto: f64, inclusive: bool, eta: &[u32], cs: &Option<ColourState>, times: &mut Vec<f64>, samples: &mut Vec<Vec<u32>>| {
        while times.len() < n_samples {
            let ts = times.len() as f64 * cfg.sample_dt;
            if ts > upto || (ts == upto && !inclusive) {
                break;
            }
            times.push(times.len() as f64 * cfg.sample_dt);
            samples.push(eta.to_vec());
            if let (Some(v), Some(c)) = (colour_samples.as_mut(), cs) {
                v.push(c.clone());
            }
        }
    };

    let mut t = 0.0;
    loop {
        let total = mover.total(rf, &eta);
        let t_next = if total > 0.0 { t + exp_time(total, &mut rng) } else { f64::INFINITY };
        let capped = cfg.max_events.is_some_and(|m| jumps.len() >= m);
        if t_next > cfg.t_max || capped {
            let stop = if capped { t } else { cfg.t_max };
            // the state is constant on [t, t_next)
            record(stop, true, &eta, &cs, &mut sample_times, &mut samples);
            t = stop;
            break;
        }
        record(t_next, false, &eta, &cs, &mut sample_times, &mut samples);
        let (x, y) = mover.pick(rf, &eta, total, &mut rng);
        let colour = match cs.as_mut() {
            Some(c) => {
                let k1 = c.eta1[x];
                let k = k1 + c.eta2[x];
                if colour_rng.random_range(0..k) < k1 {
                    c.eta1[x] -= 1;
                    c.eta1[y] += 1;
                    1
                } else {
                    c.eta2[x] -= 1;
                    c.eta2[y] += 1;
                    2
                }
            }
            None => 0,
        };
        eta[x] -= 1;
        eta[y] += 1;
        t = t_next;
        jumps.push(Jump { t, from: x, to: y, colour });
    }
    Ok(Trajectory {
        seed: cfg.seed,
        dynamics: cfg.dynamics,
        initial,
        initial_colour,
        jumps,
        sample_times,
        samples,
        colour_samples,
        t_end: t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CanonicalEnsemble;
    use crate::spectral::{build_generator, Topology};

    fn cfg(dynamics: Dynamics, t_max: f64, seed: u64) -> SimConfig {
        SimConfig {
            dynamics,
            t_max,
            sample_dt: 0.5,
            seed,
            max_events: None,
        }
    }

    #[test]
    fn empty_system_is_flat() {
        let cube = Cube::segment(3);
        let rf = RateFamily::preset("linear", &cube).unwrap();
        let tr = simulate(&rf, &cube, &Initial::Particles(0), &cfg(Dynamics::NearestNeighbour, 5.0, 1)).unwrap();
        assert!(tr.jumps.is_empty());
        assert_eq!(tr.samples.len(), 11);
        assert!(tr.samples.iter().all(|s| s == &vec![0, 0, 0]));
    }

    #[test]
    fn conservation_and_reproducibility() {
        let cube = Cube::new(2, 3).unwrap();
        let rf = RateFamily::preset("staircase", &cube).unwrap();
        for d in [Dynamics::NearestNeighbour, Dynamics::CompleteGraph] {
            let a = simulate(&rf, &cube, &Initial::Particles(7), &cfg(d, 20.0, 9)).unwrap();
            let b = simulate(&rf, &cube, &Initial::Particles(7), &cfg(d, 20.0, 9)).unwrap();
            assert_eq!(a.jumps, b.jumps);
            assert!(!a.jumps.is_empty());
            assert!(a.samples.iter().all(|s| s.iter().sum::<u32>() == 7));
        }
    }

    #[test]
    fn single_particle_occupation_fraction() {
        let cube = Cube::segment(2);
        let rf = RateFamily::preset("linear", &cube).unwrap();
        // hold times are Exp(½): occupation fraction of site 1 has variance ~ 1/T
        let t_max = 20_000.0;
        let tr = simulate(&rf, &cube, &Initial::Config(vec![1, 0]), &cfg(Dynamics::NearestNeighbour, t_max, 3)).unwrap();
        let frac = tr.time_averaged_occupation()[1];
        let se = (1.0 / t_max).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * se, "{frac}");
    }

    #[test]
    fn empirical_rates_match_generator() {
        let cube = Cube::segment(2);
        let rf = RateFamily::preset("staircase", &cube).unwrap();
        for r in 1..=3 {
            let ens = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
            let gen = build_generator(&ens, &rf, Topology::NearestNeighbour).unwrap();
            let tr = simulate(&rf, &cube, &Initial::Particles(r), &cfg(Dynamics::NearestNeighbour, 100000.0, 11)).unwrap();
            let m = ens.len();
            let mut hold = vec![0.0; m];
            let mut counts = vec![vec![0usize; m]; m];
            let mut eta = tr.initial.clone();
            let mut last = 0.0;
            for j in &tr.jumps {
                let i = ens.rank(&eta).unwrap();
                hold[i] += j.t - last;
                eta[j.from] -= 1;
                eta[j.to] += 1;
                counts[i][ens.rank(&eta).unwrap()] += 1;
                last = j.t;
            }
            for i in 0..m {
                for (k, &c) in counts[i].iter().enumerate() {
                    let rate = gen.entry(i, k);
                    if i == k {
                        continue;
                    }
                    let emp = c as f64 / hold[i];
                    let se = (rate / hold[i]).sqrt();
                    assert!((emp - rate).abs() <= 3.0 * se + 1e-12, "r={r} {i}->{k}: {emp} vs {rate}");
                }
            }
        }
    }

    #[test]
    fn bad_initial_rejected() {
        let cube = Cube::segment(3);
        let rf = RateFamily::preset("linear", &cube).unwrap();
        let c = cfg(Dynamics::NearestNeighbour, 1.0, 0);
        assert!(matches!(simulate(&rf, &cube, &Initial::Config(vec![1, 1]), &c), Err(ZrpError::InvalidInitial(_))));
        assert!(matches!(simulate(&rf, &cube, &Initial::Colours(1, 1), &c), Err(ZrpError::InvalidInitial(_))));
        let bad_t = SimConfig { t_max: 0.0, ..c };
        assert!(simulate(&rf, &cube, &Initial::Particles(1), &bad_t).is_err());
    }
}
