//! Canonical ensembles `ν_{Λ,r}` with a combinatorial rank/unrank bijection.
//!
//! States are occupation vectors with `Σ η_x = r`, listed in descending
//! lexicographic order: `(r,0,…,0)` has rank 0 and `(0,…,0,r)` is last.

use serde::{Deserialize, Serialize};

use super::rates::RateFamily;
use crate::error::{Result, ZrpError};
use crate::lattice::Cube;

pub const DEFAULT_STATE_CAP: usize = 200_000;

/// An occupation vector `η`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration(pub Vec<u32>);

impl Configuration {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `η^{x,y}`: one particle moved from `x` to `y`; `None` if `η_x = 0`.
    pub fn jumped(&self, x: usize, y: usize) -> Option<Configuration> {
        if self.0[x] == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[x] -= 1;
        v[y] += 1;
        Some(Configuration(v))
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Configuration) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// Number of occupation vectors of `m` sites carrying `s` particles.
pub fn count_states(m: usize, s: usize) -> u128 {
    if m == 0 {
        return u128::from(s == 0);
    }
    // C(s + m − 1, m − 1)
    let k = (m - 1).min(s) as u128;
    let n = (s + m - 1) as u128;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (n - i) / (i + 1);
    }
    c
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CanonicalEnsemble {
    pub cube: Cube,
    pub r: usize,
    num_sites: usize,
    /// flattened occupation vectors, `num_sites` entries per state
    states: Vec<u32>,
    pub nu: Vec<f64>,
    /// `log Σ_η Π_x 1/c_x(η_x)!`
    pub log_partition: f64,
    /// `table[m][s] = count_states(m, s)`
    table: Vec<Vec<u64>>,
}

impl CanonicalEnsemble {
    pub fn new(rf: &RateFamily, cube: &Cube, r: usize) -> Result<Self> {
        Self::with_cap(rf, cube, r, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(rf: &RateFamily, cube: &Cube, r: usize, cap: usize) -> Result<Self> {
        let n = cube.num_sites();
        if rf.num_sites() != n {
            return Err(ZrpError::InvalidArgument(format!(
                "rate family has {} sites but the cube has {n}",
                rf.num_sites()
            )));
        }
        let count = count_states(n, r);
        if count > cap as u128 {
            return Err(ZrpError::StateSpaceTooLarge { count, cap });
        }
        let count = count as usize;
        let table: Vec<Vec<u64>> = (0..=n)
            .map(|m| (0..=r).map(|s| count_states(m, s) as u64).collect())
            .collect();

        let mut states = Vec::with_capacity(count * n);
        let mut cur = vec![0u32; n];
        fn fill(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<u32>) {
            let n = cur.len();
            if pos + 1 == n {
                cur[pos] = left;
                out.extend_from_slice(cur);
                return;
            }
            for v in (0..=left).rev() {
                cur[pos] = v;
                fill(pos + 1, left - v, cur, out);
            }
        }
        fill(0, r as u32, &mut cur, &mut states);
        debug_assert_eq!(states.len(), count * n);

        let lf: Vec<Vec<f64>> = (0..n).map(|x| rf.log_factorials(x, r)).collect();
        let logw: Vec<f64> = states
            .chunks(n)
            .map(|eta| -eta.iter().enumerate().map(|(x, &k)| lf[x][k as usize]).sum::<f64>())
            .collect();
        let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logw.iter().map(|w| (w - m).exp()).sum();
        let nu = logw.iter().map(|w| (w - m).exp() / z).collect();

        Ok(CanonicalEnsemble {
            cube: *cube,
            r,
            num_sites: n,
            states,
            nu,
            log_partition: m + z.ln(),
            table,
        })
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i * self.num_sites..(i + 1) * self.num_sites]
    }

    pub fn configuration(&self, i: usize) -> Configuration {
        Configuration(self.state(i).to_vec())
    }

    pub fn states(&self) -> impl Iterator<Item = &[u32]> {
        self.states.chunks(self.num_sites)
    }

    /// Rank of an occupation vector, `None` if it is not in the ensemble.
    pub fn rank(&self, eta: &[u32]) -> Option<usize> {
        if eta.len() != self.num_sites || eta.iter().map(|&v| v as usize).sum::<usize>() != self.r {
            return None;
        }
        let n = self.num_sites;
        let mut rank = 0u64;
        let mut s = self.r;
        for (i, &v) in eta.iter().enumerate().take(n - 1) {
            let m = n - i - 1;
            for w in (v as usize + 1)..=s {
                rank += self.table[m][s - w];
            }
            s -= v as usize;
        }
        Some(rank as usize)
    }

    /// Occupation vector at a given rank.
    pub fn unrank(&self, mut rank: usize) -> Option<Configuration> {
        if rank >= self.len() {
            return None;
        }
        let n = self.num_sites;
        let mut s = self.r;
        let mut out = vec![0u32; n];
        for i in 0..n - 1 {
            let m = n - i - 1;
            let mut v = s;
            loop {
                let block = self.table[m][s - v] as usize;
                if rank < block {
                    break;
                }
                rank -= block;
                v -= 1;
            }
            out[i] = v as u32;
            s -= v;
        }
        out[n - 1] = s as u32;
        Some(Configuration(out))
    }

    pub fn expect(&self, f: &[f64]) -> f64 {
        self.nu.iter().zip(f).map(|(p, v)| p * v).sum()
    }

    /// Law of `η_x` under `ν`, indexed by `k = 0..=r`.
    pub fn site_marginal(&self, x: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.r + 1];
        for (i, eta) in self.states().enumerate() {
            out[eta[x] as usize] += self.nu[i];
        }
        out
    }

    /// Law of the number of particles in `sites`, indexed by `0..=r`.
    pub fn count_law(&self, sites: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.r + 1];
        for (i, eta) in self.states().enumerate() {
            let k: u32 = sites.iter().map(|&x| eta[x]).sum();
            out[k as usize] += self.nu[i];
        }
        out
    }
}

/// `log Z_S(m)` for `m = 0..=mmax`, where `Z_S(m)` sums `Π_{x∈S} 1/c_x(η_x)!`
/// over configurations on `sites` carrying `m` particles.
pub fn log_partition_counts(rf: &RateFamily, sites: &[usize], mmax: usize) -> Vec<f64> {
    let mut acc = vec![f64::NEG_INFINITY; mmax + 1];
    acc[0] = 0.0;
    for &x in sites {
        let lf = rf.log_factorials(x, mmax);
        let next: Vec<f64> = (0..=mmax)
            .map(|m| {
                let terms = (0..=m).map(|k| acc[m - k] - lf[k]);
                let top = terms.clone().fold(f64::NEG_INFINITY, f64::max);
                if top == f64::NEG_INFINITY {
                    return top;
                }
                top + terms.map(|t| (t - top).exp()).sum::<f64>().ln()
            })
            .collect();
        acc = next;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::grand::all_marginals;

    fn linear(n: usize) -> RateFamily {
        RateFamily::preset("linear", &Cube::segment(n)).unwrap()
    }

    #[test]
    fn partition_counts_match_enumeration() {
        let cube = Cube::segment(3);
        let rf = RateFamily::preset("staircase", &cube).unwrap();
        let lz = log_partition_counts(&rf, &[0, 1, 2], 5);
        for r in 0..=5 {
            let ens = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
            assert!((lz[r] - ens.log_partition).abs() < 1e-12);
        }
    }

    #[test]
    fn two_sites_two_particles() {
        let ens = CanonicalEnsemble::new(&linear(2), &Cube::segment(2), 2).unwrap();
        assert_eq!(ens.len(), 3);
        assert_eq!(ens.state(0), &[2, 0]);
        assert_eq!(ens.state(1), &[1, 1]);
        assert_eq!(ens.state(2), &[0, 2]);
        let expect = [0.25, 0.5, 0.25];
        for (a, b) in ens.nu.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // detailed balance c_1(1) ν(1,1) = c_2(2) ν(0,2) = 1/2
        assert!((1.0 * ens.nu[1] - 0.5).abs() < 1e-15);
        assert!((2.0 * ens.nu[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn stars_and_bars() {
        let ens = CanonicalEnsemble::new(&linear(3), &Cube::segment(3), 2).unwrap();
        assert_eq!(ens.len(), 6);
        assert_eq!(count_states(3, 2), 6);
        assert_eq!(count_states(8, 8), 6435);
    }

    #[test]
    fn rank_unrank_bijection() {
        let cube = Cube::new(2, 2).unwrap();
        let rf = RateFamily::preset("staircase", &cube).unwrap();
        let ens = CanonicalEnsemble::new(&rf, &cube, 5).unwrap();
        for i in 0..ens.len() {
            assert_eq!(ens.rank(ens.state(i)), Some(i));
            assert_eq!(ens.unrank(i).unwrap().0, ens.state(i));
        }
        assert_eq!(ens.rank(&[1, 1, 1, 1]), None);
        assert!(ens.unrank(ens.len()).is_none());
    }

    #[test]
    fn cap_enforced() {
        let err = CanonicalEnsemble::with_cap(&linear(8), &Cube::segment(8), 8, 1000).unwrap_err();
        assert!(matches!(err, ZrpError::StateSpaceTooLarge { count: 6435, .. }));
    }

    #[test]
    fn conditioning_on_total_count() {
        let cube = Cube::segment(3);
        let rf = RateFamily::preset("alternating:1,2", &cube).unwrap();
        let ens = CanonicalEnsemble::new(&rf, &cube, 4).unwrap();
        for &phi in &[0.3, 2.7] {
            let margs = all_marginals(&rf, phi, 1e-14).unwrap();
            let joint: Vec<f64> = ens
                .states()
                .map(|eta| eta.iter().enumerate().map(|(x, &k)| margs[x].pmf[k as usize]).product())
                .collect();
            let total: f64 = joint.iter().sum();
            for (p, q) in joint.iter().zip(&ens.nu) {
                assert!((p / total - q).abs() < 1e-12);
            }
        }
    }
}
