//! Birth–death reductions of the zero range process: the law of the count
//! in one half of a split lattice, its Metropolis chain, the single-site
//! chain, the two-site process and the grand canonical site chain.

use serde::{Deserialize, Serialize};

use super::chain::BirthDeathChain;
use crate::error::{Result, ZrpError};
use crate::lattice::Cube;
use crate::model::grand::{marginal, DEFAULT_EPS_TRUNC};
use crate::model::{log_partition_counts, CanonicalEnsemble, RateFamily};
use crate::spectral::optimize::Budget;

/// Law `γ₁` of `R₁ = Σ_{x∈Λ₁} η_x` under `ν_{Λ,r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCountLaw {
    pub lambda1: Vec<usize>,
    pub lambda2: Vec<usize>,
    pub r: usize,
    pub gamma1: Vec<f64>,
}

fn check_split(num_sites: usize, lambda1: &[usize], lambda2: &[usize]) -> Result<()> {
    let mut seen = vec![false; num_sites];
    for &x in lambda1.iter().chain(lambda2) {
        if x >= num_sites || seen[x] {
            return Err(ZrpError::InvalidArgument(format!("split is not a partition (site {x})")));
        }
        seen[x] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(ZrpError::InvalidArgument("split does not cover the lattice".into()));
    }
    Ok(())
}

pub fn gamma1(ens: &CanonicalEnsemble, lambda1: &[usize], lambda2: &[usize]) -> Result<BoundaryCountLaw> {
    check_split(ens.num_sites(), lambda1, lambda2)?;
    Ok(BoundaryCountLaw {
        lambda1: lambda1.to_vec(),
        lambda2: lambda2.to_vec(),
        r: ens.r,
        gamma1: ens.count_law(lambda1),
    })
}

/// `γ₁` from half-lattice partition functions, without enumerating `ν`:
/// `γ₁(k) = Z₁(k) Z₂(r−k) / Z(r)`.
pub fn gamma1_by_convolution(rf: &RateFamily, lambda1: &[usize], lambda2: &[usize], r: usize) -> Result<BoundaryCountLaw> {
    check_split(rf.num_sites(), lambda1, lambda2)?;
    let z1 = log_partition_counts(rf, lambda1, r);
    let z2 = log_partition_counts(rf, lambda2, r);
    let logs: Vec<f64> = (0..=r).map(|k| z1[k] + z2[r - k]).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logs.iter().map(|l| (l - top).exp()).sum();
    Ok(BoundaryCountLaw {
        lambda1: lambda1.to_vec(),
        lambda2: lambda2.to_vec(),
        r,
        gamma1: logs.iter().map(|l| (l - top).exp() / z).collect(),
    })
}

/// Birth rate `γ(k+1)/γ(k) ∧ 1`, death rate `γ(k−1)/γ(k) ∧ 1`.
pub fn metropolis_chain(gamma: &[f64]) -> Result<BirthDeathChain> {
    if let Some(k) = gamma.iter().position(|&g| !(g > 0.0)) {
        return Err(ZrpError::ZeroMass(k));
    }
    let r = gamma.len() - 1;
    let birth = (0..r).map(|k| (gamma[k + 1] / gamma[k]).min(1.0)).collect();
    let death = (1..=r).map(|k| (gamma[k - 1] / gamma[k]).min(1.0)).collect();
    let mut chain = BirthDeathChain::new(birth, death)?;
    // the law is known exactly; keep it rather than the product of ratios
    let s: f64 = gamma.iter().sum();
    chain.stationary = gamma.iter().map(|g| g / s).collect();
    Ok(chain)
}

/// Marginal chain of `η_x`: death rate `c_x(k)`, birth rate
/// `b_x(k) = AV_{y∼x} ν_{Λ∖{x}, r−k}[c_y(η_y)]`. Each of those means equals
/// `Z_{Λ∖{x}}(r−k−1) / Z_{Λ∖{x}}(r−k)`, so the average is exact.
pub fn single_site_chain(rf: &RateFamily, cube: &Cube, r: usize, x: usize) -> Result<BirthDeathChain> {
    let n = cube.num_sites();
    if n < 2 || r == 0 {
        return Err(ZrpError::InvalidArgument(format!(
            "single-site chain needs |Λ| >= 2 and r >= 1, got ({n}, {r})"
        )));
    }
    if x >= n || rf.num_sites() != n {
        return Err(ZrpError::InvalidArgument(format!("site {x} out of range")));
    }
    if cube.neighbours(x).is_empty() {
        return Err(ZrpError::InvalidArgument(format!("site {x} has no neighbours")));
    }
    let rest: Vec<usize> = (0..n).filter(|&y| y != x).collect();
    let lz = log_partition_counts(rf, &rest, r);
    let birth = (0..r).map(|k| (lz[r - k - 1] - lz[r - k]).exp()).collect();
    let death = (1..=r).map(|k| rf.rate(x, k)).collect();
    BirthDeathChain::new(birth, death)
}

/// Two-site process in the coordinate `k = η_1`: down at rate `½c_1(k)`,
/// up at rate `½c_2(r−k)`.
pub fn two_site_chain(rf: &RateFamily, r: usize) -> Result<BirthDeathChain> {
    if rf.num_sites() != 2 || r == 0 {
        return Err(ZrpError::InvalidArgument("two-site chain needs |Λ| = 2 and r >= 1".into()));
    }
    let birth = (0..r).map(|k| 0.5 * rf.rate(1, r - k)).collect();
    let death = (1..=r).map(|k| 0.5 * rf.rate(0, k)).collect();
    BirthDeathChain::new(birth, death)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSiteSweep {
    pub constants: Vec<(usize, f64)>,
    pub sup: f64,
}

/// Log-Sobolev constant of the two-site process for `r = 1..=r_max`.
pub fn two_site_logsob(rf: &RateFamily, r_max: usize, budget: Budget, seed: u64) -> Result<TwoSiteSweep> {
    let constants = (1..=r_max)
        .map(|r| Ok((r, two_site_chain(rf, r)?.log_sobolev(budget, seed)?.value)))
        .collect::<Result<Vec<_>>>()?;
    let sup = constants.iter().map(|c| c.1).fold(0.0, f64::max);
    Ok(TwoSiteSweep { constants, sup })
}

/// Chain with death rate `c_x` and constant birth rate `φ`, reversible for
/// the truncated grand canonical marginal at site `x`. Its inverse gap is
/// the best constant in the single-site Poincaré inequality for `μ_φ`.
pub fn grand_site_chain(rf: &RateFamily, x: usize, phi: f64) -> Result<BirthDeathChain> {
    let m = marginal(rf, x, phi, DEFAULT_EPS_TRUNC)?;
    let k = m.k_trunc.max(1);
    BirthDeathChain::new(vec![phi; k], (1..=k).map(|j| rf.rate(x, j)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::functionals::dirichlet;
    use crate::spectral::generator::{build_generator, Topology};

    fn setup(preset: &str, n: usize, r: usize) -> (RateFamily, Cube, CanonicalEnsemble) {
        let cube = Cube::segment(n);
        let rf = RateFamily::preset(preset, &cube).unwrap();
        let ens = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
        (rf, cube, ens)
    }

    fn binomial(r: usize) -> Vec<f64> {
        let mut out = vec![0.0; r + 1];
        let mut c = 1.0f64;
        for (k, o) in out.iter_mut().enumerate() {
            *o = c / 2f64.powi(r as i32);
            c = c * (r - k) as f64 / (k + 1) as f64;
        }
        out
    }

    #[test]
    fn halves_of_linear_rates_are_binomial() {
        let (rf, cube, ens) = setup("linear", 4, 4);
        let (a, b) = cube.halves();
        let g = gamma1(&ens, &a, &b).unwrap();
        let h = gamma1_by_convolution(&rf, &a, &b, 4).unwrap();
        for ((x, y), z) in g.gamma1.iter().zip(&h.gamma1).zip(binomial(4)) {
            assert!((x - z).abs() < 1e-14 && (y - z).abs() < 1e-14);
        }
    }

    #[test]
    fn empty_lattice_count_is_point_mass() {
        let (_, cube, ens) = setup("staircase", 3, 0);
        let (a, b) = cube.halves();
        assert_eq!(gamma1(&ens, &a, &b).unwrap().gamma1, vec![1.0]);
    }

    #[test]
    fn metropolis_rates() {
        let c = metropolis_chain(&binomial(2)).unwrap();
        assert_eq!(c.birth[0], 1.0);
        let u = metropolis_chain(&[0.25; 4]).unwrap();
        assert!(u.birth.iter().chain(&u.death).all(|&v| v == 1.0));
        assert!(c.detailed_balance_residual() < 1e-15);
        assert_eq!(metropolis_chain(&[0.5, 0.0, 0.5]).unwrap_err(), ZrpError::ZeroMass(1));
    }

    #[test]
    fn single_site_chain_two_sites() {
        let (rf, cube, ens) = setup("linear", 2, 2);
        let c = single_site_chain(&rf, &cube, 2, 0).unwrap();
        for k in 0..2 {
            assert!((c.birth[k] - (2 - k) as f64).abs() < 1e-14);
        }
        assert_eq!(c.death, vec![1.0, 2.0]);
        assert_eq!(c.b(2), 0.0);
        assert_eq!(c.d(2), 2.0);
        for (a, b) in c.stationary.iter().zip(ens.site_marginal(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_site_stationary_is_marginal() {
        let (rf, cube, ens) = setup("staircase", 4, 5);
        for x in 0..4 {
            let c = single_site_chain(&rf, &cube, 5, x).unwrap();
            for (a, b) in c.stationary.iter().zip(ens.site_marginal(x)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_site_dirichlet_reduction() {
        let (rf, _, ens) = setup("alternating:1,2", 2, 5);
        let gen = build_generator(&ens, &rf, Topology::NearestNeighbour).unwrap();
        let chain = two_site_chain(&rf, 5).unwrap();
        let reduced = chain.generator().unwrap();
        let ft: Vec<f64> = (0..=5).map(|k| (k as f64 * 0.7).sin()).collect();
        let f: Vec<f64> = ens.states().map(|eta| ft[eta[0] as usize]).collect();
        assert!((dirichlet(&gen, &f) - dirichlet(&reduced, &ft)).abs() < 1e-12);
        for (a, b) in chain.stationary.iter().zip(ens.site_marginal(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_site_log_sobolev_one_particle() {
        let rf = RateFamily::preset("linear", &Cube::segment(2)).unwrap();
        let s = two_site_logsob(&rf, 1, Budget::default(), 1).unwrap();
        assert!((s.sup - 2.0).abs() < 1e-6);
    }

    #[test]
    fn poisson_site_chain_gap() {
        // death k, birth φ: the M/M/∞ queue, gap 1
        let rf = RateFamily::preset("linear", &Cube::segment(1)).unwrap();
        let c = grand_site_chain(&rf, 0, 2.0).unwrap();
        assert!((c.gap().unwrap().gap - 1.0).abs() < 1e-8);
    }
}
