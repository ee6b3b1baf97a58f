use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zrp_core::bdchain::reductions::{gamma1_by_convolution, metropolis_chain, single_site_chain};
use zrp_core::dynamics::{colour_rates, simulate, ColourState, Dynamics, Initial, SimConfig};
use zrp_core::llt::{llt_normal, sum_distribution};
use zrp_core::model::grand::{density_and_variance, DEFAULT_EPS_TRUNC};
use zrp_core::model::{check_stochastic_domination, marginal, moments, verify_conditions, CanonicalEnsemble, RateFamily, SiteRate};
use zrp_core::spectral::{build_generator, rothaus_check, spectral_gap, Topology};
use zrp_core::Cube;

fn site_rate() -> impl Strategy<Value = SiteRate> {
    (prop::collection::vec(0.3f64..3.0, 0..4), 0.5f64..2.0, prop::collection::vec(0.0f64..1.0, 0..3)).prop_map(
        |(head, theta, offsets)| {
            let mut h = vec![0.0];
            h.extend(head);
            SiteRate::Tabulated { head: h, theta, offsets }
        },
    )
}

fn family(n: usize) -> impl Strategy<Value = RateFamily> {
    prop::collection::vec(site_rate(), n).prop_map(|v| RateFamily::new(v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn marginals_normalized_and_fugacity_identity(rf in family(3), phi in 0.05f64..6.0) {
        for x in 0..3 {
            let m = marginal(&rf, x, phi, DEFAULT_EPS_TRUNC).unwrap();
            prop_assert!((m.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
        let mt = moments(&rf, phi, 2).unwrap();
        for r in &mt.mean_rate {
            prop_assert!((r - phi).abs() < 1e-10 * phi.max(1.0), "{} vs {}", r, phi);
        }
    }

    #[test]
    fn density_strictly_increasing(rf in family(2)) {
        let mut last = -1.0;
        for i in 0..20 {
            let phi = 0.05 * 1.4f64.powi(i);
            let (rho, _) = density_and_variance(&rf, phi).unwrap();
            prop_assert!(rho > last);
            last = rho;
        }
    }

    #[test]
    fn canonical_is_conditioned_grand_canonical(rf in family(3), r in 1usize..6) {
        let cube = Cube::segment(3);
        let ens = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
        for phi in [0.7, 2.3] {
            let margs: Vec<_> = (0..3).map(|x| marginal(&rf, x, phi, DEFAULT_EPS_TRUNC).unwrap()).collect();
            let w: Vec<f64> = ens.states().map(|s| (0..3).map(|x| margs[x].pmf[s[x] as usize]).product()).collect();
            let z: f64 = w.iter().sum();
            for (a, b) in w.iter().zip(&ens.nu) {
                prop_assert!((a / z - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn envelope_when_conditions_pass(rf in family(2)) {
        if let Ok(rep) = verify_conditions(&rf, 6, &[(2, 2)]) {
            for x in 0..2 {
                for k in 1..300 {
                    let c = rf.rate(x, k);
                    prop_assert!(rep.c1 * k as f64 <= c * (1.0 + 1e-12) && c <= rep.c2 * k as f64 * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn generators_reversible_and_rescalable(rf in family(3), r in 1usize..5) {
        let cube = Cube::segment(3);
        let ens = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
        for topo in [Topology::NearestNeighbour, Topology::CompleteGraph] {
            let g = build_generator(&ens, &rf, topo).unwrap();
            prop_assert!(g.reversibility_residual() < 1e-12);
            prop_assert!(g.stationarity_residual() < 1e-12);
            let g2 = build_generator(&ens, &rf.scaled(2.0).unwrap(), topo).unwrap();
            let (a, b) = (spectral_gap(&g).unwrap().gap, spectral_gap(&g2).unwrap().gap);
            prop_assert!((b - 2.0 * a).abs() < 1e-10 * a.max(1.0));
        }
    }

    #[test]
    fn poincare_holds_for_random_functions(rf in family(3), r in 1usize..5, seed in any::<u64>()) {
        let cube = Cube::segment(3);
        let ens = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
        let g = build_generator(&ens, &rf, Topology::NearestNeighbour).unwrap();
        let c_sg = spectral_gap(&g).unwrap().c_sg;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let f: Vec<f64> = (0..g.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
            let fx = zrp_core::spectral::functionals(&g, &f);
            prop_assert!(fx.variance <= c_sg * fx.dirichlet * (1.0 + 1e-9) + 1e-14);
        }
    }

    #[test]
    fn rothaus_for_random_densities(rf in family(2), r in 1usize..6, seed in any::<u64>()) {
        let ens = CanonicalEnsemble::new(&rf, &Cube::segment(2), r).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<f64> = (0..ens.len()).map(|_| rng.random_range(0.0..3.0)).collect();
        prop_assert!(rothaus_check(&ens.nu, &f).unwrap().holds);
    }

    #[test]
    fn domination_consistent_with_monotone_functions(r in 1usize..3, m in 1usize..4, seed in any::<u64>()) {
        let cube = Cube::segment(2);
        let rf = RateFamily::preset("staircase", &cube).unwrap();
        let lo = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
        let hi = CanonicalEnsemble::new(&rf, &cube, r + m).unwrap();
        if check_stochastic_domination(&lo, &hi).unwrap().dominated {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..50 {
                // nondecreasing in each coordinate: sum of increasing site functions
                let tables: Vec<Vec<f64>> = (0..2)
                    .map(|_| {
                        let mut acc = 0.0;
                        (0..=r + m).map(|_| { acc += rng.random_range(0.0..1.0); acc }).collect()
                    })
                    .collect();
                let f = |s: &[u32]| tables[0][s[0] as usize] + tables[1][s[1] as usize];
                let a: f64 = lo.states().zip(&lo.nu).map(|(s, p)| p * f(s)).sum();
                let b: f64 = hi.states().zip(&hi.nu).map(|(s, p)| p * f(s)).sum();
                prop_assert!(a <= b + 1e-12);
            }
        }
    }

    #[test]
    fn reduced_chains_reproduce_marginals(rf in family(3), r in 1usize..7) {
        let cube = Cube::segment(3);
        let ens = CanonicalEnsemble::new(&rf, &cube, r).unwrap();
        let ch = single_site_chain(&rf, &cube, r, 1).unwrap();
        for (a, b) in ch.stationary.iter().zip(ens.site_marginal(1)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let law = gamma1_by_convolution(&rf, &[0], &[1, 2], r).unwrap();
        let mc = metropolis_chain(&law.gamma1).unwrap();
        for (a, b) in mc.stationary.iter().zip(ens.count_law(&[0])) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn llt_exact_value_is_the_oracle(r in 10usize..60) {
        let rf = RateFamily::preset("staircase", &Cube::segment(20)).unwrap();
        let c = llt_normal(&rf, r, 3).unwrap();
        let phi = zrp_core::model::phi_of_rho(&rf, r as f64 / 20.0).unwrap();
        let d = sum_distribution(&rf, phi).unwrap();
        prop_assert_eq!(c.exact.to_bits(), d.pmf[r].to_bits());
        prop_assert!((d.pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn colour_rates_add_up(k1 in 0usize..200, k2 in 0usize..200, theta in 0.1f64..5.0) {
        let c = SiteRate::Tabulated { head: vec![0.0, 2.0], theta, offsets: vec![0.0, 0.5] };
        let (a, b) = colour_rates(&c, k1, k2);
        let total = if k1 + k2 == 0 { 0.0 } else { c.eval(k1 + k2) };
        prop_assert!((a + b - total).abs() <= 4.0 * f64::EPSILON * total);
        prop_assert!(a >= 0.0 && b >= -4.0 * f64::EPSILON * total);
    }

    #[test]
    fn trajectories_conserve_and_reproduce(seed in any::<u64>(), k1 in 0usize..4, k2 in 0usize..4) {
        let cube = Cube::new(2, 2).unwrap();
        let rf = RateFamily::preset("staircase", &cube).unwrap();
        let cfg = SimConfig { dynamics: Dynamics::TwoColour, t_max: 5.0, sample_dt: 0.5, seed, max_events: None };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e1: Vec<u32> = (0..4).map(|_| rng.random_range(0..2)).collect();
        let e2: Vec<u32> = (0..4).map(|_| rng.random_range(0..2)).collect();
        let init = if k1 + k2 > 3 {
            Initial::ColourConfig(ColourState::new(e1, e2).unwrap())
        } else {
            Initial::Colours(k1, k2)
        };
        let a = simulate(&rf, &cube, &init, &cfg).unwrap();
        let b = simulate(&rf, &cube, &init, &cfg).unwrap();
        prop_assert_eq!(&a.jumps, &b.jumps);
        let c0 = a.initial_colour.clone().unwrap();
        let (n1, n2): (u32, u32) = (c0.eta1.iter().sum(), c0.eta2.iter().sum());
        for c in a.colour_samples.as_ref().unwrap() {
            prop_assert_eq!(c.eta1.iter().sum::<u32>(), n1);
            prop_assert_eq!(c.eta2.iter().sum::<u32>(), n2);
        }
    }
}
