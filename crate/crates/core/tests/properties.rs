//! Invariants as property tests over seeded random instances.

mod common;

use common::systems;
use fkmdim::covering::{caratheodory_value_small, five_r_check, greedy_fk_cover, max_separated_set};
use fkmdim::local_entropy::{ball_mass, bowen_ball_mass, empirical_from_sampler, local_entropy};
use fkmdim::metrics::{average_distance, bowen_distance, f_bar, fk_value, CrossDistances};
use fkmdim::packing::{greedy_fk_packing, packing_family, packing_value, verify_packing};
use fkmdim::weighted::{frostman_measure_small, sandwich_check, weighted_cover_value_small, LP_TOLERANCE};
use fkmdim::{SeedStreams, StatePoint, SystemSpec};
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;

fn system(i: usize) -> SystemSpec {
    systems().swap_remove(i % 4)
}

fn rng(seed: u64) -> ChaCha8Rng {
    SeedStreams::new(seed).stream("properties")
}

fn points(sys: &SystemSpec, seed: u64, m: usize) -> Vec<StatePoint> {
    let mut r = rng(seed);
    (0..m).map(|_| sys.sample(&mut r)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_axioms(sys in 0usize..4, seed: u64, n in 1usize..=16) {
        let sys = system(sys);
        let p = points(&sys, seed, 3);
        let o = sys.orbits(&p, n).unwrap();
        let d = |i: usize, j: usize| fk_value(&sys, &o[i], &o[j]).unwrap();
        prop_assert_eq!(fk_value(&sys, &o[0], &o[0]).unwrap(), 0.0);
        prop_assert_eq!(d(0, 1), d(1, 0));
        let band = o[0].band();
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-12 + 4.0 * band);
        let bowen = bowen_distance(&sys, &o[0], &o[1]).unwrap();
        let mean = average_distance(&sys, &o[0], &o[1]).unwrap();
        prop_assert!(mean <= bowen + 1e-12);
        prop_assert!(d(0, 1) <= bowen + 1e-9 + band);
        prop_assert!(d(0, 1) <= mean.sqrt() + 1e-9 + band);
        prop_assert!((0.0..=1.0).contains(&d(0, 1)));
    }

    #[test]
    fn f_bar_is_non_increasing(sys in 0usize..4, seed: u64, n in 1usize..=16, d1 in 0.001f64..1.0, d2 in 0.001f64..1.0) {
        let sys = system(sys);
        let p = points(&sys, seed, 2);
        let o = sys.orbits(&p, n).unwrap();
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(f_bar(&sys, &o[0], &o[1], lo).unwrap() >= f_bar(&sys, &o[0], &o[1], hi).unwrap());
    }

    #[test]
    fn certificates_verify(sys in 0usize..4, seed: u64, n in 1usize..=20) {
        let sys = system(sys);
        let p = points(&sys, seed, 2);
        let o = sys.orbits(&p, n).unwrap();
        let fk = fkmdim::metrics::fk_distance(&sys, &o[0], &o[1], fkmdim::metrics::FkMode::ExactBreakpoint, 0.0).unwrap();
        let band = o[0].band().max(o[1].band());
        prop_assert!(fk.certificate.unwrap().verify(&sys, &o[0], &o[1], band).is_ok());
    }

    #[test]
    fn prefix_balls_agree_with_single_length_tests(sys in 0usize..4, seed: u64, r in 0.01f64..0.8) {
        let sys = system(sys);
        let p = points(&sys, seed, 2);
        let o = sys.orbits(&p, 12).unwrap();
        let all = CrossDistances::new(&sys, &o[0], &o[1]).unwrap().within_prefixes(r, false);
        for n in 1..=12 {
            let a = o[0].prefix(n).unwrap();
            let b = o[1].prefix(n).unwrap();
            prop_assert_eq!(all[n - 1], CrossDistances::new(&sys, &a, &b).unwrap().within(r, false));
        }
    }

    #[test]
    fn covers_and_separated_sets(sys in 0usize..4, seed: u64, m in 1usize..30, n in 1usize..10, e1 in 0.02f64..0.6, e2 in 0.02f64..0.6) {
        let sys = system(sys);
        let o = sys.orbits(&points(&sys, seed, m), n).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let small = greedy_fk_cover(&sys, &o, lo).unwrap();
        let large = greedy_fk_cover(&sys, &o, hi).unwrap();
        // every point lies in some chosen ball
        for p in &o {
            prop_assert!(small.center_indices.iter().any(|&c| CrossDistances::new(&sys, &o[c], p).unwrap().within(lo, false)));
        }
        prop_assert!(small.count >= 1 && small.count <= m);
        let sep = max_separated_set(&sys, &o, lo).unwrap();
        prop_assert!(!sep.is_empty());
        prop_assert!(large.count <= m);
    }

    #[test]
    fn caratheodory_monotonicity(sys in 0usize..4, seed: u64, m in 1usize..6, s in 0.0f64..1.5, eps in 0.05f64..0.4) {
        let sys = system(sys);
        let p = points(&sys, seed, m);
        let base = caratheodory_value_small(&sys, &p, eps, s, 2, 4).unwrap();
        prop_assert!(caratheodory_value_small(&sys, &p, eps, s + 0.3, 2, 4).unwrap() <= base + 1e-12);
        prop_assert!(caratheodory_value_small(&sys, &p, eps * 1.5, s, 2, 4).unwrap() <= base + 1e-12);
        prop_assert!(caratheodory_value_small(&sys, &p, eps, s, 3, 4).unwrap() >= base - 1e-12);
    }

    #[test]
    fn five_r_postconditions(sys in 0usize..4, seed: u64, m in 1usize..12, n in 1usize..8) {
        let sys = system(sys);
        let p = points(&sys, seed, m);
        let mut r = rng(seed ^ 1);
        let balls: Vec<_> = p
            .iter()
            .map(|x| (sys.orbit(x, n).unwrap(), rand::Rng::gen_range(&mut r, 0.02..0.4)))
            .collect();
        let rep = five_r_check(&sys, &balls).unwrap();
        prop_assert!(rep.disjoint && rep.covered);
    }

    #[test]
    fn packings_are_certified(sys in 0usize..4, seed: u64, m in 1usize..8, eps in 0.02f64..0.3, s in 0.0f64..1.0) {
        let sys = system(sys);
        let p = points(&sys, seed, m);
        let fam = packing_family(&sys, &p, eps, s, 2, 4).unwrap();
        prop_assert!(verify_packing(&sys, &fam).unwrap());
        // P does not increase with N
        let v2 = fam.sum_value.unwrap();
        prop_assert!(packing_value(&sys, &p, eps, s, 3, 4).unwrap() <= v2 + 1e-12);
        // never below the greedy single-length packing at the shortest length
        let greedy = greedy_fk_packing(&sys, &sys.orbits(&p, 2).unwrap(), eps).unwrap();
        prop_assert!(v2 >= greedy.count as f64 * (-2.0 * s).exp() - 1e-12);
    }

    #[test]
    fn weighted_monotonicity_and_sandwich(sys in 0usize..4, seed: u64, m in 1usize..7, eps in 0.03f64..0.3, s in 0.0f64..1.5) {
        let sys = system(sys);
        let p = points(&sys, seed, m);
        let w = |e: f64, s: f64, lo: usize| weighted_cover_value_small(&sys, &p, &p, e, s, lo, 6).unwrap().value;
        let base = w(eps, s, 3);
        prop_assert!(w(eps * 1.5, s, 3) <= base + LP_TOLERANCE);
        prop_assert!(w(eps, s + 0.2, 3) <= base + LP_TOLERANCE);
        prop_assert!(w(eps, s, 4) >= base - LP_TOLERANCE);
        prop_assert!(base <= caratheodory_value_small(&sys, &p, eps, s, 3, 6).unwrap() + LP_TOLERANCE);
        let r = sandwich_check(&sys, &p, &p, eps, s, 1.0, 3, 6).unwrap();
        prop_assert!(r.holds(), "{:?}", r);
    }

    #[test]
    fn frostman_constraints(sys in 0usize..4, seed: u64, m in 1usize..7, eps in 0.03f64..0.3, s in 0.0f64..1.5) {
        let sys = system(sys);
        let p = points(&sys, seed, m);
        let f = frostman_measure_small(&sys, &p, eps, s, 3, 6).unwrap();
        prop_assert!(f.max_excess <= LP_TOLERANCE);
        let total: f64 = f.measure.atoms().iter().map(|a| a.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ball_mass_bounds(sys in 0usize..4, seed: u64, n in 1usize..12, e1 in 0.05f64..0.9, e2 in 0.05f64..0.9) {
        let sys = system(sys);
        let mu = empirical_from_sampler(&sys, 60, seed).unwrap();
        let x = points(&sys, seed ^ 7, 1).remove(0);
        let xo = sys.orbit(&x, n).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let m_lo = ball_mass(&sys, &mu, &xo, lo, n).unwrap();
        prop_assert!(m_lo <= ball_mass(&sys, &mu, &xo, hi, n).unwrap() + 1e-15);
        prop_assert!(m_lo >= bowen_ball_mass(&sys, &mu, &xo, lo * lo, n).unwrap() - 1e-15);
    }

    #[test]
    fn local_entropy_bounds(sys in 0usize..4, seed: u64, eps in 0.05f64..0.5) {
        let sys = system(sys);
        let mu = empirical_from_sampler(&sys, 80, seed).unwrap();
        let x = mu.atoms()[0].0.clone();
        let e = local_entropy(&sys, &mu, &x, eps, (3, 10)).unwrap();
        prop_assert!(e.lower <= e.upper);
        prop_assert!(e.lower >= 0.0);
        let again = local_entropy(&sys, &mu, &x, eps, (3, 10)).unwrap();
        prop_assert_eq!(e, again);
    }
}
