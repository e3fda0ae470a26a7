mod common;

use common::oracles::projected_gradient_charging;
use evw_core::charging::{ChargingScenario, Slope};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario() -> impl Strategy<Value = ChargingScenario> {
    (1usize..=6, 2u32..=3).prop_flat_map(|(t, n)| {
        (
            proptest::collection::vec(0.005f64..0.05, t),
            proptest::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.0f64..50.0], t),
        )
            .prop_map(move |(eta, ell0)| ChargingScenario::new(n, eta, ell0).unwrap())
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ordering_sorts_marginal_costs(sc in scenario()) {
        let order = sc.order_slots();
        let key: Vec<f64> = order.iter().map(|&t| sc.marginal_cost(t, sc.ell0()[t])).collect();
        prop_assert!(key.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn schedule_is_feasible_and_satisfies_kkt(sc in scenario(), l in 0.0f64..150.0) {
        let s = sc.schedule(l).unwrap();
        let sum: f64 = s.ell_e.iter().sum();
        prop_assert!((sum - l).abs() <= 1e-9 * l.max(1.0));
        prop_assert!(s.ell_e.iter().all(|&x| x >= 0.0));
        let scale = s.marginal_cost.max(1e-12);
        for t in 0..sc.slot_count() {
            let m = sc.marginal_cost(t, sc.ell0()[t] + s.ell_e[t]);
            if s.ell_e[t] > 0.0 {
                prop_assert!((m - s.marginal_cost).abs() <= 1e-8 * scale, "slot {t}: {m} vs {}", s.marginal_cost);
            } else {
                prop_assert!(m >= s.marginal_cost - 1e-8 * scale);
            }
        }
        prop_assert!(rel(s.value, sc.cost_of(&s.ell_e)) <= 1e-12);
    }

    #[test]
    fn thresholds_activate_next_slot(sc in scenario()) {
        let wf = sc.water_filling();
        let th = wf.thresholds();
        prop_assert!(th.windows(2).all(|w| w[0] <= w[1]));
        let order = wf.order();
        for t in 1..sc.slot_count() {
            let next = order[t];
            let s = sc.schedule(th[t]).unwrap();
            let want = sc.marginal_cost(next, sc.ell0()[next]);
            if th[t] > 0.0 {
                prop_assert!((s.marginal_cost - want).abs() <= 1e-9 * want.max(1.0));
            }
        }
    }

    #[test]
    fn value_is_convex_and_branches_agree(sc in scenario()) {
        let wf = sc.water_filling();
        let h = 0.25;
        for i in 1..200 {
            let l = i as f64 * 0.5;
            let d2 = (wf.value(l + h) - 2.0 * wf.value(l) + wf.value(l - h)) / (h * h);
            // Rounding noise of the second difference.
            let noise = 8.0 * f64::EPSILON * wf.value(l + h) / (h * h);
            prop_assert!(d2 >= -1e-8 - noise, "L={l}: {d2}");
        }
        let th = wf.thresholds();
        for (t, &at) in th.iter().enumerate().take(sc.slot_count()).skip(1) {
            let (left, right) = (wf.value_on_branch(t, at), wf.value_on_branch(t + 1, at));
            prop_assert!(rel(left, right) <= 1e-10);
        }
    }

    #[test]
    fn permutation_invariance(sc in scenario(), l in 0.0f64..100.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = sc.slot_count();
        let mut perm: Vec<usize> = (0..t).collect();
        for i in (1..t).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let shuffled = ChargingScenario::new(
            sc.exponent(),
            perm.iter().map(|&i| sc.eta()[i]).collect(),
            perm.iter().map(|&i| sc.ell0()[i]).collect(),
        ).unwrap();
        let (a, b) = (sc.schedule(l).unwrap(), shuffled.schedule(l).unwrap());
        prop_assert!(rel(a.value, b.value) <= 1e-12);
        if let (Some(pa), Some(pb)) = (a.unit_price, b.unit_price) {
            prop_assert!(rel(pa, pb) <= 1e-12);
        }
        for (j, &i) in perm.iter().enumerate() {
            prop_assert!((b.ell_e[j] - a.ell_e[i]).abs() <= 1e-9 * l.max(1.0));
        }
    }

    #[test]
    fn closed_form_integral_matches_quadrature(sc in scenario(), l in 0.01f64..80.0) {
        let wf = sc.water_filling();
        let mut q = 0.0;
        let mut lo = 0.0;
        for &th in wf.thresholds()[1..].iter().chain(std::iter::once(&l)) {
            let hi = th.min(l);
            if hi > lo {
                q += evw_core::quadrature::adaptive_simpson(|x| wf.price_or_limit(x), lo, hi, 1e-10);
                lo = hi;
            }
        }
        prop_assert!(rel(wf.price_integral(l), q) <= 1e-8);
    }
}

#[test]
fn water_filling_matches_projected_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let t = rng.gen_range(1..=6);
        let n = rng.gen_range(2..=3);
        let eta: Vec<f64> = (0..t).map(|_| rng.gen_range(0.005..0.05)).collect();
        let ell0: Vec<f64> = (0..t)
            .map(|_| {
                if rng.gen_bool(0.15) {
                    0.0
                } else {
                    rng.gen_range(0.0..50.0)
                }
            })
            .collect();
        let l = rng.gen_range(0.0..120.0);
        let sc = ChargingScenario::new(n, eta.clone(), ell0.clone()).unwrap();
        let closed = sc.optimal_cost(l).unwrap();
        let brute = projected_gradient_charging(&eta, &ell0, n, l);
        assert!(
            rel(closed, brute) <= 1e-7,
            "{eta:?} {ell0:?} n={n} L={l}: {closed} vs {brute}"
        );
    }
}

#[test]
fn monotonicity_test_matches_sign_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let t = rng.gen_range(2..=6);
        let n = rng.gen_range(2..=3);
        let eta: Vec<f64> = (0..t).map(|_| rng.gen_range(0.005..0.05)).collect();
        let ell0: Vec<f64> = (0..t).map(|_| rng.gen_range(0.0..50.0)).collect();
        let sc = ChargingScenario::new(n, eta, ell0).unwrap();
        let th = sc.energy_thresholds();
        let scan = sc.price_derivative_sign_scan(th[t - 1] + 10.0, 2000).unwrap();
        let any_decreasing = scan.iter().any(|(_, s)| *s == Slope::Decreasing);
        assert_eq!(sc.price_monotonicity().increasing, !any_decreasing, "{sc:?}");
    }
}
