use proptest::prelude::*;

use swipt_ia::allocation::water_filling;
use swipt_ia::report::format_sig9;
use swipt_ia::selection::{prrs_select, rrs_select, SelectionState};
use swipt_ia::splitting::{
    clamp_split, eh_only_alpha_threshold, pso_closed_form, weights_from_requirements,
};

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

proptest! {
    #[test]
    fn split_is_clamped_stationary_point(
        alpha in 0.0f64..=1.0,
        snr in log_uniform(1e-3, 1e3),
        harvest in log_uniform(1e-3, 1e3),
    ) {
        let r = clamp_split(alpha, 1.0 - alpha, snr, harvest);
        prop_assert!((0.0..=1.0).contains(&r.rho));
        let median = r.psi.clamp(0.0, 1.0);
        prop_assert!((r.rho - median).abs() <= 1e-12, "rho {} psi {}", r.rho, r.psi);
    }

    #[test]
    fn split_is_monotone_in_alpha(
        a in 0.0f64..=1.0,
        b in 0.0f64..=1.0,
        gain in log_uniform(1e-3, 1.0),
        field in log_uniform(1e-2, 10.0),
        power in log_uniform(0.1, 1e3),
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let r_lo = pso_closed_form(gain, field, lo, 1.0 - lo, 0.5, power).rho;
        let r_hi = pso_closed_form(gain, field, hi, 1.0 - hi, 0.5, power).rho;
        prop_assert!(r_lo <= r_hi);
    }

    #[test]
    fn below_threshold_harvests_only(
        frac in 0.0f64..=1.0,
        gain in log_uniform(1e-3, 1.0),
        field in log_uniform(1e-2, 10.0),
        power in log_uniform(0.1, 1e3),
    ) {
        let alpha = frac * eh_only_alpha_threshold(gain, field, 0.5);
        prop_assert_eq!(pso_closed_form(gain, field, alpha, 1.0 - alpha, 0.5, power).rho, 0.0);
    }

    #[test]
    fn requirement_weights_sum_to_one(
        rate in 0.0f64..100.0,
        power in 0.0f64..100.0,
        upsilon in 0.01f64..10.0,
        phi in 0.01f64..10.0,
    ) {
        prop_assume!(rate + power > 0.0);
        let (alpha, beta) = weights_from_requirements(rate, power, upsilon, phi).unwrap();
        prop_assert_eq!(alpha + beta, 1.0);
        prop_assert!((0.0..=1.0).contains(&alpha));
    }

    #[test]
    fn water_filling_satisfies_kkt(
        gains in prop::collection::vec(log_uniform(1e-3, 10.0), 1..8),
        budget in log_uniform(0.1, 1e3),
    ) {
        let wf = water_filling(&gains, budget).unwrap();
        let level = wf.water_level;
        let p = &wf.profile.p;
        prop_assert!((wf.profile.total() - budget).abs() <= 1e-9 * budget.max(1.0));
        for (k, &g) in gains.iter().enumerate() {
            prop_assert!(p[k] >= 0.0);
            if p[k] > 0.0 {
                prop_assert!((p[k] + 1.0 / g - level).abs() <= 1e-9 * level.max(1.0));
            } else {
                prop_assert!(1.0 / g >= level - 1e-9 * level.max(1.0));
            }
        }
    }

    #[test]
    fn round_robin_is_fair(users in 2usize..9, l_seed in 0usize..100, start in 0usize..100) {
        let l = l_seed % users;
        let mut state = SelectionState { last_index: start % users };
        let mut count = vec![0usize; users];
        for _ in 0..users {
            let (eh, next) = rrs_select(state, users, l).unwrap();
            prop_assert_eq!(eh.len(), l);
            for k in eh {
                count[k] += 1;
            }
            state = next;
        }
        prop_assert!(count.iter().all(|&c| c == l));
    }

    #[test]
    fn round_robin_pointer_has_closed_form(users in 1usize..9, l_seed in 0usize..100, n in 0u64..50) {
        let l = l_seed % users;
        let mut state = SelectionState::initial(users);
        for _ in 0..n {
            state = rrs_select(state, users, l).unwrap().1;
        }
        prop_assert_eq!(state, SelectionState::after_slots(users, l, n));
    }

    #[test]
    fn prr_ranking_picks_largest(prr in prop::collection::vec(0.0f64..10.0, 2..8), l_seed in 0usize..100) {
        let l = l_seed % prr.len();
        let eh = prrs_select(&prr, l).unwrap();
        prop_assert_eq!(eh.len(), l);
        prop_assert!(eh.windows(2).all(|w| w[0] < w[1]));
        let min_eh = eh.iter().map(|&k| prr[k]).fold(f64::INFINITY, f64::min);
        for k in (0..prr.len()).filter(|k| !eh.contains(k)) {
            prop_assert!(prr[k] <= min_eh);
        }
    }

    #[test]
    fn sig9_round_trips(x in prop::num::f64::NORMAL) {
        let parsed: f64 = format_sig9(x).parse().unwrap();
        prop_assert!((parsed - x).abs() <= 5e-9 * x.abs());
    }
}
