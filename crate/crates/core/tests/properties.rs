use std::sync::Arc;

use infodesign::equilibrium::play;
use infodesign::numerics::{solve_equal_split, solve_tangent_np, solve_v_ratio};
use infodesign::planner::SegmentCurve;
use infodesign::{
    action_set_contains, agent_best_response, brute_force_plan, design, evaluate_welfare, frontier,
    hat_action, implementable_actions, is_action_implementable, is_profile_implementable, plan,
    plan_action, principal_floor, Auxiliaries, Contract, InformationStructure, Instance,
    PowerValue, RiskAttitude, SocialUtility, UtilityProfile, ValueFunction, EPS_TOL,
};
use proptest::prelude::*;

fn pairs(max_n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0..10.0f64, 0.0..10.0f64), 1..=max_n)
}

fn instance(max_n: usize) -> impl Strategy<Value = Instance> {
    pairs(max_n).prop_map(|p| Instance::from_pairs(&p).unwrap())
}

fn power() -> impl Strategy<Value = PowerValue> {
    (0.3..0.9f64, 0.5..3.0f64).prop_map(|(a, b)| PowerValue::new(a, b).unwrap())
}

fn attitude() -> impl Strategy<Value = RiskAttitude> {
    prop_oneof![
        Just(RiskAttitude::Neutral),
        power().prop_map(RiskAttitude::averse)
    ]
}

fn kind() -> impl Strategy<Value = SocialUtility> {
    prop::sample::select(SocialUtility::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn hat_action_minimizes_cost(i in instance(6)) {
        let hat = hat_action(&i);
        prop_assert!(i.action_indices().all(|a| i.cost(a) >= i.cost(hat)));
    }

    #[test]
    fn hat_action_is_implementable_when_profitable(i in instance(6), att in attitude()) {
        let hat = hat_action(&i);
        let surplus = i.reward(hat) - att.cost_equivalent(i.cost(hat));
        if surplus >= 0.0 {
            prop_assert!(is_action_implementable(&i, &att, hat).unwrap());
        }
    }

    #[test]
    fn neutral_scaling(i in instance(6), lambda in 0.1..10.0f64) {
        let n = RiskAttitude::Neutral;
        let s = i.scaled(lambda).unwrap();
        prop_assert!((principal_floor(&s, &n) - lambda * principal_floor(&i, &n)).abs() <= 1e-9 * (1.0 + lambda));
        prop_assert_eq!(hat_action(&s), hat_action(&i));
        let margin = |inst: &Instance, a: usize| {
            inst.reward(a) - inst.cost(a) - principal_floor(inst, &n)
        };
        for a in i.action_indices() {
            // Verdicts are only stable away from the absolute tolerance band.
            if margin(&i, a).abs() > 1e-6 {
                prop_assert_eq!(
                    is_action_implementable(&s, &n, a).unwrap(),
                    is_action_implementable(&i, &n, a).unwrap()
                );
            }
        }
    }

    #[test]
    fn witnesses_satisfy_their_sets(i in instance(5), att in attitude(), x in 0.0..10.0f64, y in 0.0..10.0f64) {
        let a_for = |p: &UtilityProfile| is_profile_implementable(&i, &att, p);
        let floor = principal_floor(&i, &att);
        // Snap onto a frontier so witnesses actually occur.
        for a in i.action_indices() {
            let xa = x.min(i.reward(a));
            let p = UtilityProfile::new(xa, frontier(&i, &att, a, xa).unwrap().min(y));
            let p = if att.is_neutral() { UtilityProfile::new(xa, frontier(&i, &att, a, xa).unwrap()) } else { p };
            if let Some(w) = a_for(&p) {
                if w == 0 {
                    continue;
                }
                prop_assert!(w <= a);
                prop_assert!(p.x >= floor - EPS_TOL && p.y >= -EPS_TOL);
                let f = frontier(&i, &att, w, p.x).unwrap();
                if att.is_neutral() {
                    prop_assert!((p.y - f).abs() <= EPS_TOL);
                } else {
                    prop_assert!(p.y <= f + EPS_TOL);
                }
            }
        }
    }

    #[test]
    fn plan_profile_is_implementable(i in instance(5), att in attitude(), k in kind()) {
        let res = plan(&i, &att, k).unwrap();
        let floor = principal_floor(&i, &att);
        prop_assert!((res.welfare_value - evaluate_welfare(k, &res.profile)).abs() <= EPS_TOL);
        if res.target_action == 0 {
            prop_assert_eq!(res.profile, UtilityProfile::ORIGIN);
            prop_assert!(implementable_actions(&i, &att).is_empty());
        } else {
            prop_assert!(res.profile.x >= floor - EPS_TOL && res.profile.y >= -EPS_TOL);
            prop_assert!(action_set_contains(&i, &att, res.target_action, &res.profile).unwrap());
            prop_assert!(is_profile_implementable(&i, &att, &res.profile).is_some());
        }
    }

    #[test]
    fn plan_is_never_beaten_by_sampling(i in instance(4), att in attitude(), k in kind()) {
        let res = plan(&i, &att, k).unwrap();
        let brute = brute_force_plan(&i, &att, k, 2_000);
        prop_assert!(brute.welfare_value <= res.welfare_value + 1e-9,
            "brute {} beats plan {}", brute.welfare_value, res.welfare_value);
    }

    #[test]
    fn neutral_np_dominance(i in instance(6)) {
        let n = RiskAttitude::Neutral;
        let acts = implementable_actions(&i, &n);
        for &a in &acts {
            for &b in &acts {
                if i.reward(a) - i.cost(a) <= i.reward(b) - i.cost(b) {
                    let (_, wa) = plan_action(&i, &n, SocialUtility::NashProduct, a).unwrap().unwrap();
                    let (_, wb) = plan_action(&i, &n, SocialUtility::NashProduct, b).unwrap().unwrap();
                    prop_assert!(wa <= wb + EPS_TOL);
                }
            }
        }
    }

    #[test]
    fn neutral_winner_maximizes_surplus(i in instance(6)) {
        let n = RiskAttitude::Neutral;
        let acts = implementable_actions(&i, &n);
        prop_assume!(!acts.is_empty());
        let w = |a: usize| i.reward(a) - i.cost(a);
        let best = acts.iter().copied().fold(acts[0], |b, a| if w(a) > w(b) { a } else { b });
        for k in [SocialUtility::Utilitarian, SocialUtility::NashProduct, SocialUtility::Egalitarian] {
            let res = plan(&i, &n, k).unwrap();
            prop_assert_eq!(res.target_action, best, "{}", k.name());
        }
    }

    #[test]
    fn approximate_fairness_optimality(i in instance(5), att in attitude()) {
        let af = plan(&i, &att, SocialUtility::ApproxFairness).unwrap();
        if af.unique {
            let esf = plan(&i, &att, SocialUtility::Egalitarian).unwrap();
            prop_assert!(af.profile.max_abs_diff(&esf.profile) <= EPS_TOL);
        } else {
            prop_assert!(af.welfare_value.abs() <= EPS_TOL);
        }
    }

    #[test]
    fn segments_are_flat(i in instance(5), att in attitude(), k in kind()) {
        let res = plan(&i, &att, k).unwrap();
        if let Some(seg) = res.segment {
            prop_assert!(!res.unique);
            for s in 0..=20 {
                let x = seg.x_min + (seg.x_max - seg.x_min) * s as f64 / 20.0;
                let y = match seg.curve {
                    SegmentCurve::Diagonal => x,
                    SegmentCurve::Frontier => frontier(&i, &att, res.target_action, x).unwrap(),
                };
                let p = UtilityProfile::new(x, y);
                prop_assert!((evaluate_welfare(k, &p) - res.welfare_value).abs() <= EPS_TOL);
                prop_assert!(action_set_contains(&i, &att, res.target_action, &p).unwrap());
            }
        }
    }

    #[test]
    fn designs_are_consistent(i in instance(5), att in attitude(), k in kind()) {
        let d = design(&i, &att, k).unwrap();
        for row in d.structure.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
        prop_assert!(d.predicted_contract.transfers.iter().all(|&t| t >= 0.0));
        let hat = hat_action(&i);
        let (r, x, y) = (i.reward(d.target_action), d.target_profile.x, d.target_profile.y);
        match (d.auxiliaries, &att) {
            (Auxiliaries::None, _) => prop_assert_eq!(d.target_action, 0),
            (Auxiliaries::Neutral { s_star, p_star }, _) => {
                prop_assert!((0.0..=1.0).contains(&p_star) && s_star >= 0.0);
                let lhs = p_star * s_star - i.cost(hat);
                let rhs = s_star - i.cost(d.target_action);
                prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + s_star));
                prop_assert!((r - s_star - x).abs() <= 1e-9);
                prop_assert!(i.reward(hat) - i.cost(hat) <= i.reward(d.target_action) - i.cost(d.target_action) + EPS_TOL);
            }
            (Auxiliaries::Averse { z_star, p_star, q_star }, RiskAttitude::Averse(v)) => {
                prop_assert!(0.0 <= p_star && p_star <= q_star && q_star <= 1.0);
                let vz = v.eval(z_star);
                prop_assert!((p_star * vz - i.cost(hat) - y).abs() <= 1e-9);
                prop_assert!((q_star * vz - i.cost(d.target_action) - y).abs() <= 1e-9);
                prop_assert!((r - q_star * z_star - x).abs() <= 1e-9);
                prop_assert!(i.reward(hat) - p_star * z_star <= x + 1e-9);
            }
            (aux, att) => prop_assert!(false, "{aux:?} under {att:?}"),
        }
    }

    #[test]
    fn best_response_ignores_signal_order(
        i in instance(4),
        att in attitude(),
        raw in prop::collection::vec(prop::collection::vec(0.01..1.0f64, 3), 4),
        t in prop::collection::vec(0.0..20.0f64, 3),
    ) {
        let rows: Vec<Vec<f64>> = raw[..i.n()]
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                let mut row: Vec<f64> = r.iter().map(|p| p / s).collect();
                let head: f64 = row[..2].iter().sum();
                row[2] = 1.0 - head;
                row
            })
            .collect();
        prop_assume!(rows.iter().all(|r| r[2] >= 0.0));
        let perm = [2, 0, 1];
        let permuted: Vec<Vec<f64>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let Ok(s) = InformationStructure::new(3, rows) else { return Ok(()) };
        let Ok(sp) = InformationStructure::new(3, permuted) else { return Ok(()) };
        let c = Contract::new(t.clone()).unwrap();
        let cp = Contract::new(perm.iter().map(|&j| t[j]).collect()).unwrap();
        let a = agent_best_response(&i, &att, &s, &c).unwrap();
        let b = agent_best_response(&i, &att, &sp, &cp).unwrap();
        // A permuted sum can differ in the last bit; only compare clear winners.
        let o = play(&i, &att, &s, &c, 0.0).unwrap();
        let op = play(&i, &att, &sp, &cp, 0.0).unwrap();
        prop_assert!(a == b || (o.profile.y - op.profile.y).abs() <= 1e-9);
    }

    #[test]
    fn power_derivative_matches_finite_difference(v in power(), z in 0.1..100.0f64) {
        let h = 1e-5 * z;
        let fd = (v.eval(z + h) - v.eval(z - h)) / (2.0 * h);
        prop_assert!((v.derivative(z) - fd).abs() <= 1e-6 * v.derivative(z));
        prop_assert!((v.inverse(v.eval(z)) - z).abs() <= EPS_TOL * (1.0 + z));
    }

    #[test]
    fn tangent_point_supports_the_curve(v in power(), r in 0.1..10.0f64, frac in 0.0..1.0f64) {
        let c = v.eval(r) * frac;
        let x_a = solve_tangent_np(&v, r, c).unwrap();
        let z = r - x_a;
        prop_assume!(z > 1e-6);
        prop_assert!((v.eval(z) - x_a * v.derivative(z) - c).abs() <= 1e-8 * (1.0 + v.derivative(z)));
        let f = |x: f64| x * v.eval(r - x);
        let g = |x: f64| c * x + (f(x_a) - c * x_a);
        for s in 0..=100 {
            let x = r * s as f64 / 100.0;
            prop_assert!(g(x) >= f(x) - 1e-9);
        }
    }

    #[test]
    fn equal_split_balances(v in power(), r in 0.0..10.0f64, frac in 0.0..1.0f64) {
        let c = v.eval(r) * frac;
        let x = solve_equal_split(&v, r, c).unwrap();
        prop_assert!((x - (v.eval(r - x) - c)).abs() <= 1e-9);
    }

    #[test]
    fn v_ratio_is_decreasing_and_solved(v in power(), target in 0.01..5.0f64) {
        let z = solve_v_ratio(&v, target).unwrap();
        prop_assert!((v.eval(z) / z - target).abs() <= 1e-9 * target);
        let mut prev = f64::INFINITY;
        for s in 1..=50 {
            let zz = s as f64 * 0.5;
            let ratio = v.eval(zz) / zz;
            prop_assert!(ratio < prev);
            prev = ratio;
        }
        let again = solve_v_ratio(&v, target).unwrap();
        prop_assert_eq!(z.to_bits(), again.to_bits());
    }
}

#[test]
fn custom_value_function_plugs_in() {
    #[derive(Debug)]
    struct Log;
    impl ValueFunction for Log {
        fn eval(&self, z: f64) -> f64 {
            z.max(0.0).ln_1p()
        }
        fn inverse(&self, y: f64) -> f64 {
            y.max(0.0).exp_m1()
        }
        fn derivative(&self, z: f64) -> f64 {
            1.0 / (1.0 + z)
        }
        fn derivative_inverse(&self, w: f64) -> f64 {
            (1.0 / w - 1.0).max(0.0)
        }
        fn derivative_at_zero(&self) -> f64 {
            1.0
        }
    }
    let v: Arc<dyn ValueFunction> = Arc::new(Log);
    let att = RiskAttitude::Averse(v);
    let i = Instance::from_pairs(&[(2.0, 0.1), (6.0, 0.5)]).unwrap();
    for k in SocialUtility::ALL {
        let d = design(&i, &att, k).unwrap();
        assert!(d.target_action >= 1, "{}", k.name());
    }
}
