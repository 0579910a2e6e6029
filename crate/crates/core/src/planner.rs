//! Stage one: pick the implementable utility profile that maximizes a social
//! utility function.
//!
//! The feasible set is a union over actions, so the search is decomposed per
//! action. Each per-action subproblem has a closed form (or a single monotone
//! root) because the action's frontier is a line (neutral agent) or a concave
//! curve (averse agent).

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{
    implementable_actions, is_action_implementable, principal_floor, surplus, Instance,
    RiskAttitude, UtilityProfile, EPS_TOL,
};
use crate::numerics::{solve_equal_split, solve_tangent_np, ValueFunction};

/// Social utility functions the planner can maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SocialUtility {
    /// `x + y`
    #[serde(rename = "usf")]
    Utilitarian,
    /// `x * y`
    #[serde(rename = "nash_product")]
    NashProduct,
    /// `min(x, y)`
    #[serde(rename = "esf")]
    Egalitarian,
    /// `-(x - y)^2 / 4`
    #[serde(rename = "approx_fairness")]
    ApproxFairness,
}

impl SocialUtility {
    pub const ALL: [SocialUtility; 4] = [
        SocialUtility::Utilitarian,
        SocialUtility::NashProduct,
        SocialUtility::Egalitarian,
        SocialUtility::ApproxFairness,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SocialUtility::Utilitarian => "usf",
            SocialUtility::NashProduct => "nash_product",
            SocialUtility::Egalitarian => "esf",
            SocialUtility::ApproxFairness => "approx_fairness",
        }
    }
}

impl std::str::FromStr for SocialUtility {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        SocialUtility::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown welfare function '{s}'"))
    }
}

/// Curve carrying a set of equally good profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentCurve {
    /// The frontier of the target action.
    Frontier,
    /// The diagonal `y = x`.
    Diagonal,
}

/// Closed x-interval of optimal profiles when the optimum is not unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub x_min: f64,
    pub x_max: f64,
    pub curve: SegmentCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub target_action: usize,
    pub profile: UtilityProfile,
    pub welfare_value: f64,
    pub unique: bool,
    pub segment: Option<Segment>,
}

impl PlanResult {
    pub(crate) fn default_only(kind: SocialUtility) -> Self {
        PlanResult {
            target_action: 0,
            profile: UtilityProfile::ORIGIN,
            welfare_value: evaluate_welfare(kind, &UtilityProfile::ORIGIN),
            unique: true,
            segment: None,
        }
    }
}

pub fn evaluate_welfare(kind: SocialUtility, p: &UtilityProfile) -> f64 {
    match kind {
        SocialUtility::Utilitarian => p.x + p.y,
        SocialUtility::NashProduct => p.x * p.y,
        SocialUtility::Egalitarian => p.x.min(p.y),
        SocialUtility::ApproxFairness => {
            let d = p.x - p.y;
            -(d * d) / 4.0
        }
    }
}

/// Optimal profile and welfare restricted to action `a`'s implementable
/// profiles, or `None` when `a` is not implementable.
pub fn plan_action(
    instance: &Instance,
    attitude: &RiskAttitude,
    kind: SocialUtility,
    a: usize,
) -> Result<Option<(UtilityProfile, f64)>> {
    instance.check_non_default(a)?;
    if !is_action_implementable(instance, attitude, a)? {
        return Ok(None);
    }
    let floor = principal_floor(instance, attitude);
    let profile = match attitude {
        RiskAttitude::Neutral => neutral_profile(instance, a, floor),
        RiskAttitude::Averse(v) => averse_profile(instance, v.as_ref(), kind, a, floor)?,
    };
    Ok(Some((profile, evaluate_welfare(kind, &profile))))
}

// All four welfare functions share one representative on a line: the
// midpoint when it clears the floor, otherwise the floor itself.
fn neutral_profile(instance: &Instance, a: usize, floor: f64) -> UtilityProfile {
    let w = instance.reward(a) - instance.cost(a);
    let half = w / 2.0;
    if half >= floor {
        UtilityProfile::new(half, half)
    } else {
        UtilityProfile::new(floor, w - floor)
    }
}

fn averse_profile(
    instance: &Instance,
    v: &dyn ValueFunction,
    kind: SocialUtility,
    a: usize,
    floor: f64,
) -> Result<UtilityProfile> {
    let (r, c) = (instance.reward(a), instance.cost(a));
    let on_frontier = |x: f64| UtilityProfile::new(x, v.eval((r - x).max(0.0)) - c);
    Ok(match kind {
        SocialUtility::Utilitarian => {
            let hat = crate::model::hat_action(instance);
            let raw_floor = instance.reward(hat) - v.inverse(instance.cost(hat));
            let z_c = v.inverse(c);
            if v.derivative(z_c) <= 1.0 {
                UtilityProfile::new(r - z_c, 0.0)
            } else if raw_floor >= 0.0 && v.derivative(r - raw_floor) > 1.0 {
                on_frontier(raw_floor)
            } else if raw_floor < 0.0 && v.derivative(r) > 1.0 {
                UtilityProfile::new(0.0, v.eval(r) - c)
            } else {
                let z1 = v.derivative_inverse(1.0);
                UtilityProfile::new(r - z1, v.eval(z1) - c)
            }
        }
        SocialUtility::NashProduct => {
            let x_a = solve_tangent_np(v, r, c)?;
            if x_a >= floor - EPS_TOL {
                on_frontier(x_a)
            } else {
                on_frontier(floor)
            }
        }
        SocialUtility::Egalitarian | SocialUtility::ApproxFairness => {
            let x_a = solve_equal_split(v, r, c)?;
            if x_a >= floor - EPS_TOL {
                UtilityProfile::new(x_a, x_a)
            } else {
                on_frontier(floor)
            }
        }
    })
}

/// Solves the planner's problem over all implementable actions.
///
/// Ties in welfare go to the lowest action index; under approximated
/// fairness, welfare ties within tolerance are first broken by `x + y`.
pub fn plan(
    instance: &Instance,
    attitude: &RiskAttitude,
    kind: SocialUtility,
) -> Result<PlanResult> {
    let candidates = implementable_actions(instance, attitude);
    if candidates.is_empty() {
        return Ok(PlanResult::default_only(kind));
    }
    let floor = principal_floor(instance, attitude);

    if let (RiskAttitude::Averse(v), SocialUtility::Egalitarian) = (attitude, kind) {
        return averse_egalitarian(instance, v.as_ref(), &candidates, floor);
    }

    let mut best: Option<(usize, UtilityProfile, f64)> = None;
    for &a in &candidates {
        let Some((p, w)) = plan_action(instance, attitude, kind, a)? else {
            continue;
        };
        let replace = match &best {
            None => true,
            Some((_, bp, bw)) => {
                if kind == SocialUtility::ApproxFairness && (w - bw).abs() <= EPS_TOL {
                    p.x + p.y > bp.x + bp.y
                } else {
                    w > *bw
                }
            }
        };
        if replace {
            best = Some((a, p, w));
        }
    }
    let (target_action, profile, welfare_value) =
        best.expect("implementable actions always have a per-action optimum");

    let mut result = PlanResult {
        target_action,
        profile,
        welfare_value,
        unique: true,
        segment: None,
    };
    match (attitude, kind) {
        (RiskAttitude::Neutral, SocialUtility::Utilitarian) => {
            let w = surplus(instance, attitude, target_action);
            if w > floor + EPS_TOL {
                result.unique = false;
                result.segment = Some(Segment {
                    x_min: floor,
                    x_max: w,
                    curve: SegmentCurve::Frontier,
                });
            }
        }
        (_, SocialUtility::ApproxFairness) if welfare_value >= -EPS_TOL => {
            let zero_actions = count_diagonal_actions(instance, attitude, &candidates, floor)?;
            if !attitude.is_neutral() && profile.x > floor + EPS_TOL {
                result.segment = Some(Segment {
                    x_min: floor,
                    x_max: profile.x,
                    curve: SegmentCurve::Diagonal,
                });
            }
            result.unique = result.segment.is_none() && zero_actions <= 1;
        }
        _ => {}
    }
    Ok(result)
}

// Actions whose implementable set meets the diagonal.
fn count_diagonal_actions(
    instance: &Instance,
    attitude: &RiskAttitude,
    candidates: &[usize],
    floor: f64,
) -> Result<usize> {
    let mut count = 0;
    for &a in candidates {
        let crossing = match attitude {
            RiskAttitude::Neutral => surplus(instance, attitude, a) / 2.0,
            RiskAttitude::Averse(v) => {
                solve_equal_split(v.as_ref(), instance.reward(a), instance.cost(a))?
            }
        };
        if crossing >= floor - EPS_TOL {
            count += 1;
        }
    }
    Ok(count)
}

// Egalitarian welfare with an averse agent: prefer the largest diagonal
// crossing that clears the floor; otherwise compare the frontiers at the
// floor.
fn averse_egalitarian(
    instance: &Instance,
    v: &dyn ValueFunction,
    candidates: &[usize],
    floor: f64,
) -> Result<PlanResult> {
    let mut crossing_best: Option<(usize, f64)> = None;
    for &a in candidates {
        let x_a = solve_equal_split(v, instance.reward(a), instance.cost(a))?;
        if x_a >= floor - EPS_TOL && crossing_best.map_or(true, |(_, bx)| x_a > bx) {
            crossing_best = Some((a, x_a));
        }
    }
    let (target_action, profile) = match crossing_best {
        Some((a, x_a)) => (a, UtilityProfile::new(x_a, x_a)),
        None => {
            let mut best: Option<(usize, f64)> = None;
            for &a in candidates {
                let y = v.eval((instance.reward(a) - floor).max(0.0)) - instance.cost(a);
                if best.map_or(true, |(_, by)| y > by) {
                    best = Some((a, y));
                }
            }
            let (a, y) = best.expect("candidates is non-empty");
            (a, UtilityProfile::new(floor, y))
        }
    };
    Ok(PlanResult {
        target_action,
        profile,
        welfare_value: evaluate_welfare(SocialUtility::Egalitarian, &profile),
        unique: true,
        segment: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{action_set_contains, Instance};
    use crate::numerics::PowerValue;
    use approx::assert_abs_diff_eq;

    fn sqrt() -> RiskAttitude {
        RiskAttitude::averse(PowerValue::sqrt())
    }

    fn inst(pairs: &[(f64, f64)]) -> Instance {
        Instance::from_pairs(pairs).unwrap()
    }

    fn fig3a() -> Instance {
        inst(&[(2.0, 0.8), (5.0, 1.0)])
    }

    #[test]
    fn welfare_examples() {
        assert_eq!(
            evaluate_welfare(SocialUtility::Utilitarian, &UtilityProfile::new(2.5, 2.5)),
            5.0
        );
        assert_abs_diff_eq!(
            evaluate_welfare(
                SocialUtility::NashProduct,
                &UtilityProfile::new(20.0 / 9.0, 2.0 / 3.0)
            ),
            40.0 / 27.0,
            epsilon = 1e-15
        );
        assert_eq!(
            evaluate_welfare(
                SocialUtility::ApproxFairness,
                &UtilityProfile::new(1.0, 1.0)
            ),
            0.0
        );
        assert_eq!(
            evaluate_welfare(SocialUtility::Egalitarian, &UtilityProfile::new(3.0, -1.0)),
            -1.0
        );
        assert_eq!(
            evaluate_welfare(
                SocialUtility::ApproxFairness,
                &UtilityProfile::new(3.0, 1.0)
            ),
            -1.0
        );
    }

    #[test]
    fn welfare_names_round_trip() {
        for k in SocialUtility::ALL {
            assert_eq!(k.name().parse::<SocialUtility>().unwrap(), k);
        }
        assert!("nash".parse::<SocialUtility>().is_err());
    }

    #[test]
    fn plan_action_neutral_np() {
        let i = inst(&[(4.0, 2.0), (8.0, 3.0)]);
        let (p, w) = plan_action(&i, &RiskAttitude::Neutral, SocialUtility::NashProduct, 2)
            .unwrap()
            .unwrap();
        assert_eq!(p, UtilityProfile::new(2.5, 2.5));
        assert_abs_diff_eq!(w, 6.25);
    }

    #[test]
    fn plan_action_averse_examples() {
        let i = fig3a();
        let (p, w) = plan_action(&i, &sqrt(), SocialUtility::NashProduct, 2)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(p.x, 20.0 / 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 40.0 / 27.0, epsilon = 1e-12);

        let (p, w) = plan_action(&i, &sqrt(), SocialUtility::Utilitarian, 2)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(p.x, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 4.0, epsilon = 1e-12);

        let (p, w) = plan_action(&i, &sqrt(), SocialUtility::Egalitarian, 2)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(p.x, 1.36, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 3.64f64.sqrt() - 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 3.64f64.sqrt() - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn plan_action_skips_unimplementable() {
        let i = inst(&[(4.0, 2.0), (4.5, 3.0)]);
        assert!(
            plan_action(&i, &RiskAttitude::Neutral, SocialUtility::Utilitarian, 2)
                .unwrap()
                .is_none()
        );
        assert!(plan_action(&i, &RiskAttitude::Neutral, SocialUtility::Utilitarian, 3).is_err());
    }

    #[test]
    fn averse_usf_interior_case() {
        // v' = 1 at z = 1/4; floor 0.4975 sits well left of r - 1/4.
        let i = inst(&[(0.5, 0.05), (3.0, 0.1)]);
        let (p, _) = plan_action(&i, &sqrt(), SocialUtility::Utilitarian, 2)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(p.x, 3.0 - 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.5 - 0.1, epsilon = 1e-12);
    }

    #[test]
    fn averse_usf_floor_case() {
        // floor 1.99 but v'(5 - 1.99) < 1: the tangency still clears it.
        let i = inst(&[(2.0, 0.1), (5.0, 0.3)]);
        let (p, _) = plan_action(&i, &sqrt(), SocialUtility::Utilitarian, 2)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(p.x, 4.75, epsilon = 1e-12);
        // Tight frontier: v'(r - floor) > 1 needs r - floor < 1/4. Floor is 1.99.
        let i = inst(&[(2.0, 0.1), (2.2, 0.2)]);
        let (p, _) = plan_action(&i, &sqrt(), SocialUtility::Utilitarian, 2)
            .unwrap()
            .unwrap();
        assert_abs_diff_eq!(p.x, 1.99, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.21f64.sqrt() - 0.2, epsilon = 1e-12);
    }

    #[test]
    fn plan_examples() {
        let i = inst(&[(6.0, 2.5), (8.0, 3.0)]);
        let res = plan(&i, &RiskAttitude::Neutral, SocialUtility::NashProduct).unwrap();
        assert_eq!(res.target_action, 2);
        assert_eq!(res.profile, UtilityProfile::new(3.5, 1.5));
        assert_abs_diff_eq!(res.welfare_value, 5.25);
        assert!(res.unique);

        let res = plan(&fig3a(), &sqrt(), SocialUtility::Egalitarian).unwrap();
        assert_eq!(res.target_action, 2);
        assert_abs_diff_eq!(res.profile.x, 1.36, epsilon = 1e-12);
        assert_abs_diff_eq!(res.profile.y, 3.64f64.sqrt() - 1.0, epsilon = 1e-12);

        let i = inst(&[(1.0, 2.0), (0.5, 3.0)]);
        for k in SocialUtility::ALL {
            let res = plan(&i, &RiskAttitude::Neutral, k).unwrap();
            assert_eq!(res.target_action, 0);
            assert_eq!(res.profile, UtilityProfile::ORIGIN);
            assert_eq!(res.welfare_value, 0.0);
        }
    }

    #[test]
    fn neutral_usf_reports_segment() {
        let i = inst(&[(4.0, 2.0), (8.0, 3.0)]);
        let res = plan(&i, &RiskAttitude::Neutral, SocialUtility::Utilitarian).unwrap();
        assert_eq!(res.target_action, 2);
        assert_eq!(res.profile, UtilityProfile::new(2.5, 2.5));
        assert!(!res.unique);
        let seg = res.segment.unwrap();
        assert_eq!((seg.x_min, seg.x_max), (2.0, 5.0));
        for i in 0..=10 {
            let x = seg.x_min + (seg.x_max - seg.x_min) * i as f64 / 10.0;
            let p = UtilityProfile::new(x, 5.0 - x);
            assert_abs_diff_eq!(
                evaluate_welfare(SocialUtility::Utilitarian, &p),
                res.welfare_value
            );
        }
    }

    #[test]
    fn averse_af_segment_on_diagonal() {
        let i = inst(&[(0.5, 0.4), (5.0, 1.0)]);
        let res = plan(&i, &sqrt(), SocialUtility::ApproxFairness).unwrap();
        assert_eq!(res.target_action, 2);
        assert!(!res.unique);
        assert_eq!(res.welfare_value, 0.0);
        let seg = res.segment.unwrap();
        assert_eq!(seg.curve, SegmentCurve::Diagonal);
        assert_abs_diff_eq!(seg.x_max, 1.0, epsilon = 1e-12);
        for k in 0..=10 {
            let x = seg.x_min + (seg.x_max - seg.x_min) * k as f64 / 10.0;
            let p = UtilityProfile::new(x, x);
            assert!(action_set_contains(&i, &sqrt(), 2, &p).unwrap());
        }
    }

    #[test]
    fn af_falls_back_to_esf_profile() {
        let i = fig3a();
        let af = plan(&i, &sqrt(), SocialUtility::ApproxFairness).unwrap();
        let esf = plan(&i, &sqrt(), SocialUtility::Egalitarian).unwrap();
        assert!(af.unique);
        assert_eq!(af.target_action, esf.target_action);
        assert_eq!(af.profile, esf.profile);

        let i = inst(&[(6.0, 2.5), (8.0, 3.0)]);
        let af = plan(&i, &RiskAttitude::Neutral, SocialUtility::ApproxFairness).unwrap();
        let esf = plan(&i, &RiskAttitude::Neutral, SocialUtility::Egalitarian).unwrap();
        assert!(af.unique);
        assert_eq!(af.profile, esf.profile);
    }
}
