//! Common knowledge of the game: actions, the agent's risk attitude, utility
//! profiles and the implementability predicates.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ValueFunction;

/// Absolute tolerance for every implementability comparison.
pub const EPS_TOL: f64 = 1e-9;

/// Expected reward and deterministic cost of one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub reward: f64,
    pub cost: f64,
}

impl ActionSpec {
    pub fn new(reward: f64, cost: f64) -> Self {
        Self { reward, cost }
    }
}

/// Actions `0..=n`; action 0 is the zero-reward, zero-cost default.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    actions: Vec<ActionSpec>,
}

impl Instance {
    /// Builds an instance from the full action list, default action included.
    pub fn new(actions: Vec<ActionSpec>) -> Result<Self> {
        if actions.len() < 2 {
            return Err(Error::InvalidInstance(
                "at least one non-default action is required".into(),
            ));
        }
        for (i, a) in actions.iter().enumerate() {
            if !(a.reward.is_finite() && a.reward >= 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "action {i}: reward must be finite and nonnegative, got {}",
                    a.reward
                )));
            }
            if !(a.cost.is_finite() && a.cost >= 0.0) {
                return Err(Error::InvalidInstance(format!(
                    "action {i}: cost must be finite and nonnegative, got {}",
                    a.cost
                )));
            }
        }
        if actions[0].reward != 0.0 || actions[0].cost != 0.0 {
            return Err(Error::InvalidInstance(
                "action 0 must have zero reward and zero cost".into(),
            ));
        }
        Ok(Self { actions })
    }

    /// Builds an instance from `(reward, cost)` pairs of the non-default
    /// actions; the default action is prepended.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let mut actions = Vec::with_capacity(pairs.len() + 1);
        actions.push(ActionSpec::new(0.0, 0.0));
        actions.extend(pairs.iter().map(|&(r, c)| ActionSpec::new(r, c)));
        Self::new(actions)
    }

    /// Number of non-default actions.
    pub fn n(&self) -> usize {
        self.actions.len() - 1
    }

    pub fn actions(&self) -> &[ActionSpec] {
        &self.actions
    }

    pub fn reward(&self, a: usize) -> f64 {
        self.actions[a].reward
    }

    pub fn cost(&self, a: usize) -> f64 {
        self.actions[a].cost
    }

    /// Non-default action indices `1..=n`.
    pub fn action_indices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.n()
    }

    pub fn check_index(&self, a: usize) -> Result<()> {
        if a > self.n() {
            Err(Error::ActionOutOfRange {
                index: a,
                max: self.n(),
            })
        } else {
            Ok(())
        }
    }

    pub fn check_non_default(&self, a: usize) -> Result<()> {
        self.check_index(a)?;
        if a == 0 {
            Err(Error::ActionOutOfRange {
                index: 0,
                max: self.n(),
            })
        } else {
            Ok(())
        }
    }

    /// Returns a copy with every reward and cost multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.actions
                .iter()
                .map(|a| ActionSpec::new(a.reward * factor, a.cost * factor))
                .collect(),
        )
    }
}

/// The agent's attitude towards monetary transfers.
#[derive(Clone)]
pub enum RiskAttitude {
    Neutral,
    Averse(Arc<dyn ValueFunction>),
}

impl RiskAttitude {
    pub fn averse<V: ValueFunction + 'static>(v: V) -> Self {
        RiskAttitude::Averse(Arc::new(v))
    }

    pub fn value_function(&self) -> Option<&dyn ValueFunction> {
        match self {
            RiskAttitude::Neutral => None,
            RiskAttitude::Averse(v) => Some(v.as_ref()),
        }
    }

    pub fn is_neutral(&self) -> bool {
        matches!(self, RiskAttitude::Neutral)
    }

    /// Monetary equivalent of a cost: `c` or `v^{-1}(c)`.
    pub fn cost_equivalent(&self, cost: f64) -> f64 {
        match self {
            RiskAttitude::Neutral => cost,
            RiskAttitude::Averse(v) => v.inverse(cost),
        }
    }
}

impl fmt::Debug for RiskAttitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RiskAttitude::Neutral => f.write_str("Neutral"),
            RiskAttitude::Averse(v) => f.debug_tuple("Averse").field(v).finish(),
        }
    }
}

/// Expected utilities `(x, y)` of the principal and the agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityProfile {
    pub x: f64,
    pub y: f64,
}

impl UtilityProfile {
    pub const ORIGIN: UtilityProfile = UtilityProfile { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn max_abs_diff(&self, other: &UtilityProfile) -> f64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

/// The cost-effective action: least cost among `1..=n`, then highest reward,
/// then lowest index.
pub fn hat_action(instance: &Instance) -> usize {
    let mut best = 1;
    for a in instance.action_indices().skip(1) {
        let (cb, rb) = (instance.cost(best), instance.reward(best));
        let (ca, ra) = (instance.cost(a), instance.reward(a));
        if ca < cb || (ca == cb && ra > rb) {
            best = a;
        }
    }
    best
}

/// `r_a - c_a` for a neutral agent, `r_a - v^{-1}(c_a)` for an averse one.
pub fn surplus(instance: &Instance, attitude: &RiskAttitude, a: usize) -> f64 {
    instance.reward(a) - attitude.cost_equivalent(instance.cost(a))
}

/// Lower bound on the principal's equilibrium utility:
/// `max{0, r_hat - c_hat}` or `max{0, r_hat - v^{-1}(c_hat)}`.
pub fn principal_floor(instance: &Instance, attitude: &RiskAttitude) -> f64 {
    surplus(instance, attitude, hat_action(instance)).max(0.0)
}

/// Whether some information structure makes `a` the equilibrium action.
pub fn is_action_implementable(
    instance: &Instance,
    attitude: &RiskAttitude,
    a: usize,
) -> Result<bool> {
    instance.check_index(a)?;
    if a == 0 {
        return Ok(true);
    }
    Ok(surplus(instance, attitude, a) >= principal_floor(instance, attitude) - EPS_TOL)
}

/// All implementable non-default actions, in index order.
pub fn implementable_actions(instance: &Instance, attitude: &RiskAttitude) -> Vec<usize> {
    let floor = principal_floor(instance, attitude);
    instance
        .action_indices()
        .filter(|&a| surplus(instance, attitude, a) >= floor - EPS_TOL)
        .collect()
}

/// Largest principal utility on action `a`'s frontier with `y >= 0`:
/// `r_a - c_a` or `r_a - v^{-1}(c_a)`.
pub fn frontier_x_max(instance: &Instance, attitude: &RiskAttitude, a: usize) -> f64 {
    surplus(instance, attitude, a)
}

/// The agent's utility on action `a`'s frontier at principal utility `x`.
///
/// Neutral: the line `y = r_a - c_a - x`, defined for `x <= r_a`.
/// Averse: the curve `y = v(r_a - x) - c_a`, defined for `x <= r_a`.
pub fn frontier(instance: &Instance, attitude: &RiskAttitude, a: usize, x: f64) -> Result<f64> {
    instance.check_non_default(a)?;
    let (r, c) = (instance.reward(a), instance.cost(a));
    if !x.is_finite() || x > r + EPS_TOL {
        return Err(Error::OutOfDomain {
            what: "frontier",
            value: x,
        });
    }
    Ok(match attitude {
        RiskAttitude::Neutral => r - c - x,
        RiskAttitude::Averse(v) => v.eval((r - x).max(0.0)) - c,
    })
}

/// Whether `p` lies in `F_a` intersected with the implementable set, for a
/// specific non-default action `a`.
pub fn action_set_contains(
    instance: &Instance,
    attitude: &RiskAttitude,
    a: usize,
    p: &UtilityProfile,
) -> Result<bool> {
    instance.check_non_default(a)?;
    let floor = principal_floor(instance, attitude);
    if p.x < floor - EPS_TOL || p.y < -EPS_TOL {
        return Ok(false);
    }
    let (r, c) = (instance.reward(a), instance.cost(a));
    if p.x > r + EPS_TOL {
        return Ok(false);
    }
    Ok(match attitude {
        RiskAttitude::Neutral => (p.x + p.y - (r - c)).abs() <= EPS_TOL,
        RiskAttitude::Averse(v) => p.y <= v.eval((r - p.x).max(0.0)) - c + EPS_TOL,
    })
}

/// Returns a witness action for an implementable profile: 0 for the origin,
/// otherwise the lowest-index action whose set contains `p`.
pub fn is_profile_implementable(
    instance: &Instance,
    attitude: &RiskAttitude,
    p: &UtilityProfile,
) -> Option<usize> {
    if p.x.abs() <= EPS_TOL && p.y.abs() <= EPS_TOL {
        return Some(0);
    }
    instance
        .action_indices()
        .find(|&a| action_set_contains(instance, attitude, a, p).unwrap_or(false))
}
