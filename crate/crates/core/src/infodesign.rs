//! Stage two: a binary-signal information structure whose equilibrium
//! realizes a target profile.
//!
//! Actions are split into two signal classes. The target action and every
//! strictly costlier action emit the "high" signal (index 0 here) with
//! probability `q` (1 for a neutral agent); the remaining cheaper actions emit
//! it with a smaller probability `p` chosen so that the agent is exactly
//! indifferent between the target and the cost-effective action under the
//! contract that pays only on the high signal.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    action_set_contains, hat_action, Instance, RiskAttitude, UtilityProfile, EPS_TOL,
};
use crate::numerics::{solve_v_ratio, ValueFunction};
use crate::planner::{plan, PlanResult, SocialUtility};

const ROW_SUM_TOL: f64 = 1e-12;

/// Row-stochastic map from non-default actions to signal distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InformationStructure {
    k: usize,
    /// `rows[a - 1]` is the signal distribution of action `a`.
    rows: Vec<Vec<f64>>,
}

impl InformationStructure {
    pub fn new(k: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if k == 0 {
            return Err(Error::DimensionMismatch(
                "an information structure needs at least one signal".into(),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "row for action {} has {} entries, expected {k}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::DimensionMismatch(format!(
                    "row for action {} has an entry outside [0, 1]",
                    i + 1
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::DimensionMismatch(format!(
                    "row for action {} sums to {sum}",
                    i + 1
                )));
            }
        }
        Ok(Self { k, rows })
    }

    /// Single-signal structure that reveals nothing.
    pub fn uninformative(n: usize) -> Self {
        Self {
            k: 1,
            rows: vec![vec![1.0]; n],
        }
    }

    fn binary(n: usize, high: impl Fn(usize) -> f64) -> Self {
        let rows = (1..=n)
            .map(|a| {
                let p = high(a);
                vec![p, 1.0 - p]
            })
            .collect();
        Self { k: 2, rows }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of non-default actions covered.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Signal distribution of non-default action `a`.
    pub fn row(&self, a: usize) -> &[f64] {
        &self.rows[a - 1]
    }
}

/// Signal-contingent transfers; limited liability keeps them nonnegative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub transfers: Vec<f64>,
}

impl Contract {
    pub fn new(transfers: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = transfers.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::OutOfDomain {
                what: "contract transfer",
                value: bad,
            });
        }
        Ok(Self { transfers })
    }

    pub fn zero(k: usize) -> Self {
        Self {
            transfers: vec![0.0; k],
        }
    }
}

/// Quantities the designed structure is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Auxiliaries {
    /// Default-action target; nothing to design.
    None,
    Neutral {
        s_star: f64,
        p_star: f64,
    },
    Averse {
        z_star: f64,
        p_star: f64,
        q_star: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOutput {
    pub structure: InformationStructure,
    pub predicted_contract: Contract,
    pub target_action: usize,
    pub target_profile: UtilityProfile,
    pub auxiliaries: Auxiliaries,
}

fn check_target(
    instance: &Instance,
    attitude: &RiskAttitude,
    a_star: usize,
    p: &UtilityProfile,
) -> Result<()> {
    if !action_set_contains(instance, attitude, a_star, p)? {
        return Err(Error::NotImplementable {
            action: a_star,
            x: p.x,
            y: p.y,
        });
    }
    Ok(())
}

/// Transfer paid on the high signal: `s* = r - x*` for a neutral agent, the
/// root `z*` of `v(z)/z = (y* + c)/(r - x*)` for an averse one.
pub fn transfer_for_profile(
    instance: &Instance,
    attitude: &RiskAttitude,
    a_star: usize,
    p: &UtilityProfile,
) -> Result<f64> {
    check_target(instance, attitude, a_star, p)?;
    let (r, c) = (instance.reward(a_star), instance.cost(a_star));
    match attitude {
        RiskAttitude::Neutral => Ok((r - p.x).max(0.0)),
        RiskAttitude::Averse(v) => {
            let gap = r - p.x;
            let lift = p.y + c;
            if gap <= EPS_TOL {
                if lift <= EPS_TOL {
                    return Ok(0.0);
                }
                return Err(Error::Degenerate(format!(
                    "principal keeps the full reward {r} but the agent needs {lift} > 0"
                )));
            }
            if lift <= 0.0 {
                return Err(Error::Degenerate(
                    "zero ratio target: the agent neither earns nor pays anything".into(),
                ));
            }
            solve_v_ratio(v.as_ref(), lift / gap)
        }
    }
}

pub fn design_neutral(
    instance: &Instance,
    a_star: usize,
    p: &UtilityProfile,
) -> Result<DesignOutput> {
    let attitude = RiskAttitude::Neutral;
    let s_star = transfer_for_profile(instance, &attitude, a_star, p)?;
    let hat = hat_action(instance);
    let c_star = instance.cost(a_star);
    let gap = c_star - instance.cost(hat);
    let n = instance.n();

    if s_star <= 0.0 {
        if gap > 0.0 {
            return Err(Error::Degenerate(format!(
                "zero transfer cannot separate action {a_star} from the cheaper action {hat}"
            )));
        }
        return Ok(DesignOutput {
            structure: InformationStructure::binary(n, |_| 1.0),
            predicted_contract: Contract::zero(2),
            target_action: a_star,
            target_profile: *p,
            auxiliaries: Auxiliaries::Neutral {
                s_star: 0.0,
                p_star: 1.0,
            },
        });
    }

    let p_star = clamp_unit(1.0 - gap / s_star, "p*")?;
    let structure = InformationStructure::binary(n, |i| {
        if i == a_star || instance.cost(i) > c_star {
            1.0
        } else {
            p_star
        }
    });
    Ok(DesignOutput {
        structure,
        predicted_contract: Contract {
            transfers: vec![s_star, 0.0],
        },
        target_action: a_star,
        target_profile: *p,
        auxiliaries: Auxiliaries::Neutral { s_star, p_star },
    })
}

pub fn design_averse(
    instance: &Instance,
    v: &Arc<dyn ValueFunction>,
    a_star: usize,
    p: &UtilityProfile,
) -> Result<DesignOutput> {
    let attitude = RiskAttitude::Averse(Arc::clone(v));
    let z_star = transfer_for_profile(instance, &attitude, a_star, p)?;
    let n = instance.n();
    let hat = hat_action(instance);
    let (r, c_star, c_hat) = (
        instance.reward(a_star),
        instance.cost(a_star),
        instance.cost(hat),
    );

    if z_star <= 0.0 {
        // The principal keeps the whole reward and the target action is free.
        return Ok(DesignOutput {
            structure: InformationStructure::binary(n, |_| 1.0),
            predicted_contract: Contract::zero(2),
            target_action: a_star,
            target_profile: *p,
            auxiliaries: Auxiliaries::Averse {
                z_star: 0.0,
                p_star: 1.0,
                q_star: 1.0,
            },
        });
    }

    let q_star = clamp_unit((r - p.x) / z_star, "q*")?;
    // Ratio first: with c_hat <= c_star it rounds to at most 1, so p* <= q*.
    let p_star = clamp_unit(q_star * ((p.y + c_hat) / (p.y + c_star)), "p*")?;
    if p_star > q_star + EPS_TOL {
        return Err(Error::Degenerate(format!(
            "p* = {p_star} exceeds q* = {q_star}"
        )));
    }
    let structure = InformationStructure::binary(n, |i| {
        if i == a_star || instance.cost(i) > c_star {
            q_star
        } else {
            p_star
        }
    });
    Ok(DesignOutput {
        structure,
        predicted_contract: Contract {
            transfers: vec![z_star, 0.0],
        },
        target_action: a_star,
        target_profile: *p,
        auxiliaries: Auxiliaries::Averse {
            z_star,
            p_star,
            q_star,
        },
    })
}

/// Designs for an already computed plan.
pub fn design_for_plan(
    instance: &Instance,
    attitude: &RiskAttitude,
    planned: &PlanResult,
) -> Result<DesignOutput> {
    if planned.target_action == 0 {
        return Ok(DesignOutput {
            structure: InformationStructure::uninformative(instance.n()),
            predicted_contract: Contract::zero(1),
            target_action: 0,
            target_profile: planned.profile,
            auxiliaries: Auxiliaries::None,
        });
    }
    match attitude {
        RiskAttitude::Neutral => design_neutral(instance, planned.target_action, &planned.profile),
        RiskAttitude::Averse(v) => {
            design_averse(instance, v, planned.target_action, &planned.profile)
        }
    }
}

/// Plans and then designs.
pub fn design(
    instance: &Instance,
    attitude: &RiskAttitude,
    kind: SocialUtility,
) -> Result<DesignOutput> {
    let planned = plan(instance, attitude, kind)?;
    design_for_plan(instance, attitude, &planned)
}

fn clamp_unit(value: f64, what: &'static str) -> Result<f64> {
    if !(-EPS_TOL..=1.0 + EPS_TOL).contains(&value) {
        return Err(Error::OutOfDomain { what, value });
    }
    Ok(value.clamp(0.0, 1.0))
}
