//! Social planner workflow for the principal-agent problem.
//!
//! Stage one ([`planner`]) picks the implementable utility profile that
//! maximizes a social utility function. Stage two ([`infodesign`]) builds a
//! binary-signal information structure under which the principal's optimal
//! contract induces exactly that profile. The [`equilibrium`] module holds
//! brute-force oracles for both stages.
//!
//! ```
//! use infodesign::{design, plan, verify_design, GridConfig, Instance, PowerValue, RiskAttitude, SocialUtility};
//!
//! let instance = Instance::from_pairs(&[(2.0, 0.8), (5.0, 1.0)])?;
//! let agent = RiskAttitude::averse(PowerValue::sqrt());
//!
//! let planned = plan(&instance, &agent, SocialUtility::NashProduct)?;
//! assert_eq!(planned.target_action, 2);
//!
//! let designed = design(&instance, &agent, SocialUtility::NashProduct)?;
//! let grid = GridConfig::for_instance(&instance, &agent);
//! let report = verify_design(&instance, &agent, &designed, 1e-6, &grid)?;
//! assert!(report.passed);
//! # Ok::<(), infodesign::Error>(())
//! ```

pub mod equilibrium;
pub mod error;
pub mod infodesign;
pub mod model;
pub mod numerics;
pub mod planner;

pub use equilibrium::{
    agent_best_response, brute_force_plan, brute_force_sweep, principal_best_contract,
    verify_design, ContractMode, EquilibriumOutcome, GridConfig, Sweep, VerificationReport,
};
pub use error::{Error, Result};
pub use infodesign::{
    design, design_averse, design_for_plan, design_neutral, transfer_for_profile, Auxiliaries,
    Contract, DesignOutput, InformationStructure,
};
pub use model::{
    action_set_contains, frontier, hat_action, implementable_actions, is_action_implementable,
    is_profile_implementable, principal_floor, ActionSpec, Instance, RiskAttitude, UtilityProfile,
    EPS_TOL,
};
pub use numerics::{PowerValue, ValueFunction};
pub use planner::{
    evaluate_welfare, plan, plan_action, PlanResult, Segment, SegmentCurve, SocialUtility,
};
