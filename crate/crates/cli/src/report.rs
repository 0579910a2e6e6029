//! The plan, design and verify pipeline and its JSON report.

use std::io::Write;

use infodesign::equilibrium::verify_design;
use infodesign::model::surplus;
use infodesign::{
    design_for_plan, frontier, hat_action, implementable_actions, plan, principal_floor,
    Auxiliaries, Contract, GridConfig, InformationStructure, Instance, RiskAttitude, Segment,
    SocialUtility, UtilityProfile, VerificationReport,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Stage};

/// Profile error allowed on top of the grid's own `2 * step`.
pub const VERIFY_TOL: f64 = 1e-6;

/// How far down the pipeline to go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Depth {
    Plan,
    Design,
    Verify,
    /// Verification plus frontier samples.
    Everything,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridOverrides {
    pub step: Option<f64>,
    pub transfer_max: Option<f64>,
}

impl GridOverrides {
    /// Default grid for the instance with any overrides applied. Overriding
    /// only `transfer_max` keeps the step at a thousandth of it.
    pub fn resolve(
        &self,
        instance: &Instance,
        attitude: &RiskAttitude,
    ) -> Result<GridConfig, CliError> {
        let mut grid = GridConfig::for_instance(instance, attitude);
        if let Some(tm) = self.transfer_max {
            grid = grid.with_transfer_max(tm).with_step(1e-3 * tm);
        }
        if let Some(step) = self.step {
            grid = grid.with_step(step);
        }
        grid.validate().map_err(CliError::at(Stage::Verify))?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub action: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub welfare: SocialUtility,
    pub hat_action: usize,
    pub principal_floor: f64,
    pub implementable_actions: Vec<usize>,
    pub target_action: usize,
    pub profile: UtilityProfile,
    pub welfare_value: f64,
    pub unique: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment: Option<Segment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info_structure: Option<InformationStructure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_contract: Option<Contract>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auxiliaries: Option<Auxiliaries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frontier: Option<Vec<FrontierPoint>>,
}

impl PlanReport {
    /// `Err` when the report carries a failed verification.
    pub fn check_verified(&self) -> Result<(), CliError> {
        match &self.verification {
            Some(v) if !v.passed => Err(CliError::VerificationFailed {
                target_action: self.target_action,
                induced_action: v.induced_action,
                max_abs_err: v.max_abs_err,
                tolerance: v.tolerance,
            }),
            _ => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self)
            .expect("reports contain only finite numbers and plain data")
    }
}

pub fn run_pipeline(
    instance: &Instance,
    attitude: &RiskAttitude,
    kind: SocialUtility,
    overrides: GridOverrides,
    depth: Depth,
    samples: usize,
) -> Result<PlanReport, CliError> {
    let planned = plan(instance, attitude, kind).map_err(CliError::at(Stage::Plan))?;
    let mut report = PlanReport {
        welfare: kind,
        hat_action: hat_action(instance),
        principal_floor: principal_floor(instance, attitude),
        implementable_actions: implementable_actions(instance, attitude),
        target_action: planned.target_action,
        profile: planned.profile,
        welfare_value: planned.welfare_value,
        unique: planned.unique,
        segment: planned.segment,
        info_structure: None,
        predicted_contract: None,
        auxiliaries: None,
        grid: None,
        verification: None,
        frontier: None,
    };
    if depth < Depth::Design {
        return Ok(report);
    }

    let designed =
        design_for_plan(instance, attitude, &planned).map_err(CliError::at(Stage::Design))?;
    report.info_structure = Some(designed.structure.clone());
    report.predicted_contract = Some(designed.predicted_contract.clone());
    report.auxiliaries = Some(designed.auxiliaries);
    if depth < Depth::Verify {
        return Ok(report);
    }

    let grid = overrides.resolve(instance, attitude)?;
    let verification = verify_design(instance, attitude, &designed, VERIFY_TOL, &grid)
        .map_err(CliError::at(Stage::Verify))?;
    report.grid = Some(grid);
    report.verification = Some(verification);
    if depth == Depth::Everything {
        report.frontier = Some(frontier_points(instance, attitude, samples)?);
    }
    Ok(report)
}

/// Uniform samples of each implementable action's frontier between the
/// principal's floor and the point where the agent's utility hits zero.
pub fn frontier_points(
    instance: &Instance,
    attitude: &RiskAttitude,
    samples: usize,
) -> Result<Vec<FrontierPoint>, CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be at least 1".into()));
    }
    let floor = principal_floor(instance, attitude);
    let mut out = Vec::new();
    for a in implementable_actions(instance, attitude) {
        let x_max = surplus(instance, attitude, a).max(floor);
        for i in 0..samples {
            let x = if samples == 1 {
                floor
            } else {
                floor + (x_max - floor) * (i as f64 / (samples - 1) as f64)
            };
            let y = frontier(instance, attitude, a, x).map_err(CliError::at(Stage::Frontier))?;
            out.push(FrontierPoint { action: a, x, y });
        }
    }
    Ok(out)
}

/// CSV with header `action,x,y` and 17 significant digits per value.
pub fn write_frontier_csv<W: Write>(mut w: W, points: &[FrontierPoint]) -> std::io::Result<()> {
    writeln!(w, "action,x,y")?;
    for p in points {
        writeln!(w, "{},{:.16e},{:.16e}", p.action, p.x, p.y)?;
    }
    Ok(())
}
