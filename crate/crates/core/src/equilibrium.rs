//! Brute-force oracles for both stages.
//!
//! Nothing in here uses the planner's closed forms or the designer's
//! formulas. The Stackelberg game is played out directly: the agent best
//! responds to every contract on a transfer grid, the principal keeps the
//! contract that pays her most, and the resulting profile is compared against
//! the designed target.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infodesign::{Contract, DesignOutput, InformationStructure};
use crate::model::{
    frontier, implementable_actions, principal_floor, surplus, Instance, RiskAttitude,
    UtilityProfile,
};
use crate::numerics::{solve_monotone, SOLVER_TOL};
use crate::planner::{evaluate_welfare, PlanResult, SocialUtility};

pub const DEFAULT_TIE_TOL: f64 = 1e-9;
const DEFAULT_MAX_EVALUATIONS: u128 = 50_000_000;
const DEFAULT_REFINEMENTS: u32 = 2;
/// Points on each side of the incumbent in a refinement window.
const REFINE_HALF_WIDTH: usize = 20;
const FULL_MODE_MAX_SIGNALS: usize = 3;

/// Transfer grid for the principal's contract search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub transfer_max: f64,
    pub step: f64,
    /// Agent utilities within this distance count as ties.
    pub tie_tol: f64,
    pub max_evaluations: u128,
    /// Zoom passes around the incumbent after the coarse sweep. Each pass
    /// divides the step by `REFINE_HALF_WIDTH`.
    pub refinements: u32,
}

impl GridConfig {
    pub fn new(transfer_max: f64, step: f64) -> Result<Self> {
        let grid = GridConfig {
            transfer_max,
            step,
            tie_tol: DEFAULT_TIE_TOL,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
            refinements: DEFAULT_REFINEMENTS,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Default grid: `transfer_max` covers every transfer a target can need,
    /// and the step is a thousandth of it.
    pub fn for_instance(instance: &Instance, attitude: &RiskAttitude) -> Self {
        let transfer_max = default_transfer_max(instance, attitude);
        GridConfig {
            transfer_max,
            step: 1e-3 * transfer_max,
            tie_tol: DEFAULT_TIE_TOL,
            max_evaluations: DEFAULT_MAX_EVALUATIONS,
            refinements: DEFAULT_REFINEMENTS,
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_transfer_max(mut self, transfer_max: f64) -> Self {
        self.transfer_max = transfer_max;
        self
    }

    pub fn with_refinements(mut self, refinements: u32) -> Self {
        self.refinements = refinements;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.transfer_max.is_finite() && self.transfer_max >= self.step) {
            return Err(Error::InvalidGrid(format!(
                "transfer_max {} must be at least the step {}",
                self.transfer_max, self.step
            )));
        }
        if self.tie_tol.is_nan() || self.tie_tol < 0.0 {
            return Err(Error::InvalidGrid(format!(
                "tie_tol must be nonnegative, got {}",
                self.tie_tol
            )));
        }
        Ok(())
    }

    /// Number of grid values per transfer coordinate.
    pub fn points(&self) -> usize {
        (self.transfer_max / self.step + 1e-9).floor() as usize + 1
    }

    fn value(&self, i: usize) -> f64 {
        (i as f64 * self.step).min(self.transfer_max)
    }
}

fn default_transfer_max(instance: &Instance, attitude: &RiskAttitude) -> f64 {
    let max_r = instance
        .actions()
        .iter()
        .map(|a| a.reward)
        .fold(0.0, f64::max);
    let max_c = instance
        .actions()
        .iter()
        .map(|a| a.cost)
        .fold(0.0, f64::max);
    let bound = match attitude {
        RiskAttitude::Neutral => 2.0 * max_r,
        RiskAttitude::Averse(v) => (2.0 * max_r).max(v.inverse(v.eval(max_r) + max_c)),
    };
    if bound > 0.0 {
        bound
    } else {
        1.0
    }
}

/// Which contracts the principal searches over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractMode {
    /// Every transfer vector on the grid (`k <= 3`).
    Full,
    /// Only the first signal pays; all other transfers are zero.
    LowZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOutcome {
    pub contract: Contract,
    pub action: usize,
    /// `(principal utility, agent utility)` under `contract` and `action`.
    pub profile: UtilityProfile,
}

fn check_dimensions(
    instance: &Instance,
    structure: &InformationStructure,
    contract: &[f64],
) -> Result<()> {
    if structure.n() != instance.n() {
        return Err(Error::DimensionMismatch(format!(
            "structure covers {} actions, instance has {}",
            structure.n(),
            instance.n()
        )));
    }
    if contract.len() != structure.k() {
        return Err(Error::DimensionMismatch(format!(
            "contract has {} transfers, structure has {} signals",
            contract.len(),
            structure.k()
        )));
    }
    Ok(())
}

// Agent's choice plus the resulting (principal, agent) utilities. `valued`
// holds v(t_j) (or t_j itself for a neutral agent).
fn respond(
    instance: &Instance,
    structure: &InformationStructure,
    transfers: &[f64],
    valued: &[f64],
    tie_tol: f64,
) -> (usize, UtilityProfile) {
    let n = instance.n();
    let mut agent = Vec::with_capacity(n + 1);
    let mut principal = Vec::with_capacity(n + 1);
    agent.push(0.0);
    principal.push(0.0);
    for a in 1..=n {
        let row = structure.row(a);
        let mut paid = 0.0;
        let mut felt = 0.0;
        for ((&p, &t), &vt) in row.iter().zip(transfers).zip(valued) {
            paid += p * t;
            felt += p * vt;
        }
        agent.push(felt - instance.cost(a));
        principal.push(instance.reward(a) - paid);
    }
    let top = agent.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best = 0;
    let mut best_set = false;
    for a in 0..=n {
        if agent[a] >= top - tie_tol && (!best_set || principal[a] > principal[best]) {
            best = a;
            best_set = true;
        }
    }
    (best, UtilityProfile::new(principal[best], agent[best]))
}

fn valued_transfers(attitude: &RiskAttitude, transfers: &[f64]) -> Vec<f64> {
    match attitude {
        RiskAttitude::Neutral => transfers.to_vec(),
        RiskAttitude::Averse(v) => transfers.iter().map(|&t| v.eval(t)).collect(),
    }
}

/// The agent's action under contract `t`, breaking ties in the principal's
/// favor and then towards the lowest index.
pub fn agent_best_response(
    instance: &Instance,
    attitude: &RiskAttitude,
    structure: &InformationStructure,
    contract: &Contract,
) -> Result<usize> {
    agent_best_response_with_tol(instance, attitude, structure, contract, DEFAULT_TIE_TOL)
}

pub fn agent_best_response_with_tol(
    instance: &Instance,
    attitude: &RiskAttitude,
    structure: &InformationStructure,
    contract: &Contract,
    tie_tol: f64,
) -> Result<usize> {
    Ok(play(instance, attitude, structure, contract, tie_tol)?.action)
}

/// Plays out one contract.
pub fn play(
    instance: &Instance,
    attitude: &RiskAttitude,
    structure: &InformationStructure,
    contract: &Contract,
    tie_tol: f64,
) -> Result<EquilibriumOutcome> {
    check_dimensions(instance, structure, &contract.transfers)?;
    let valued = valued_transfers(attitude, &contract.transfers);
    let (action, profile) = respond(instance, structure, &contract.transfers, &valued, tie_tol);
    Ok(EquilibriumOutcome {
        contract: contract.clone(),
        action,
        profile,
    })
}

#[derive(Debug, Clone)]
struct Candidate {
    transfers: Vec<f64>,
    action: usize,
    profile: UtilityProfile,
}

// Principal utility first, then the lexicographically smaller contract.
fn better(a: &Candidate, b: &Candidate) -> bool {
    match a.profile.x.total_cmp(&b.profile.x) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => lex_cmp(&a.transfers, &b.transfers) == Ordering::Less,
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

// Best candidate per induced action.
type PerAction = Vec<Option<Candidate>>;

fn merge(mut acc: PerAction, other: PerAction) -> PerAction {
    for (slot, cand) in acc.iter_mut().zip(other) {
        if let Some(c) = cand {
            match slot {
                Some(s) if !better(&c, s) => {}
                _ => *slot = Some(c),
            }
        }
    }
    acc
}

struct Search<'a> {
    instance: &'a Instance,
    attitude: &'a RiskAttitude,
    structure: &'a InformationStructure,
    tie_tol: f64,
}

impl Search<'_> {
    fn evaluate(&self, transfers: Vec<f64>) -> Candidate {
        let valued = valued_transfers(self.attitude, &transfers);
        let (action, profile) = respond(
            self.instance,
            self.structure,
            &transfers,
            &valued,
            self.tie_tol,
        );
        Candidate {
            transfers,
            action,
            profile,
        }
    }

    // Sweeps `axes[0] x axes[1] x ...` (missing coordinates are zero) split
    // into `chunks` contiguous index ranges.
    fn sweep(&self, axes: &[Vec<f64>], k: usize, chunks: usize) -> PerAction {
        let n_actions = self.instance.n() + 1;
        let total: usize = axes.iter().map(Vec::len).product();
        let chunks = chunks.clamp(1, total.max(1));
        let chunk_len = total.div_ceil(chunks);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut local: PerAction = vec![None; n_actions];
                let start = c * chunk_len;
                let end = ((c + 1) * chunk_len).min(total);
                for idx in start..end {
                    let mut transfers = vec![0.0; k];
                    let mut rest = idx;
                    for (j, axis) in axes.iter().enumerate().rev() {
                        transfers[j] = axis[rest % axis.len()];
                        rest /= axis.len();
                    }
                    let cand = self.evaluate(transfers);
                    let slot = &mut local[cand.action];
                    if slot.as_ref().map_or(true, |s| better(&cand, s)) {
                        *slot = Some(cand);
                    }
                }
                local
            })
            .reduce(|| vec![None; n_actions], merge)
    }
}

/// Exhaustive grid search for the principal's optimal contract.
///
/// The coarse sweep keeps the best contract per induced action. Outcomes
/// whose principal utility is within one grid step of the best are treated
/// as indifferent for the principal, and among those the one leaving the
/// agent better off is played (then higher principal utility, then lowest
/// action). Refinement passes then zoom in on the chosen action's contract.
/// The result does not depend on how the grid is split across threads.
pub fn principal_best_contract(
    instance: &Instance,
    attitude: &RiskAttitude,
    structure: &InformationStructure,
    grid: &GridConfig,
    mode: ContractMode,
) -> Result<EquilibriumOutcome> {
    principal_best_contract_chunked(
        instance,
        attitude,
        structure,
        grid,
        mode,
        rayon::current_num_threads() * 8,
    )
}

pub(crate) fn principal_best_contract_chunked(
    instance: &Instance,
    attitude: &RiskAttitude,
    structure: &InformationStructure,
    grid: &GridConfig,
    mode: ContractMode,
    chunks: usize,
) -> Result<EquilibriumOutcome> {
    grid.validate()?;
    let k = structure.k();
    check_dimensions(instance, structure, &vec![0.0; k])?;
    let m = grid.points();
    let free = match mode {
        ContractMode::LowZero => 1,
        ContractMode::Full => {
            if k > FULL_MODE_MAX_SIGNALS {
                return Err(Error::InvalidGrid(format!(
                    "full contract search supports at most {FULL_MODE_MAX_SIGNALS} signals, structure has {k}"
                )));
            }
            k
        }
    };
    let evaluations = (m as u128).saturating_pow(free as u32);
    if evaluations > grid.max_evaluations {
        return Err(Error::GridTooLarge {
            evaluations,
            cap: grid.max_evaluations,
        });
    }

    let search = Search {
        instance,
        attitude,
        structure,
        tie_tol: grid.tie_tol,
    };
    let axis: Vec<f64> = (0..m).map(|i| grid.value(i)).collect();
    let axes = vec![axis; free];
    let per_action = search.sweep(&axes, k, chunks);

    let top = per_action
        .iter()
        .flatten()
        .map(|c| c.profile.x)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut chosen: Option<&Candidate> = None;
    for cand in per_action.iter().flatten() {
        if cand.profile.x < top - grid.step {
            continue;
        }
        let replace = match chosen {
            None => true,
            Some(c) => match cand.profile.y.total_cmp(&c.profile.y) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => cand.profile.x > c.profile.x,
            },
        };
        if replace {
            chosen = Some(cand);
        }
    }
    let mut incumbent = chosen.expect("the grid is never empty").clone();

    let mut h = grid.step;
    for _ in 0..grid.refinements {
        let fine = h / REFINE_HALF_WIDTH as f64;
        let axes: Vec<Vec<f64>> = incumbent.transfers[..free]
            .iter()
            .map(|&center| {
                (0..=2 * REFINE_HALF_WIDTH)
                    .map(|i| center + (i as f64 - REFINE_HALF_WIDTH as f64) * fine)
                    .filter(|&t| (0.0..=grid.transfer_max).contains(&t))
                    .collect()
            })
            .collect();
        let found = search.sweep(&axes, k, chunks);
        if let Some(c) = &found[incumbent.action] {
            if better(c, &incumbent) {
                incumbent = c.clone();
            }
        }
        h = fine;
    }

    Ok(EquilibriumOutcome {
        contract: Contract {
            transfers: incumbent.transfers,
        },
        action: incumbent.action,
        profile: incumbent.profile,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub induced_action: usize,
    pub induced_profile: UtilityProfile,
    pub induced_contract: Contract,
    pub max_abs_err: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Plays the designed structure against the grid-searched principal and
/// checks that the target action and profile come out.
pub fn verify_design(
    instance: &Instance,
    attitude: &RiskAttitude,
    design: &DesignOutput,
    tol: f64,
    grid: &GridConfig,
) -> Result<VerificationReport> {
    verify_design_with_mode(instance, attitude, design, tol, grid, ContractMode::LowZero)
}

pub fn verify_design_with_mode(
    instance: &Instance,
    attitude: &RiskAttitude,
    design: &DesignOutput,
    tol: f64,
    grid: &GridConfig,
    mode: ContractMode,
) -> Result<VerificationReport> {
    let outcome = principal_best_contract(instance, attitude, &design.structure, grid, mode)?;
    let max_abs_err = outcome.profile.max_abs_diff(&design.target_profile);
    let tolerance = tol + 2.0 * grid.step;
    Ok(VerificationReport {
        induced_action: outcome.action,
        induced_profile: outcome.profile,
        induced_contract: outcome.contract,
        max_abs_err,
        tolerance,
        passed: outcome.action == design.target_action && max_abs_err <= tolerance,
    })
}

/// Brute-force planner output plus the spread of welfare seen while sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub best: PlanResult,
    pub welfare_min: f64,
    pub welfare_max: f64,
}

impl Sweep {
    pub fn welfare_range(&self) -> f64 {
        self.welfare_max - self.welfare_min
    }
}

/// Samples every implementable action's frontier uniformly and keeps the best
/// welfare.
pub fn brute_force_plan(
    instance: &Instance,
    attitude: &RiskAttitude,
    kind: SocialUtility,
    samples: usize,
) -> PlanResult {
    brute_force_sweep(instance, attitude, kind, samples).best
}

pub fn brute_force_sweep(
    instance: &Instance,
    attitude: &RiskAttitude,
    kind: SocialUtility,
    samples: usize,
) -> Sweep {
    let samples = samples.max(1);
    let floor = principal_floor(instance, attitude);
    let mut best: Option<(usize, UtilityProfile, f64)> = None;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);

    let mut consider = |a: usize, p: UtilityProfile| {
        let w = evaluate_welfare(kind, &p);
        lo = lo.min(w);
        hi = hi.max(w);
        let replace = match &best {
            None => true,
            Some((_, bp, bw)) => {
                if kind == SocialUtility::ApproxFairness && (w - bw).abs() <= 1e-12 {
                    p.x + p.y > bp.x + bp.y
                } else {
                    w > *bw
                }
            }
        };
        if replace {
            best = Some((a, p, w));
        }
    };

    for a in implementable_actions(instance, attitude) {
        let x_max = surplus(instance, attitude, a).max(floor);
        let on_frontier = |x: f64| {
            frontier(instance, attitude, a, x).expect("x stays within the action's reward")
        };
        for i in 0..samples {
            let x = if samples == 1 {
                floor
            } else {
                floor + (x_max - floor) * (i as f64 / (samples - 1) as f64)
            };
            consider(a, UtilityProfile::new(x, on_frontier(x)));
        }
        if kind == SocialUtility::ApproxFairness && on_frontier(floor) >= floor {
            // Frontier minus diagonal decreases in x, so the crossing is unique.
            if let Ok(x) = solve_monotone(|x| on_frontier(x) - x, floor, x_max, SOLVER_TOL) {
                consider(a, UtilityProfile::new(x, x));
            }
        }
    }

    match best {
        None => {
            let w = evaluate_welfare(kind, &UtilityProfile::ORIGIN);
            Sweep {
                best: PlanResult::default_only(kind),
                welfare_min: w,
                welfare_max: w,
            }
        }
        Some((target_action, profile, welfare_value)) => Sweep {
            best: PlanResult {
                target_action,
                profile,
                welfare_value,
                unique: true,
                segment: None,
            },
            welfare_min: lo,
            welfare_max: hi,
        },
    }
}
