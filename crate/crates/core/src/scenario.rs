//! The eight intervention cases and their comparison.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::config::{case_mask, ControlMask, FbsSettings, ScenarioSpec};
use crate::error::{Result, SeiqrError};
use crate::fbs::{run_fbs_from, FbsResult};
use crate::forward::{ControlTrajectory, StateSnapshot};
use crate::objective::CostBreakdown;

/// Case ids from largest to smallest expected cost.
pub const EXPECTED_ORDER: [u8; 8] = [1, 4, 3, 2, 7, 6, 5, 8];

/// Relative gap required between consecutive cases of [`EXPECTED_ORDER`].
pub const ORDER_MARGIN: f64 = 1e-4;

/// Relative slack allowed in the feasible-set nesting inequalities.
pub const NESTING_TOL: f64 = 1e-6;

/// Hotspot initial condition on the scenario grid.
pub fn build_initial_condition(spec: &ScenarioSpec) -> StateSnapshot {
    let grid = spec.disc.grid();
    let ic = &spec.ic;
    let mut state = StateSnapshot::uniform(grid, [ic.background_s, 0.0, 0.0, 0.0, 0.0], 0.0);
    let cell = grid.index(ic.hotspot.0, ic.hotspot.1);
    for (c, fraction) in ic.hotspot_fractions.iter().enumerate() {
        state.fields[c][cell] = fraction * ic.background_s;
    }
    state
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub case_id: u8,
    pub active: ControlMask,
    pub cost: CostBreakdown,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
    /// Smallest state value over every forward solve of the sweep.
    pub min_state: f64,
    /// Largest envelope excess over every forward solve (<= 0 when bounded).
    pub envelope_excess: f64,
}

/// Runs the sweep for one case from zero controls and keeps the full result.
pub fn run_case_full(case_id: u8, spec: &ScenarioSpec, settings: &FbsSettings) -> Result<(CaseReport, FbsResult)> {
    let initial = ControlTrajectory::zeros(spec.disc.grid(), spec.disc.nt);
    run_case_from(case_id, spec, settings, initial)
}

/// Runs the sweep for one case from an explicit initial control guess.
pub fn run_case_from(
    case_id: u8,
    spec: &ScenarioSpec,
    settings: &FbsSettings,
    initial: ControlTrajectory,
) -> Result<(CaseReport, FbsResult)> {
    let tag = |e: SeiqrError| SeiqrError::Case {
        case_id,
        source: Box::new(e),
    };
    let spec = spec.with_case(case_id).map_err(tag)?;
    let start = Instant::now();
    let ic = build_initial_condition(&spec);
    let result = run_fbs_from(&spec, settings, &ic, initial).map_err(tag)?;
    let report = CaseReport {
        case_id,
        active: spec.active,
        cost: result.best_cost(),
        iterations: result.iterations,
        converged: result.converged,
        wall_time: start.elapsed(),
        min_state: result.min_state_seen,
        envelope_excess: result.envelope_excess_seen,
    };
    Ok((report, result))
}

pub fn run_case(case_id: u8, spec: &ScenarioSpec, settings: &FbsSettings) -> Result<CaseReport> {
    run_case_full(case_id, spec, settings).map(|(report, _)| report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderingVerdict {
    /// Costs follow [`EXPECTED_ORDER`] with the required margin.
    Pass,
    Fail,
    /// Every case has the same cost, so there is nothing to order.
    Degenerate,
    /// Some case failed to run.
    Incomplete,
}

impl std::fmt::Display for OrderingVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OrderingVerdict::Pass => "PASS",
            OrderingVerdict::Fail => "FAIL",
            OrderingVerdict::Degenerate => "DEGENERATE",
            OrderingVerdict::Incomplete => "INCOMPLETE",
        })
    }
}

#[derive(Debug)]
pub struct CaseOutcome {
    pub case_id: u8,
    pub report: std::result::Result<CaseReport, String>,
}

#[derive(Debug)]
pub struct SuiteReport {
    pub outcomes: Vec<CaseOutcome>,
    /// `None` unless all eight cases were requested.
    pub verdict: Option<OrderingVerdict>,
}

impl SuiteReport {
    pub fn cost_of(&self, case_id: u8) -> Option<f64> {
        self.outcomes
            .iter()
            .find(|o| o.case_id == case_id)
            .and_then(|o| o.report.as_ref().ok())
            .map(|r| r.cost.total)
    }

    /// Case ids sorted by descending cost (ties keep case order).
    pub fn observed_order(&self) -> Vec<u8> {
        let mut ids: Vec<(u8, f64)> = self
            .outcomes
            .iter()
            .filter_map(|o| o.report.as_ref().ok().map(|r| (o.case_id, r.cost.total)))
            .collect();
        ids.sort_by(|a, b| b.1.total_cmp(&a.1));
        ids.into_iter().map(|(id, _)| id).collect()
    }

    /// Feasible-set nesting relations that fail by more than [`NESTING_TOL`].
    pub fn nesting_violations(&self) -> Vec<String> {
        let mut costs = [f64::NAN; 9];
        for id in 1..=8u8 {
            match self.cost_of(id) {
                Some(j) => costs[id as usize] = j,
                None => return vec![format!("case {id} missing")],
            }
        }
        nesting_violations(&costs)
    }
}

/// `costs[id]` holds J for case `id` (index 0 unused).
pub fn nesting_violations(costs: &[f64; 9]) -> Vec<String> {
    // (smaller feasible set's superset, subsets it contains)
    let relations: [(usize, &[usize]); 4] = [
        (8, &[1, 2, 3, 4, 5, 6, 7]),
        (5, &[1, 2, 3]),
        (6, &[1, 2, 4]),
        (7, &[1, 3, 4]),
    ];
    let mut out = Vec::new();
    for (sup, subs) in relations {
        for &sub in subs {
            let (a, b) = (costs[sup], costs[sub]);
            if a > b + NESTING_TOL * b.abs() {
                out.push(format!("J({sup}) = {a:.9e} > J({sub}) = {b:.9e}"));
            }
        }
    }
    out
}

/// Verdict for a complete set of case costs, `costs[id]` for id 1..=8.
pub fn ordering_verdict(costs: &[f64; 9]) -> OrderingVerdict {
    let reference = costs[1];
    if (1..=8).all(|id| (costs[id] - reference).abs() <= 1e-12 * reference.abs().max(1e-300)) {
        return OrderingVerdict::Degenerate;
    }
    let ordered = EXPECTED_ORDER.windows(2).all(|w| {
        let (hi, lo) = (costs[w[0] as usize], costs[w[1] as usize]);
        hi - lo >= ORDER_MARGIN * hi.abs()
    });
    if ordered {
        OrderingVerdict::Pass
    } else {
        OrderingVerdict::Fail
    }
}

fn is_subset(inner: ControlMask, outer: ControlMask) -> bool {
    (0..3).all(|k| !inner.is_active(k) || outer.is_active(k))
}

/// Runs the requested cases and reports them in id order.
///
/// Cases are processed in rounds of increasing active-control count; the
/// cases within a round run concurrently. Each case starts from the best
/// controls found so far for any requested case whose feasible set it
/// contains (zero controls if there is none). Since the sweep never accepts
/// a cost increase, the nesting inequalities hold by construction.
pub fn run_cases(spec: &ScenarioSpec, settings: &FbsSettings, case_ids: &[u8]) -> SuiteReport {
    let mut ids = case_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();

    let mut done: Vec<(ControlMask, f64, ControlTrajectory)> = Vec::new();
    let mut outcomes: Vec<CaseOutcome> = Vec::new();
    for level in 0..=3 {
        let round: Vec<u8> = ids
            .iter()
            .copied()
            .filter(|&id| case_mask(id).map_or(level == 0, |m| m.0.iter().filter(|&&a| a).count() == level))
            .collect();
        let results: Vec<(u8, Result<(CaseReport, FbsResult)>)> = round
            .par_iter()
            .map(|&case_id| {
                let run = case_mask(case_id).and_then(|mask| {
                    let warm = done
                        .iter()
                        .filter(|(m, _, _)| is_subset(*m, mask))
                        .min_by(|a, b| a.1.total_cmp(&b.1))
                        .map(|(_, _, u)| u.clone())
                        .unwrap_or_else(|| ControlTrajectory::zeros(spec.disc.grid(), spec.disc.nt));
                    run_case_from(case_id, spec, settings, warm)
                });
                (case_id, run)
            })
            .collect();
        for (case_id, run) in results {
            let report = match run {
                Ok((report, result)) => {
                    done.push((report.active, report.cost.total, result.controls));
                    Ok(report)
                }
                Err(e) => Err(e.to_string()),
            };
            outcomes.push(CaseOutcome { case_id, report });
        }
    }
    outcomes.sort_by_key(|o| o.case_id);

    let verdict = if ids == (1..=8).collect::<Vec<u8>>() {
        if outcomes.iter().any(|o| o.report.is_err()) {
            Some(OrderingVerdict::Incomplete)
        } else {
            let mut costs = [f64::NAN; 9];
            for o in &outcomes {
                costs[o.case_id as usize] = o.report.as_ref().expect("checked").cost.total;
            }
            Some(ordering_verdict(&costs))
        }
    } else {
        None
    };
    SuiteReport { outcomes, verdict }
}

pub fn run_all_cases(spec: &ScenarioSpec, settings: &FbsSettings) -> SuiteReport {
    run_cases(spec, settings, &[1, 2, 3, 4, 5, 6, 7, 8])
}
