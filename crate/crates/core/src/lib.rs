//! Spatiotemporal SEIQR epidemic model on a 2-D domain with three control
//! fields (vaccination `u1`, treatment `u2`, social distancing `u3`).
//!
//! The crate provides the forward reaction-diffusion solver, the adjoint and
//! linearized (sensitivity) solvers, the cost functional, a forward-backward
//! sweep optimizer for the bang-bang optimal controls, and the eight-case
//! intervention comparison.

pub mod adjoint;
pub mod config;
pub mod error;
pub mod export;
pub mod fbs;
pub mod forward;
pub mod grid;
pub mod kinetics;
pub mod objective;
pub mod scenario;
pub mod sensitivity;

pub use config::{
    case_mask, default_paper_scenario, load_config, parse_config, to_toml, ControlMask, CostWeights, Discretization,
    FbsSettings, InitialCondition, ModelParams, ReactionScheme, ScenarioSpec, SignConvention,
};
pub use error::{Result, SeiqrError};
pub use fbs::{run_fbs, FbsResult};
pub use forward::{solve_forward, ControlTrajectory, StateSnapshot, StateTrajectory};
pub use grid::{Field, Grid};
pub use objective::{evaluate_j, CostBreakdown};
pub use scenario::{run_all_cases, run_case, CaseReport, OrderingVerdict, SuiteReport};
