//! Model parameters, cost weights, discretization and scenario definitions.
//!
//! Configuration files are TOML with five optional sections:
//!
//! ```toml
//! [params]          # epidemiological rates (1/day) and diffusion (km^2/day)
//! recruitment = 1.0
//! beta1 = 0.06
//! beta2 = 0.07
//! mu = 0.01
//! delta = 0.05
//! gamma = 0.02
//! alpha = 0.05
//! rho = 0.01
//! lambda_s = 0.1
//! lambda_e = 0.1
//! lambda_i = 0.1
//! lambda_q = 0.001
//! lambda_r = 0.1
//!
//! [weights]         # cost functional weights
//! kappa1 = 1.0      # running (E + I)
//! kappa2 = 1.0      # running Q
//! kappa3 = 1.0      # terminal (E + I)
//! kappa4 = 1.0      # terminal Q
//! w1 = 1.0          # running u1, u2, u3
//! w2 = 1.0
//! w3 = 1.0
//! sigma1 = 0.0      # terminal u1, u2, u3
//! sigma2 = 0.0
//! sigma3 = 0.0
//!
//! [discretization]
//! nx = 50
//! ny = 50
//! hx = 1.0
//! hy = 1.0
//! t_final = 60.0
//! dt = 0.1
//! # nt = 600        # optional; must satisfy nt * dt = t_final
//! reaction_scheme = "rk4"   # or "euler"
//!
//! [scenario]
//! case = 8                  # optional, 1..=8; sets `active`
//! active = [true, true, true]
//! background_s = 100.0
//! hotspot = [15, 15]        # 0-based (i, j) cell index
//! hotspot_fractions = [0.75, 0.15, 0.10]   # S, E, I shares of the hotspot population
//!
//! [fbs]
//! max_iter = 60
//! omega = 0.5
//! tol_control = 1e-4
//! tol_cost = 1e-7
//! sign = "paper"            # or "duality"
//! ```
//!
//! Every key is optional. Missing keys take the defaults shown above.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SeiqrError};

/// Epidemiological rates and diffusion coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Recruitment rate (individuals / km^2 / day).
    pub recruitment: f64,
    /// S-E transmission rate.
    pub beta1: f64,
    /// S-I transmission rate.
    pub beta2: f64,
    /// Natural death rate.
    pub mu: f64,
    /// E -> I progression rate.
    pub delta: f64,
    /// I -> Q quarantine rate.
    pub gamma: f64,
    /// Q -> R recovery rate.
    pub alpha: f64,
    /// Q -> S return rate.
    pub rho: f64,
    pub lambda_s: f64,
    pub lambda_e: f64,
    pub lambda_i: f64,
    pub lambda_q: f64,
    pub lambda_r: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            recruitment: 1.0,
            beta1: 0.06,
            beta2: 0.07,
            mu: 0.01,
            delta: 0.05,
            gamma: 0.02,
            alpha: 0.05,
            rho: 0.01,
            lambda_s: 0.1,
            lambda_e: 0.1,
            lambda_i: 0.1,
            lambda_q: 0.001,
            lambda_r: 0.1,
        }
    }
}

impl ModelParams {
    /// Diffusion coefficients in compartment order S, E, I, Q, R.
    pub fn diffusion(&self) -> [f64; 5] {
        [
            self.lambda_s,
            self.lambda_e,
            self.lambda_i,
            self.lambda_q,
            self.lambda_r,
        ]
    }

    /// Disease-free equilibrium density of S.
    pub fn disease_free_s(&self) -> f64 {
        self.recruitment / self.mu
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("params.recruitment", self.recruitment),
            ("params.beta1", self.beta1),
            ("params.beta2", self.beta2),
            ("params.mu", self.mu),
            ("params.delta", self.delta),
            ("params.gamma", self.gamma),
            ("params.alpha", self.alpha),
            ("params.rho", self.rho),
            ("params.lambda_s", self.lambda_s),
            ("params.lambda_e", self.lambda_e),
            ("params.lambda_i", self.lambda_i),
            ("params.lambda_q", self.lambda_q),
            ("params.lambda_r", self.lambda_r),
        ];
        for (field, value) in named {
            non_negative(field, value)?;
        }
        if self.mu <= 0.0 {
            return Err(SeiqrError::invalid("params.mu", "must be > 0"));
        }
        Ok(())
    }
}

/// Weights of the cost functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            kappa1: 1.0,
            kappa2: 1.0,
            kappa3: 1.0,
            kappa4: 1.0,
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
            sigma1: 0.0,
            sigma2: 0.0,
            sigma3: 0.0,
        }
    }
}

impl CostWeights {
    pub fn control_weights(&self) -> [f64; 3] {
        [self.w1, self.w2, self.w3]
    }

    pub fn terminal_control_weights(&self) -> [f64; 3] {
        [self.sigma1, self.sigma2, self.sigma3]
    }

    /// Gradient of the running disease density with respect to (S, E, I, Q, R).
    pub fn running_state_gradient(&self) -> [f64; 5] {
        [0.0, self.kappa1, self.kappa1, self.kappa2, 0.0]
    }

    /// Gradient of the terminal disease density with respect to (S, E, I, Q, R).
    pub fn terminal_state_gradient(&self) -> [f64; 5] {
        [0.0, self.kappa3, self.kappa3, self.kappa4, 0.0]
    }

    /// True when no disease term contributes to the cost.
    pub fn disease_free_cost(&self) -> bool {
        self.kappa1 == 0.0 && self.kappa2 == 0.0 && self.kappa3 == 0.0 && self.kappa4 == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("weights.kappa1", self.kappa1),
            ("weights.kappa2", self.kappa2),
            ("weights.kappa3", self.kappa3),
            ("weights.kappa4", self.kappa4),
            ("weights.w1", self.w1),
            ("weights.w2", self.w2),
            ("weights.w3", self.w3),
            ("weights.sigma1", self.sigma1),
            ("weights.sigma2", self.sigma2),
            ("weights.sigma3", self.sigma3),
        ];
        for (field, value) in named {
            non_negative(field, value)?;
        }
        Ok(())
    }
}

/// Explicit Runge-Kutta scheme used for the reaction sub-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReactionScheme {
    Euler,
    #[default]
    Rk4,
}

/// Space and time discretization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discretization {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub t_final: f64,
    pub dt: f64,
    pub nt: usize,
    pub reaction_scheme: ReactionScheme,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            nx: 50,
            ny: 50,
            hx: 1.0,
            hy: 1.0,
            t_final: 60.0,
            dt: 0.1,
            nt: 600,
            reaction_scheme: ReactionScheme::Rk4,
        }
    }
}

impl Discretization {
    /// Builds a discretization with `nt = round(t_final / dt)` and validates it.
    pub fn new(nx: usize, ny: usize, h: f64, t_final: f64, dt: f64) -> Result<Self> {
        let disc = Self {
            nx,
            ny,
            hx: h,
            hy: h,
            t_final,
            dt,
            nt: (t_final / dt).round() as usize,
            reaction_scheme: ReactionScheme::Rk4,
        };
        disc.validate()?;
        Ok(disc)
    }

    pub fn grid(&self) -> crate::grid::Grid {
        crate::grid::Grid {
            nx: self.nx,
            ny: self.ny,
            hx: self.hx,
            hy: self.hy,
        }
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 * self.dt
    }

    /// Copy with a different time step, keeping the horizon fixed.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let mut disc = *self;
        disc.dt = dt;
        disc.nt = (self.t_final / dt).round() as usize;
        disc.validate()?;
        Ok(disc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 {
            return Err(SeiqrError::invalid("discretization.nx", "must be >= 2"));
        }
        if self.ny < 2 {
            return Err(SeiqrError::invalid("discretization.ny", "must be >= 2"));
        }
        positive("discretization.hx", self.hx)?;
        positive("discretization.hy", self.hy)?;
        positive("discretization.t_final", self.t_final)?;
        positive("discretization.dt", self.dt)?;
        if self.nt == 0 {
            return Err(SeiqrError::invalid("discretization.nt", "must be >= 1"));
        }
        let mismatch = (self.nt as f64 * self.dt - self.t_final).abs();
        if mismatch > 1e-9 * self.t_final.max(1.0) {
            return Err(SeiqrError::invalid(
                "discretization.nt",
                format!(
                    "nt * dt = {} does not equal t_final = {}",
                    self.nt as f64 * self.dt,
                    self.t_final
                ),
            ));
        }
        Ok(())
    }
}

/// Hotspot initial condition: uniform susceptible background with one seeded cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialCondition {
    /// Susceptible density of every non-hotspot cell.
    pub background_s: f64,
    /// 0-based (i, j) cell index of the hotspot.
    pub hotspot: (usize, usize),
    /// Shares of the hotspot population placed in S, E and I.
    pub hotspot_fractions: [f64; 3],
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self {
            background_s: 100.0,
            hotspot: (15, 15),
            hotspot_fractions: [0.75, 0.15, 0.10],
        }
    }
}

impl InitialCondition {
    pub fn validate(&self, disc: &Discretization) -> Result<()> {
        non_negative("scenario.background_s", self.background_s)?;
        for (k, f) in self.hotspot_fractions.iter().enumerate() {
            non_negative(&format!("scenario.hotspot_fractions[{k}]"), *f)?;
        }
        let sum: f64 = self.hotspot_fractions.iter().sum();
        if sum > 1.0 + 1e-12 {
            return Err(SeiqrError::invalid(
                "scenario.hotspot_fractions",
                format!("fractions sum to {sum} > 1"),
            ));
        }
        let (i, j) = self.hotspot;
        if i >= disc.nx || j >= disc.ny {
            return Err(SeiqrError::invalid(
                "scenario.hotspot",
                format!("cell ({i}, {j}) outside {}x{} grid", disc.nx, disc.ny),
            ));
        }
        Ok(())
    }
}

/// Which of (u1, u2, u3) the optimizer may move. Inactive controls stay at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ControlMask(pub [bool; 3]);

impl ControlMask {
    pub fn any(&self) -> bool {
        self.0.iter().any(|&a| a)
    }

    pub fn is_active(&self, control: usize) -> bool {
        self.0[control]
    }

    pub fn label(&self) -> String {
        let names = ["u1", "u2", "u3"];
        let active: Vec<&str> = (0..3).filter(|&k| self.0[k]).map(|k| names[k]).collect();
        if active.is_empty() {
            "none".to_string()
        } else {
            active.join("+")
        }
    }
}

/// Control mask of intervention case `case_id` (1..=8).
pub fn case_mask(case_id: u8) -> Result<ControlMask> {
    let mask = match case_id {
        1 => [false, false, false],
        2 => [true, false, false],
        3 => [false, true, false],
        4 => [false, false, true],
        5 => [true, true, false],
        6 => [true, false, true],
        7 => [false, true, true],
        8 => [true, true, true],
        _ => return Err(SeiqrError::invalid("case", format!("{case_id} is not in 1..=8"))),
    };
    Ok(ControlMask(mask))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub active: ControlMask,
    pub ic: InitialCondition,
    pub params: ModelParams,
    pub weights: CostWeights,
    pub disc: Discretization,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            active: ControlMask([true; 3]),
            ic: InitialCondition::default(),
            params: ModelParams::default(),
            weights: CostWeights::default(),
            disc: Discretization::default(),
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.weights.validate()?;
        self.disc.validate()?;
        self.ic.validate(&self.disc)
    }

    /// Same scenario with the control mask of `case_id`.
    pub fn with_case(&self, case_id: u8) -> Result<Self> {
        Ok(Self {
            active: case_mask(case_id)?,
            ..*self
        })
    }
}

/// The default 50x50, 60-day hotspot scenario with the mask of `case_id`.
pub fn default_paper_scenario(case_id: u8) -> Result<ScenarioSpec> {
    ScenarioSpec::default().with_case(case_id)
}

/// Sign of the terminal adjoint data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConvention {
    /// `P_E(T) = P_I(T) = -kappa3`, `P_Q(T) = -kappa4`.
    #[default]
    Paper,
    /// Terminal kappa terms with the opposite sign.
    Duality,
}

impl std::str::FromStr for SignConvention {
    type Err = SeiqrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(SignConvention::Paper),
            "duality" => Ok(SignConvention::Duality),
            other => Err(SeiqrError::invalid(
                "sign",
                format!("expected `paper` or `duality`, got `{other}`"),
            )),
        }
    }
}

/// Forward-backward sweep controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FbsSettings {
    pub max_iter: usize,
    #[serde(rename = "omega")]
    pub relax_omega: f64,
    pub tol_control: f64,
    pub tol_cost: f64,
    #[serde(rename = "sign")]
    pub sign_convention: SignConvention,
}

impl Default for FbsSettings {
    fn default() -> Self {
        Self {
            max_iter: 60,
            relax_omega: 0.5,
            tol_control: 1e-4,
            tol_cost: 1e-7,
            sign_convention: SignConvention::Paper,
        }
    }
}

impl FbsSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.relax_omega > 0.0 && self.relax_omega <= 1.0) {
            return Err(SeiqrError::invalid("fbs.omega", "must lie in (0, 1]"));
        }
        positive("fbs.tol_control", self.tol_control)?;
        positive("fbs.tol_cost", self.tol_cost)?;
        if self.max_iter == 0 {
            return Err(SeiqrError::invalid("fbs.max_iter", "must be >= 1"));
        }
        Ok(())
    }
}

// On-disk layout. Every section and key is optional.

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    params: ModelParams,
    weights: CostWeights,
    discretization: DiscretizationSection,
    scenario: ScenarioSection,
    fbs: FbsSettings,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DiscretizationSection {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    t_final: f64,
    dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nt: Option<usize>,
    reaction_scheme: ReactionScheme,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        let d = Discretization::default();
        Self {
            nx: d.nx,
            ny: d.ny,
            hx: d.hx,
            hy: d.hy,
            t_final: d.t_final,
            dt: d.dt,
            nt: None,
            reaction_scheme: d.reaction_scheme,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScenarioSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    case: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    active: Option<[bool; 3]>,
    background_s: f64,
    hotspot: [usize; 2],
    hotspot_fractions: [f64; 3],
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let ic = InitialCondition::default();
        Self {
            case: None,
            active: None,
            background_s: ic.background_s,
            hotspot: [ic.hotspot.0, ic.hotspot.1],
            hotspot_fractions: ic.hotspot_fractions,
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<(ScenarioSpec, FbsSettings)> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| SeiqrError::ConfigParse(e.to_string()))?;

    let d = &file.discretization;
    positive("discretization.dt", d.dt)?;
    let nt = match d.nt {
        Some(nt) => nt,
        None => (d.t_final / d.dt).round() as usize,
    };
    let disc = Discretization {
        nx: d.nx,
        ny: d.ny,
        hx: d.hx,
        hy: d.hy,
        t_final: d.t_final,
        dt: d.dt,
        nt,
        reaction_scheme: d.reaction_scheme,
    };

    let s = &file.scenario;
    let active = match (s.case, s.active) {
        (Some(case), None) => {
            case_mask(case).map_err(|_| SeiqrError::invalid("scenario.case", format!("{case} is not in 1..=8")))?
        }
        (Some(case), Some(active)) => {
            let mask = case_mask(case)?;
            if mask.0 != active {
                return Err(SeiqrError::invalid(
                    "scenario.active",
                    format!("conflicts with scenario.case = {case}"),
                ));
            }
            mask
        }
        (None, Some(active)) => ControlMask(active),
        (None, None) => ControlMask([true; 3]),
    };

    let spec = ScenarioSpec {
        active,
        ic: InitialCondition {
            background_s: s.background_s,
            hotspot: (s.hotspot[0], s.hotspot[1]),
            hotspot_fractions: s.hotspot_fractions,
        },
        params: file.params,
        weights: file.weights,
        disc,
    };
    spec.validate()?;
    file.fbs.validate()?;
    Ok((spec, file.fbs))
}

/// Reads, parses and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<(ScenarioSpec, FbsSettings)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SeiqrError::ConfigIo {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

/// Serializes a validated configuration with every key spelled out.
pub fn to_toml(spec: &ScenarioSpec, settings: &FbsSettings) -> String {
    let d = &spec.disc;
    let file = ConfigFile {
        params: spec.params,
        weights: spec.weights,
        discretization: DiscretizationSection {
            nx: d.nx,
            ny: d.ny,
            hx: d.hx,
            hy: d.hy,
            t_final: d.t_final,
            dt: d.dt,
            nt: Some(d.nt),
            reaction_scheme: d.reaction_scheme,
        },
        scenario: ScenarioSection {
            case: None,
            active: Some(spec.active.0),
            background_s: spec.ic.background_s,
            hotspot: [spec.ic.hotspot.0, spec.ic.hotspot.1],
            hotspot_fractions: spec.ic.hotspot_fractions,
        },
        fbs: *settings,
    };
    toml::to_string(&file).expect("config sections are always representable as TOML")
}

fn non_negative(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(SeiqrError::invalid(field, "must be finite"));
    }
    if value < 0.0 {
        return Err(SeiqrError::invalid(field, format!("{value} is negative")));
    }
    Ok(())
}

fn positive(field: &str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(SeiqrError::invalid(field, format!("{value} must be > 0")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_table_defaults() {
        let (spec, settings) = parse_config("").unwrap();
        let p = spec.params;
        assert_eq!(p.recruitment, 1.0);
        assert_eq!(p.beta1, 0.06);
        assert_eq!(p.beta2, 0.07);
        assert_eq!(p.mu, 0.01);
        assert_eq!(p.delta, 0.05);
        assert_eq!(p.gamma, 0.02);
        assert_eq!(p.alpha, 0.05);
        assert_eq!(p.rho, 0.01);
        assert_eq!(p.diffusion(), [0.1, 0.1, 0.1, 0.001, 0.1]);
        assert_eq!(spec.disc, Discretization::default());
        assert_eq!(spec.weights, CostWeights::default());
        assert_eq!(spec.ic, InitialCondition::default());
        assert_eq!(settings, FbsSettings::default());
    }

    #[test]
    fn negative_rate_names_the_field() {
        let err = parse_config("[params]\nbeta1 = -1.0\n").unwrap_err();
        match err {
            SeiqrError::Invalid { field, .. } => assert_eq!(field, "params.beta1"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn consistent_step_count_is_accepted() {
        let (spec, _) = parse_config("[discretization]\nnt = 600\ndt = 0.1\nt_final = 60.0\n").unwrap();
        assert_eq!(spec.disc.nt, 600);
        assert!((spec.disc.nt as f64 * spec.disc.dt - spec.disc.t_final).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_step_count_is_rejected() {
        let err = parse_config("[discretization]\nnt = 500\ndt = 0.1\n").unwrap_err();
        assert!(err.to_string().contains("discretization.nt"), "{err}");
    }

    #[test]
    fn non_positive_dt_is_rejected() {
        let err = parse_config("[discretization]\ndt = 0.0\n").unwrap_err();
        assert!(err.to_string().contains("discretization.dt"), "{err}");
    }

    #[test]
    fn fractions_above_one_are_rejected() {
        let err = parse_config("[scenario]\nhotspot_fractions = [0.5, 0.4, 0.2]\n").unwrap_err();
        assert!(err.to_string().contains("hotspot_fractions"), "{err}");
    }

    #[test]
    fn hotspot_outside_grid_is_rejected() {
        let err = parse_config("[scenario]\nhotspot = [50, 3]\n").unwrap_err();
        assert!(err.to_string().contains("scenario.hotspot"), "{err}");
    }

    #[test]
    fn unknown_key_is_a_parse_error() {
        assert!(matches!(
            parse_config("[params]\nbeta3 = 1.0\n"),
            Err(SeiqrError::ConfigParse(_))
        ));
    }

    #[test]
    fn omega_outside_unit_interval_is_rejected() {
        let err = parse_config("[fbs]\nomega = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("fbs.omega"), "{err}");
    }

    #[test]
    fn case_key_sets_mask() {
        let (spec, _) = parse_config("[scenario]\ncase = 6\n").unwrap();
        assert_eq!(spec.active, ControlMask([true, false, true]));
        assert!(parse_config("[scenario]\ncase = 9\n").is_err());
        assert!(parse_config("[scenario]\ncase = 2\nactive = [false, true, false]\n").is_err());
    }

    #[test]
    fn case_masks() {
        assert_eq!(default_paper_scenario(1).unwrap().active.0, [false; 3]);
        assert_eq!(default_paper_scenario(8).unwrap().active.0, [true; 3]);
        assert_eq!(default_paper_scenario(6).unwrap().active.0, [true, false, true]);
        assert!(default_paper_scenario(0).is_err());
        assert!(default_paper_scenario(9).is_err());
    }

    #[test]
    fn case_masks_cover_every_subset_once() {
        let mut seen = std::collections::HashSet::new();
        for id in 1..=8 {
            let m = case_mask(id).unwrap();
            let bits = m.0.iter().enumerate().fold(0u8, |acc, (k, &a)| acc | ((a as u8) << k));
            assert!(seen.insert(bits), "duplicate mask for case {id}");
        }
        assert_eq!(seen.len(), 8);
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_config("/nonexistent/seiqr.toml").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/seiqr.toml"));
    }
}
