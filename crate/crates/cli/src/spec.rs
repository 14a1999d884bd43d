//! The equation-spec file: system, forcing term, boundary data, grid and
//! numerical parameters, all in one JSON document.

use std::fs;
use std::path::Path;

use iterfe_core::solver::{ClassSelector, SolverParams, BOUNDARY_TOL};
use iterfe_core::stochastic::TrajectoryConfig;
use iterfe_core::transfer::{MethodSelector, SequenceConfig};
use iterfe_core::{AlmostLimitParams, EndpointPair, FunctionRep, SampleGrid, UnitMap, WeightedSystem};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse spec: {0}")]
    Parse(String),
    #[error("invalid spec:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub maps: Vec<UnitMap>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodic_order: Option<usize>,
}

/// Numerical parameters. Anything left out takes the library default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSpec {
    pub tol: f64,
    pub m_max: usize,
    pub n_values: Vec<usize>,
    pub shift_max: usize,
    pub branch_budget: u64,
    pub support_budget: usize,
    pub method: MethodSelector,
    pub mc_samples: usize,
    pub seed: u64,
    pub series_tol: f64,
    pub l_max: usize,
    pub finite_m_cap: usize,
    pub k_max: usize,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        ParamsSpec::from(&SolverParams::default())
    }
}

impl From<&SolverParams> for ParamsSpec {
    fn from(p: &SolverParams) -> Self {
        ParamsSpec {
            tol: p.limit.tol,
            m_max: p.limit.m_max,
            n_values: p.limit.n_values.clone(),
            shift_max: p.limit.shift_max,
            branch_budget: p.branch_budget,
            support_budget: p.sequence.support_budget,
            method: p.sequence.selector,
            mc_samples: p.sequence.mc_samples,
            seed: p.sequence.seed,
            series_tol: p.series_tol,
            l_max: p.l_max,
            finite_m_cap: p.finite_m_cap,
            k_max: p.k_max,
        }
    }
}

impl ParamsSpec {
    pub fn solver_params(&self) -> SolverParams {
        let d = SolverParams::default();
        SolverParams {
            limit: AlmostLimitParams {
                n_values: self.n_values.clone(),
                shift_max: self.shift_max,
                tol: self.tol,
                m_max: self.m_max,
                ..d.limit
            },
            sequence: SequenceConfig {
                selector: self.method,
                support_budget: self.support_budget,
                mc_samples: self.mc_samples,
                seed: self.seed,
            },
            branch_budget: self.branch_budget,
            series_tol: self.series_tol,
            l_max: self.l_max,
            finite_m_cap: self.finite_m_cap,
            k_max: self.k_max,
            ..d
        }
    }
}

fn default_max_undecided() -> f64 {
    0.05
}

/// Command-specific settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptionsSpec {
    /// Largest tolerated fraction of undecided grid points (exit code 4 above it).
    #[serde(default = "default_max_undecided")]
    pub max_undecided: f64,
    /// Points for `simulate`; the grid points when empty.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<f64>,
    /// Trajectories per point for `simulate`; `params.mc_samples` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    pub class: ClassSelector,
    pub trajectory: TrajectoryConfig,
}

impl Default for OptionsSpec {
    fn default() -> Self {
        OptionsSpec {
            max_undecided: default_max_undecided(),
            points: Vec::new(),
            n_samples: None,
            class: ClassSelector::Bounded,
            trajectory: TrajectoryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationSpec {
    pub system: SystemSpec,
    pub g: FunctionRep,
    /// Free parameter of the solution set; `a + (b − a) x` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<FunctionRep>,
    pub endpoints: EndpointPair,
    #[serde(default)]
    pub grid: SampleGrid,
    #[serde(default)]
    pub params: ParamsSpec,
    #[serde(default)]
    pub options: OptionsSpec,
}

impl EquationSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let spec: EquationSpec = serde_json::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn system(&self) -> iterfe_core::Result<WeightedSystem> {
        let sys = WeightedSystem::new(self.system.maps.clone(), self.system.weights.clone())?;
        match self.system.periodic_order {
            Some(order) => sys.with_periodic_order(order),
            None => Ok(sys),
        }
    }

    pub fn h(&self) -> FunctionRep {
        self.h.clone().unwrap_or_else(|| FunctionRep::affine(self.endpoints.a, self.endpoints.b))
    }

    pub fn solver_params(&self) -> SolverParams {
        self.params.solver_params()
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), SpecError> {
        let mut errs = Vec::new();
        let maps = &self.system.maps;
        let weights = &self.system.weights;
        if maps.is_empty() {
            errs.push("system has no maps".to_string());
        }
        for (i, m) in maps.iter().enumerate() {
            if let Err(e) = m.validate() {
                errs.push(format!("map {i}: {e}"));
            }
        }
        if weights.len() != maps.len() {
            errs.push(format!("{} weights given for {} maps", weights.len(), maps.len()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            errs.push(format!("weight {w} is not a nonnegative real"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            errs.push(format!("weights sum {sum}, expected 1"));
        }
        if errs.is_empty() {
            if let Err(e) = self.system() {
                errs.push(e.to_string());
            }
        }
        for at in [0.0, 1.0] {
            let v = self.g.apply(at);
            if v.abs() > BOUNDARY_TOL {
                errs.push(format!(
                    "g({at}) = {v}: g must vanish at 0 and 1, since any solution has Tφ = φ at the fixed endpoints"
                ));
            }
        }
        if let Some(h) = &self.h {
            let (h0, h1) = (h.apply(0.0), h.apply(1.0));
            if (h0 - self.endpoints.a).abs() > BOUNDARY_TOL || (h1 - self.endpoints.b).abs() > BOUNDARY_TOL {
                errs.push(format!(
                    "h(0) = {h0}, h(1) = {h1} do not match endpoints a = {}, b = {}",
                    self.endpoints.a, self.endpoints.b
                ));
            }
        }
        if let Err(e) = self.grid.validate() {
            errs.push(format!("grid: {e}"));
        }
        if let Err(e) = self.solver_params().validate() {
            errs.push(format!("params: {e}"));
        }
        if let Err(e) = self.options.trajectory.validate() {
            errs.push(format!("options.trajectory: {e}"));
        }
        if !(0.0..=1.0).contains(&self.options.max_undecided) {
            errs.push(format!("max_undecided = {} must lie in [0, 1]", self.options.max_undecided));
        }
        if let Some(x) = self.options.points.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            errs.push(format!("simulation point {x} lies outside [0, 1]"));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SpecError::Validation(errs))
        }
    }
}

pub fn load_spec(path: &Path) -> Result<EquationSpec, SpecError> {
    let text = fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    EquationSpec::from_json(&text)
}

pub fn write_spec(spec: &EquationSpec, path: &Path) -> std::io::Result<()> {
    fs::write(path, spec.to_json())
}
