//! Command dispatch and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use iterfe_core::solver::{
    check_bg_zero, check_g_bounded, neumann_finite, neumann_uniform, solve_e, solve_e0, PointSolution,
};
use iterfe_core::stochastic::{absorption_probability, AbsorptionEstimate};
use iterfe_core::transfer::{iterate_sequence, SequenceKind};
use iterfe_core::verify::{
    check_hypotheses, class_report, increasing_solution_check, jordan_parts_solve_e0, residual_e,
};
use iterfe_core::Error as CoreError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::spec::{load_spec, EquationSpec, SpecError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNSOLVABLE: i32 = 3;
pub const EXIT_UNDECIDED: i32 = 4;

pub const REPORT_FILE: &str = "report.json";
pub const CSV_FILE: &str = "results.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Solve,
    SolveE0,
    Diagnose,
    Simulate,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::SolveE0 => "solve-e0",
            Command::Diagnose => "diagnose",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
        }
    }
}

/// Values given on the command line that take precedence over the spec file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub grid_m: Option<usize>,
    pub tol: Option<f64>,
    pub mc_samples: Option<usize>,
    pub max_undecided: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut EquationSpec) {
        if let Some(seed) = self.seed {
            spec.params.seed = seed;
            spec.options.trajectory.seed = seed;
        }
        if let Some(m) = self.grid_m {
            spec.grid.m = m;
        }
        if let Some(tol) = self.tol {
            spec.params.tol = tol;
        }
        if let Some(n) = self.mc_samples {
            spec.params.mc_samples = n;
            spec.options.n_samples = Some(n);
        }
        if let Some(f) = self.max_undecided {
            spec.options.max_undecided = f;
        }
    }
}

/// Outcome of a command: exit code, JSON payload and optional CSV rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub status: &'static str,
    pub error: Option<String>,
    pub result: Value,
    pub csv: Option<String>,
}

impl Outcome {
    fn ok(result: Value, csv: Option<String>) -> Self {
        Outcome { code: EXIT_OK, status: "ok", error: None, result, csv }
    }

    fn failed(code: i32, error: String) -> Self {
        let status = match code {
            EXIT_IO => "io_error",
            EXIT_UNSOLVABLE => "unsolvable",
            EXIT_UNDECIDED => "undecided",
            _ => "invalid",
        };
        Outcome { code, status, error: Some(error), result: Value::Null, csv: None }
    }

    pub fn report(&self, command: Command) -> Value {
        json!({
            "command": command.name(),
            "status": self.status,
            "exit_code": self.code,
            "error": self.error,
            "result": self.result,
        })
    }
}

fn exit_code_for(e: &CoreError) -> i32 {
    match e {
        CoreError::NotSolvableGUnbounded { .. } => EXIT_UNSOLVABLE,
        CoreError::TooManyUnresolved { .. } => EXIT_UNDECIDED,
        _ => EXIT_INVALID,
    }
}

impl From<CoreError> for Outcome {
    fn from(e: CoreError) -> Self {
        Outcome::failed(exit_code_for(&e), e.to_string())
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|r| format!("{r:?}")).unwrap_or_default()
}

/// `x,phi,status,residual` rows, in grid order.
pub fn points_csv(points: &[PointSolution]) -> String {
    let mut out = String::from("x,phi,status,residual\n");
    for p in points {
        let _ = writeln!(out, "{:?},{:?},{},{}", p.x, p.value.value, p.value.status.as_str(), fmt_opt(p.residual));
    }
    out
}

fn estimates_csv(estimates: &[AbsorptionEstimate]) -> String {
    let mut out = String::from("x,phi,status,residual\n");
    for e in estimates {
        let _ = writeln!(
            out,
            "{:?},{:?},{},",
            e.x,
            e.p_hat,
            if e.n_unresolved == 0 { "resolved" } else { "partially_resolved" }
        );
    }
    out
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn undecided_check(fraction: f64, max: f64, outcome: Outcome) -> Outcome {
    if fraction > max {
        Outcome {
            code: EXIT_UNDECIDED,
            status: "undecided",
            error: Some(format!("undecided fraction {fraction} exceeds {max}")),
            ..outcome
        }
    } else {
        outcome
    }
}

fn solve(spec: &EquationSpec) -> Result<Outcome, CoreError> {
    let sys = spec.system()?;
    let params = spec.solver_params();
    let rep = solve_e(&sys, &spec.g, &spec.h(), spec.endpoints, &spec.grid, &spec.options.class, &params)?;
    let csv = points_csv(&rep.points);
    let fraction = rep.undecided_fraction();
    Ok(undecided_check(fraction, spec.options.max_undecided, Outcome::ok(to_value(&rep), Some(csv))))
}

fn solve_homogeneous(spec: &EquationSpec) -> Result<Outcome, CoreError> {
    let sys = spec.system()?;
    let sol = solve_e0(&sys, &spec.h(), &spec.grid, &spec.solver_params())?;
    let csv = points_csv(&sol.points);
    let fraction = sol.undecided_points.len() as f64 / sol.points.len() as f64;
    Ok(undecided_check(fraction, spec.options.max_undecided, Outcome::ok(to_value(&sol), Some(csv))))
}

fn diagnose(spec: &EquationSpec) -> Result<Outcome, CoreError> {
    let sys = spec.system()?;
    let params = spec.solver_params();
    let family = check_g_bounded(&sys, &spec.g, &spec.grid, &params)?;
    let gk = iterate_sequence(
        &sys,
        &spec.g,
        family.witness,
        params.k_max,
        SequenceKind::PartialSums,
        &params.sequence,
        None,
    )?;
    let hypotheses = check_hypotheses(&sys, &spec.grid)?;
    let mut result = json!({
        "g_family": family,
        "g_k_at_witness": gk.values,
        "hypotheses": hypotheses,
        "g_class": class_report(&spec.g, &spec.grid),
    });
    if family.unbounded {
        let msg = format!("partial sums of g grow without bound (slope {} at x = {})", family.slope, family.witness);
        return Ok(Outcome { result, ..Outcome::failed(EXIT_UNSOLVABLE, msg) });
    }
    result["bg"] = to_value(&check_bg_zero(&sys, &spec.g, &spec.grid, &params)?);
    result["neumann_finite_terms"] = to_value(&neumann_finite(&sys, &spec.g, &spec.grid, &params)?.map(|f| f.m));
    result["neumann_uniform_terms"] = match neumann_uniform(&sys, &spec.g, &spec.grid, &params) {
        Ok(u) => json!(u.last_term + 1),
        Err(CoreError::NoUniformConvergence { .. }) => Value::Null,
        Err(e) => return Err(e),
    };
    Ok(Outcome::ok(result, None))
}

fn simulate(spec: &EquationSpec) -> Result<Outcome, CoreError> {
    let sys = spec.system()?;
    let points = if spec.options.points.is_empty() { spec.grid.points() } else { spec.options.points.clone() };
    let n = spec.options.n_samples.unwrap_or(spec.params.mc_samples);
    let estimates = points
        .iter()
        .map(|&x| absorption_probability(&sys, x, n, &spec.options.trajectory))
        .collect::<Result<Vec<_>, _>>()?;
    let csv = estimates_csv(&estimates);
    Ok(Outcome::ok(json!({ "estimates": estimates }), Some(csv)))
}

fn verify(spec: &EquationSpec) -> Result<Outcome, CoreError> {
    let sys = spec.system()?;
    let params = spec.solver_params();
    let h = spec.h();
    let hypotheses = check_hypotheses(&sys, &spec.grid)?;
    let rep = solve_e(&sys, &spec.g, &h, spec.endpoints, &spec.grid, &spec.options.class, &params)?;
    let mut result = json!({
        "hypotheses": hypotheses,
        "h_class": class_report(&h, &spec.grid),
        "phi_class": class_report(&rep.phi, &spec.grid),
        "residual_e": residual_e(&rep.phi, &sys, &spec.g, &spec.grid),
        "pointwise_residual_sup": rep.residual_sup,
        "admissibility": rep.admissibility,
    });
    if hypotheses.h1_monotone.pass {
        let e0 = solve_e0(&sys, &h, &spec.grid, &params)?;
        let (plus, minus) = jordan_parts_solve_e0(|x| e0.phi.apply(x), &sys, &spec.grid)?;
        result["jordan_residuals"] = json!({ "plus": plus, "minus": minus });
        match increasing_solution_check(&sys, &h, &spec.grid, &params) {
            Ok(c) => result["increasing_solution"] = to_value(&c),
            Err(CoreError::HypothesisNotMet(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let csv = points_csv(&rep.points);
    Ok(Outcome::ok(result, Some(csv)))
}

/// Runs `command` on a loaded spec. Core errors become exit codes.
pub fn execute(command: Command, spec: &EquationSpec) -> Outcome {
    let r = match command {
        Command::Solve => solve(spec),
        Command::SolveE0 => solve_homogeneous(spec),
        Command::Diagnose => diagnose(spec),
        Command::Simulate => simulate(spec),
        Command::Verify => verify(spec),
    };
    r.unwrap_or_else(Outcome::from)
}

/// Runs `f` on a pool of `workers` threads, or the global pool when `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> std::io::Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(std::io::Error::other)?;
            Ok(pool.install(f))
        }
    }
}

pub struct RunConfig {
    pub command: Command,
    pub spec_path: PathBuf,
    pub out_dir: PathBuf,
    pub overrides: Overrides,
    pub workers: Option<usize>,
}

fn write_outputs(out_dir: &Path, command: Command, outcome: &Outcome) -> std::io::Result<()> {
    fs::create_dir_all(out_dir)?;
    let report = serde_json::to_string_pretty(&outcome.report(command)).expect("report serializes");
    fs::write(out_dir.join(REPORT_FILE), report + "\n")?;
    if let Some(csv) = &outcome.csv {
        fs::write(out_dir.join(CSV_FILE), csv)?;
    }
    Ok(())
}

/// Loads the spec, runs the command and writes `report.json` (and
/// `results.csv` where the command produces per-point values) into the
/// output directory. Returns the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    let loaded = load_spec(&cfg.spec_path).and_then(|mut spec| {
        cfg.overrides.apply(&mut spec);
        spec.validate().map(|_| spec)
    });
    let outcome = match loaded {
        Ok(spec) => match with_workers(cfg.workers, || execute(cfg.command, &spec)) {
            Ok(o) => o,
            Err(e) => Outcome::failed(EXIT_IO, e.to_string()),
        },
        Err(e @ SpecError::Io { .. }) => Outcome::failed(EXIT_IO, e.to_string()),
        Err(e) => Outcome::failed(EXIT_INVALID, e.to_string()),
    };
    if let Some(err) = &outcome.error {
        eprintln!("iterfe {}: {err}", cfg.command.name());
    }
    match write_outputs(&cfg.out_dir, cfg.command, &outcome) {
        Ok(()) => outcome.code,
        Err(e) => {
            eprintln!("iterfe: cannot write to {}: {e}", cfg.out_dir.display());
            EXIT_IO
        }
    }
}
