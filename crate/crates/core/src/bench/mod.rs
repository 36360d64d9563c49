//! Benchmark scenarios, sweeps and CSV output.

pub mod exact;

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::assembly::BoundaryData;
use crate::error::{NseError, Result};
use crate::fem::{build_space, l2_error_velocity};
use crate::fmt::c_exp;
use crate::mesh::refined_square_mesh;
use crate::nonlinear::{
    estimate_order, run_solver, ConvergenceHistory, InitialGuess, Method, Problem, ResidualNorm,
    SolveOutcome, SolverConfig, Status,
};

pub use exact::{exact_pressure, exact_velocity, exact_velocity_gradient, forcing_from_exact};

pub const HISTORY_HEADER: &str = "iter,res_l2,res_h1,theta_aa,alpha_aa,step_size";
pub const SUMMARY_HEADER: &str =
    "scenario,method,re,mesh_n,dofs,status,iters,final_res_l2,l2_err,order_fit";
/// Cavity Reynolds numbers above this need `allow_high_re`.
pub const CAVITY_RE_CAP: f64 = 2500.0;
/// Residuals used by the order fit in the summary.
pub const ORDER_TAIL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    #[serde(alias = "analytic")]
    Analytical,
    #[serde(alias = "cavity")]
    Cavity2d,
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Analytical => "analytical",
            ScenarioKind::Cavity2d => "cavity2d",
        }
    }
}

impl FromStr for ScenarioKind {
    type Err = NseError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytical" | "analytic" => Ok(ScenarioKind::Analytical),
            "cavity2d" | "cavity" => Ok(ScenarioKind::Cavity2d),
            other => Err(NseError::Config(format!("unknown scenario '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Initial guess in the config: `c` means the interior field `(c, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GuessSpec {
    Scalar(f64),
    Vector([f64; 2]),
}

impl GuessSpec {
    pub fn value(&self) -> [f64; 2] {
        match *self {
            GuessSpec::Scalar(c) => [c, 0.0],
            GuessSpec::Vector(v) => v,
        }
    }
}

/// JSON config file. Every key is optional; CLI flags override.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: Option<String>,
    pub re: Option<OneOrMany<f64>>,
    pub mesh_n: Option<OneOrMany<usize>>,
    pub methods: Option<Vec<String>>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub blowup: Option<f64>,
    pub aa_depth: Option<usize>,
    pub aa_beta: Option<f64>,
    /// A list of guesses is read as a sweep, except a bare pair `[a, b]`.
    pub u0: Option<serde_json::Value>,
    pub residual_norm: Option<String>,
    pub allow_high_re: Option<bool>,
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| NseError::Config(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref()).map_err(|e| {
            NseError::Config(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }
}

fn parse_u0(value: &serde_json::Value) -> Result<Vec<[f64; 2]>> {
    let bad = || NseError::Config(format!("cannot read u0 from {value}"));
    if let Ok(g) = serde_json::from_value::<GuessSpec>(value.clone()) {
        return Ok(vec![g.value()]);
    }
    let list: Vec<GuessSpec> = serde_json::from_value(value.clone()).map_err(|_| bad())?;
    Ok(list.iter().map(GuessSpec::value).collect())
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub re: Vec<f64>,
    pub mesh_n: Vec<usize>,
    pub methods: Vec<Method>,
    pub u0: Vec<[f64; 2]>,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub blowup_threshold: f64,
    pub residual_norm: ResidualNorm,
    pub allow_high_re: bool,
}

impl Scenario {
    pub fn new(kind: ScenarioKind) -> Self {
        let d = SolverConfig::default();
        Self {
            kind,
            re: vec![1000.0],
            mesh_n: vec![32],
            methods: vec![Method::Picard, Method::Newton, Method::PicardNewton],
            u0: vec![[0.0, 0.0]],
            tolerance: d.tolerance,
            max_iterations: d.max_iterations,
            blowup_threshold: d.blowup_threshold,
            residual_norm: d.residual_norm,
            allow_high_re: false,
        }
    }

    /// Builds a scenario from a config; `scenario` overrides the file's.
    pub fn from_config(config: &BenchConfig, scenario: Option<&str>) -> Result<Self> {
        let name = scenario
            .or(config.scenario.as_deref())
            .ok_or_else(|| NseError::Config("no scenario given".into()))?;
        let mut s = Scenario::new(name.parse()?);
        if let Some(re) = &config.re {
            s.re = re.to_vec();
        }
        if let Some(n) = &config.mesh_n {
            s.mesh_n = n.to_vec();
        }
        let depth = config.aa_depth.unwrap_or(1);
        let beta = config.aa_beta.unwrap_or(1.0);
        if let Some(methods) = &config.methods {
            s.methods = methods
                .iter()
                .map(|m| parse_method(m, depth, beta))
                .collect::<Result<_>>()?;
        }
        if let Some(t) = config.tol {
            s.tolerance = t;
        }
        if let Some(m) = config.max_iter {
            s.max_iterations = m;
        }
        if let Some(b) = config.blowup {
            s.blowup_threshold = b;
        }
        if let Some(u0) = &config.u0 {
            s.u0 = parse_u0(u0)?;
        }
        if let Some(norm) = &config.residual_norm {
            s.residual_norm = match norm.to_ascii_lowercase().as_str() {
                "l2" => ResidualNorm::L2,
                "h1" => ResidualNorm::H1,
                other => return Err(NseError::Config(format!("unknown residual norm '{other}'"))),
            };
        }
        s.allow_high_re = config.allow_high_re.unwrap_or(false);
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.re.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(NseError::Config("Reynolds numbers must be positive".into()));
        }
        if self.mesh_n.contains(&0) {
            return Err(NseError::Config("mesh_n must be at least 1".into()));
        }
        if self.kind == ScenarioKind::Cavity2d {
            if let Some(&re) = self.re.iter().find(|&&r| r > CAVITY_RE_CAP) {
                if !self.allow_high_re {
                    return Err(NseError::Config(format!(
                        "cavity Re {re} exceeds {CAVITY_RE_CAP}; pass --allow-high-re to run it"
                    )));
                }
                log::warn!("cavity Re {re} is above {CAVITY_RE_CAP}; coarse meshes will not resolve it");
            }
        }
        for m in &self.methods {
            SolverConfig {
                method: *m,
                tolerance: self.tolerance,
                max_iterations: self.max_iterations,
                blowup_threshold: self.blowup_threshold,
                ..SolverConfig::default()
            }
            .validate()
            .map_err(|e| NseError::Config(e.to_string()))?;
        }
        Ok(())
    }

    fn solver_config(&self, method: Method, u0: [f64; 2]) -> SolverConfig {
        let initial_guess = if u0 == [0.0, 0.0] {
            InitialGuess::Zero
        } else {
            InitialGuess::Constant(u0)
        };
        SolverConfig {
            method,
            tolerance: self.tolerance,
            residual_norm: self.residual_norm,
            max_iterations: self.max_iterations,
            blowup_threshold: self.blowup_threshold,
            initial_guess,
        }
    }
}

/// Method name as used by the CLI; `aa-picard` takes the configured depth
/// and damping.
pub fn parse_method(name: &str, aa_depth: usize, aa_beta: f64) -> Result<Method> {
    Ok(match name.parse::<Method>()? {
        Method::AndersonPicard { .. } => Method::AndersonPicard {
            depth: aa_depth,
            damping: aa_beta,
        },
        m => m,
    })
}

/// Builds the discrete problem of a scenario on a given space.
pub fn build_problem(
    kind: ScenarioKind,
    space: &Arc<crate::fem::MixedSpace>,
    re: f64,
) -> Result<Problem> {
    let nu = 1.0 / re;
    match kind {
        ScenarioKind::Analytical => {
            let f = forcing_from_exact(nu)?;
            let g = BoundaryData::uniform(Arc::new(exact_velocity));
            Problem::new(space, nu, &f, &g)
        }
        ScenarioKind::Cavity2d => {
            let load = vec![0.0; space.n_velocity()];
            Problem::with_load(space, nu, load, &BoundaryData::lid([1.0, 0.0]))
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: ScenarioKind,
    pub method: Method,
    pub re: f64,
    pub mesh_n: usize,
    pub n_velocity: usize,
    pub n_pressure: usize,
    pub u0: [f64; 2],
    pub history: ConvergenceHistory,
    pub wall_time: f64,
    /// Velocity L2 error against the exact solution (analytical only).
    pub l2_error: Option<f64>,
    pub order_fit: Option<f64>,
    pub history_path: Option<PathBuf>,
}

impl RunRecord {
    pub fn dofs(&self) -> usize {
        self.n_velocity + self.n_pressure
    }

    pub fn status(&self) -> Status {
        self.history.status
    }

    /// Scenario label for the summary; nonzero initial guesses are appended.
    pub fn label(&self) -> String {
        if self.u0 == [0.0, 0.0] {
            self.scenario.name().to_string()
        } else {
            format!("{}@u0={}:{}", self.scenario.name(), self.u0[0], self.u0[1])
        }
    }

    pub fn file_stem(&self) -> String {
        let mut s = format!("{}_{}_re{}_n{}", self.scenario.name(), self.method, self.re, self.mesh_n);
        if self.u0 != [0.0, 0.0] {
            s.push_str(&format!("_u{}_{}", self.u0[0], self.u0[1]));
        }
        s
    }
}

/// Runs one method on an already-built problem.
pub fn run_single(
    kind: ScenarioKind,
    problem: &Problem,
    config: &SolverConfig,
    re: f64,
    mesh_n: usize,
    u0: [f64; 2],
) -> Result<(RunRecord, SolveOutcome)> {
    let start = Instant::now();
    let outcome = run_solver(config, problem)?;
    let wall_time = start.elapsed().as_secs_f64();
    let l2_error = match kind {
        ScenarioKind::Analytical => Some(l2_error_velocity(&outcome.velocity, exact_velocity)),
        ScenarioKind::Cavity2d => None,
    };
    let order_fit = estimate_order(&outcome.history.residuals(), ORDER_TAIL).ok();
    let space = problem.space();
    let record = RunRecord {
        scenario: kind,
        method: config.method,
        re,
        mesh_n,
        n_velocity: space.n_velocity(),
        n_pressure: space.n_pressure(),
        u0,
        history: outcome.history.clone(),
        wall_time,
        l2_error,
        order_fit,
        history_path: None,
    };
    log::info!(
        "{} {} Re={} n={}: {} after {} iterations ({:.1}s)",
        record.label(),
        record.method,
        re,
        mesh_n,
        record.status(),
        record.history.iterations(),
        wall_time
    );
    Ok((record, outcome))
}

/// Runs every (mesh, Re, initial guess, method) combination, writing one
/// history CSV per run and `summary.csv` into `out_dir` when given.
pub fn run_scenario(scenario: &Scenario, out_dir: Option<&Path>) -> Result<Vec<RunRecord>> {
    scenario.validate()?;
    let mut records = Vec::new();
    if scenario.methods.is_empty() {
        return Ok(records);
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    for &n in &scenario.mesh_n {
        let space = build_space(Arc::new(refined_square_mesh(n)?));
        for &re in &scenario.re {
            let problem = build_problem(scenario.kind, &space, re)?;
            for &u0 in &scenario.u0 {
                for &method in &scenario.methods {
                    let config = scenario.solver_config(method, u0);
                    let (mut record, _) = run_single(scenario.kind, &problem, &config, re, n, u0)?;
                    if let Some(dir) = out_dir {
                        let path = dir.join(format!("{}.csv", record.file_stem()));
                        emit_history_csv(&record.history, &path)?;
                        record.history_path = Some(path);
                    }
                    records.push(record);
                }
            }
        }
    }
    if let Some(dir) = out_dir {
        emit_summary(&records, dir.join("summary.csv"))?;
    }
    Ok(records)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| c_exp(x, 12)).unwrap_or_default()
}

pub fn history_csv(history: &ConvergenceHistory) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in &history.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.k,
            c_exp(r.res_l2, 12),
            c_exp(r.res_h1, 12),
            opt(r.theta),
            opt(r.alpha),
            opt(r.step_size)
        ));
    }
    out
}

pub fn emit_history_csv(history: &ConvergenceHistory, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, history_csv(history))?;
    Ok(())
}

pub fn summary_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.label(),
            r.method,
            r.re,
            r.mesh_n,
            r.dofs(),
            r.status(),
            r.history.iterations(),
            opt(r.history.records.last().map(|x| x.res_l2)),
            opt(r.l2_error),
            opt(r.order_fit)
        ));
    }
    out
}

pub fn emit_summary(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, summary_csv(records))?;
    Ok(())
}

/// Reads one residual column (`res_l2` or `res_h1`) of a history CSV.
pub fn read_history_residuals(path: impl AsRef<Path>, column: &str) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path.as_ref())
        .map_err(|e| NseError::Io(format!("{}: {e}", path.as_ref().display())))?;
    let headers = reader
        .headers()
        .map_err(|e| NseError::Config(format!("history header: {e}")))?
        .clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| NseError::Config(format!("history has no '{column}' column")))?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| NseError::Config(format!("history row: {e}")))?;
        let v: f64 = row[idx]
            .trim()
            .parse()
            .map_err(|_| NseError::Config(format!("bad residual '{}'", &row[idx])))?;
        out.push(v);
    }
    Ok(out)
}
