//! Benchmark harness for the robust-regression experiments.
//!
//! A run is described by a TOML file:
//!
//! ```toml
//! experiment = "unconstrained"     # or "constrained", "derivative_check"
//! instances_per_cell = 10
//! seed = 0                         # base seed
//! oracle = "exact"                 # or "randomized"
//! line_search = "hybrid"           # or "cubic_always"
//!
//! [[grid]]
//! n = 100
//! m = 10
//! mu = 1.0
//!
//! [solver]                         # Newton-CG; every key optional
//! eps_g = 1e-5
//! eps_h = "10^-2.5"                # numbers or "10^p" strings
//! theta = 0.8
//! zeta = 0.5
//! eta = 0.2
//! delta = 0.01
//! max_outer_iters = 100000
//! max_backtracks = 200
//!
//! [al]                             # augmented Lagrangian; every key optional
//! eps1 = 1e-4
//! eps2 = 1e-2
//! lambda_max = 100.0
//! rho0 = 10.0
//! alpha = 0.25
//! r = 10.0
//! max_outer = 1000
//!
//! [output]
//! path = "report.csv"              # stdout when absent
//! format = "csv"                   # or "markdown"
//! ```
//!
//! Instance `i` of grid cell `c` uses seed `seed + 10000 c + i`. Instances of
//! a cell may run on several threads (`ALNEWTON_THREADS`); results are
//! gathered in index order so the report does not depend on scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::augmented_lagrangian::{al_function, al_solve, AlParams, AlStatus, EqualityProblem};
use crate::error::{Error, Result};
use crate::meo::Oracle;
use crate::newton_cg::{newton_cg, LineSearchRule, NewtonCgParams, Status};
use crate::operators::{default_fd_step, fd_check, SmoothFunction, SymmetricOperator, DENSE_CAP};
use crate::problems::{
    feasible_seed_point, random_instance, robust_regression, sphere_constrained,
};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "ALNEWTON_THREADS";

/// Relative error bound for the derivative gate.
pub const FD_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Unconstrained,
    Constrained,
    DerivativeCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Csv,
    Markdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub n: usize,
    pub m: usize,
    pub mu: f64,
}

impl GridCell {
    /// Parses `"n,m,mu;n,m,mu;..."`.
    pub fn parse_list(s: &str) -> Result<Vec<GridCell>> {
        s.split(';')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(|cell| {
                let parts: Vec<_> = cell.split(',').map(str::trim).collect();
                let [n, m, mu] = parts[..] else {
                    return Err(Error::Parse(format!("grid cell `{cell}` is not `n,m,mu`")));
                };
                let bad = |t: &str| Error::Parse(format!("bad grid entry `{t}`"));
                Ok(GridCell {
                    n: n.parse().map_err(|_| bad(n))?,
                    m: m.parse().map_err(|_| bad(m))?,
                    mu: mu.parse().map_err(|_| bad(mu))?,
                })
            })
            .collect()
    }
}

/// Accepts plain numbers or `"10^p"`, the latter evaluated as `10f64.powf(p)`.
fn tolerance<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => parse_tolerance(&s).map_err(serde::de::Error::custom),
    }
}

/// Parses `"1e-5"` or `"10^-2.5"`.
pub fn parse_tolerance(s: &str) -> Result<f64> {
    let s = s.trim();
    let parsed = match s.strip_prefix("10^") {
        Some(p) => p.trim().parse::<f64>().map(|p| 10f64.powf(p)),
        None => s.parse::<f64>(),
    };
    parsed.map_err(|_| Error::Parse(format!("bad tolerance `{s}`")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(deserialize_with = "tolerance")]
    pub eps_g: f64,
    #[serde(deserialize_with = "tolerance")]
    pub eps_h: f64,
    pub theta: f64,
    pub zeta: f64,
    pub eta: f64,
    pub delta: f64,
    pub max_outer_iters: usize,
    pub max_backtracks: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eps_g: 1e-5,
            eps_h: 10f64.powf(-2.5),
            theta: 0.8,
            zeta: 0.5,
            eta: 0.2,
            delta: 0.01,
            max_outer_iters: 100_000,
            max_backtracks: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlSettings {
    #[serde(deserialize_with = "tolerance")]
    pub eps1: f64,
    #[serde(deserialize_with = "tolerance")]
    pub eps2: f64,
    pub lambda_max: f64,
    pub rho0: f64,
    pub alpha: f64,
    pub r: f64,
    pub max_outer: usize,
}

impl Default for AlSettings {
    fn default() -> Self {
        Self {
            eps1: 1e-4,
            eps2: 1e-2,
            lambda_max: 100.0,
            rho0: 10.0,
            alpha: 0.25,
            r: 10.0,
            max_outer: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    pub path: Option<PathBuf>,
    pub format: ReportFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub grid: Vec<GridCell>,
    #[serde(default = "default_instances")]
    pub instances_per_cell: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_oracle")]
    pub oracle: Oracle,
    #[serde(default = "default_line_search")]
    pub line_search: LineSearchRule,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub al: AlSettings,
    #[serde(default)]
    pub output: OutputSettings,
}

fn default_instances() -> usize {
    10
}

fn default_oracle() -> Oracle {
    Oracle::Exact
}

fn default_line_search() -> LineSearchRule {
    LineSearchRule::Hybrid
}

impl BenchConfig {
    pub fn new(experiment: Experiment, grid: Vec<GridCell>) -> Self {
        Self {
            experiment,
            grid,
            instances_per_cell: default_instances(),
            seed: 0,
            oracle: default_oracle(),
            line_search: default_line_search(),
            solver: SolverSettings::default(),
            al: AlSettings::default(),
            output: OutputSettings::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances_per_cell == 0 {
            return Err(Error::InvalidParameter(
                "instances_per_cell must be positive".into(),
            ));
        }
        for cell in &self.grid {
            if cell.n == 0 || cell.m == 0 || !(cell.mu >= 0.0 && cell.mu.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "invalid grid cell {cell:?}"
                )));
            }
        }
        self.newton_params(0).validate()?;
        Ok(())
    }

    pub fn newton_params(&self, seed: u64) -> NewtonCgParams {
        let s = &self.solver;
        NewtonCgParams {
            eps_g: s.eps_g,
            eps_h: s.eps_h,
            theta: s.theta,
            zeta: s.zeta,
            eta: s.eta,
            delta: s.delta,
            oracle: self.oracle,
            line_search: self.line_search,
            max_outer_iters: s.max_outer_iters,
            max_backtracks: s.max_backtracks,
            seed,
            first_order_only: false,
        }
    }

    pub fn al_params(
        &self,
        z_feas: DVector<f64>,
        x0: DVector<f64>,
        m: usize,
        seed: u64,
    ) -> AlParams {
        let a = &self.al;
        let mut p = AlParams::new(a.eps1, a.eps2, z_feas, x0, m);
        p.lambda_max = a.lambda_max;
        p.rho0 = a.rho0;
        p.alpha = a.alpha;
        p.r = a.r;
        p.delta = self.solver.delta;
        p.max_outer = a.max_outer;
        p.inner = self.newton_params(seed);
        p
    }

    pub fn instance_seed(&self, cell_index: usize, instance_index: usize) -> u64 {
        self.seed + cell_index as u64 * 10_000 + instance_index as u64
    }
}

/// Per-run measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub seed: u64,
    pub objective: f64,
    /// Outer Newton-CG iterations, or total inner iterations for the AL method.
    pub iterations: usize,
    pub feasibility: Option<f64>,
    pub hess_vecs: usize,
    pub wall_time_s: f64,
    pub residuals_pass: bool,
    pub failure: Option<String>,
}

impl RunRecord {
    fn failed(seed: u64, err: impl ToString, wall_time_s: f64) -> Self {
        Self {
            seed,
            objective: f64::NAN,
            iterations: 0,
            feasibility: None,
            hess_vecs: 0,
            wall_time_s,
            residuals_pass: false,
            failure: Some(err.to_string()),
        }
    }
}

/// One grid cell averaged over its instances.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub mu: f64,
    pub mean_objective: f64,
    pub mean_iterations: f64,
    pub mean_feasibility: Option<f64>,
    pub mean_wall_time_s: f64,
    pub mean_hess_vecs: f64,
    pub runs: Vec<RunRecord>,
}

impl BenchRow {
    pub fn from_runs(cell: GridCell, runs: Vec<RunRecord>) -> Self {
        let k = runs.len() as f64;
        let mean = |f: &dyn Fn(&RunRecord) -> f64| runs.iter().map(f).sum::<f64>() / k;
        let mean_feasibility = runs
            .iter()
            .map(|r| r.feasibility)
            .collect::<Option<Vec<_>>>()
            .map(|v| v.iter().sum::<f64>() / k);
        Self {
            n: cell.n,
            m: cell.m,
            mu: cell.mu,
            mean_objective: mean(&|r| r.objective),
            mean_iterations: mean(&|r| r.iterations as f64),
            mean_feasibility,
            mean_wall_time_s: mean(&|r| r.wall_time_s),
            mean_hess_vecs: mean(&|r| r.hess_vecs as f64),
            runs,
        }
    }

    pub fn all_residuals_pass(&self) -> bool {
        self.runs.iter().all(|r| r.residuals_pass)
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let threads = v.parse::<usize>().map_err(|_| {
            Error::Parse(format!("{THREADS_ENV} must be a thread count, got `{v}`"))
        })?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

fn run_grid(
    config: &BenchConfig,
    run: impl Fn(GridCell, u64) -> RunRecord + Sync,
) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let pool = thread_pool()?;
    Ok(config
        .grid
        .iter()
        .enumerate()
        .map(|(c, &cell)| {
            let runs: Vec<RunRecord> = pool.install(|| {
                (0..config.instances_per_cell)
                    .into_par_iter()
                    .map(|i| run(cell, config.instance_seed(c, i)))
                    .collect()
            });
            BenchRow::from_runs(cell, runs)
        })
        .collect())
}

/// Smallest eigenvalue of a dense materialization of the Hessian of `f` at `x`.
pub fn dense_hessian_lambda_min<F: SmoothFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
) -> Result<f64> {
    let op = SymmetricOperator::new(f.dim(), |v| f.hess_vec(x, v));
    let h = op.dense_materialize()?;
    Ok(SymmetricEigen::new((&h + h.transpose()) * 0.5)
        .eigenvalues
        .min())
}

/// Newton-CG from the all-ones vector on one seeded robust-regression instance.
pub fn run_unconstrained_instance(config: &BenchConfig, cell: GridCell, seed: u64) -> RunRecord {
    let start = Instant::now();
    let attempt = || -> Result<RunRecord> {
        let f = robust_regression(random_instance(cell.n, cell.m, cell.mu, seed)?);
        let params = config.newton_params(seed);
        let report = newton_cg(&f, &DVector::from_element(cell.n, 1.0), &params)?;
        let x = &report.x_final;
        let grad_ok = f.gradient(x).norm() <= params.eps_g;
        let curvature_ok = if params.oracle == Oracle::Exact && cell.n <= DENSE_CAP {
            dense_hessian_lambda_min(&f, x)? >= -params.eps_h
        } else {
            true
        };
        Ok(RunRecord {
            seed,
            objective: f.value(x),
            iterations: report.iterations(),
            feasibility: None,
            hess_vecs: report.eval_counts.hess_vecs,
            wall_time_s: start.elapsed().as_secs_f64(),
            residuals_pass: report.status == Status::SecondOrderPoint && grad_ok && curvature_ok,
            failure: None,
        })
    };
    attempt().unwrap_or_else(|e| RunRecord::failed(seed, e, start.elapsed().as_secs_f64()))
}

/// Runs the unconstrained experiment after [`derivative_gate`] passes.
pub fn run_unconstrained_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    derivative_gate(config)?;
    run_grid(config, |cell, seed| {
        run_unconstrained_instance(config, cell, seed)
    })
}

/// A constrained benchmark case: the problem and its nearly feasible point.
pub struct ConstrainedCase {
    pub problem: Box<dyn EqualityProblem>,
    pub z_feas: DVector<f64>,
}

/// AL method from `x0 = z_feas`, `lambda0 = 0` on one case.
pub fn run_constrained_case(config: &BenchConfig, case: ConstrainedCase, seed: u64) -> RunRecord {
    let start = Instant::now();
    let attempt = || -> Result<RunRecord> {
        let problem = case.problem.as_ref();
        let params = config.al_params(case.z_feas.clone(), case.z_feas.clone(), problem.m(), seed);
        let report = al_solve(problem, &params)?;
        let res = report.residuals;
        let sosp_ok = res.sosp_lambda_min.is_none_or(|l| l >= -params.eps2);
        Ok(RunRecord {
            seed,
            objective: problem.objective().value(&report.x_final),
            iterations: report.total_inner_iterations(),
            feasibility: Some(res.feasibility),
            hess_vecs: report.eval_counts.hess_vecs,
            wall_time_s: start.elapsed().as_secs_f64(),
            residuals_pass: report.status == AlStatus::Converged
                && res.fosp_grad <= params.eps1
                && res.feasibility <= params.eps1
                && sosp_ok,
            failure: None,
        })
    };
    attempt().unwrap_or_else(|e| RunRecord::failed(seed, e, start.elapsed().as_secs_f64()))
}

/// Runs the constrained experiment on problems built by `make_case`.
pub fn run_constrained_bench_with(
    config: &BenchConfig,
    make_case: impl Fn(GridCell, u64) -> Result<ConstrainedCase> + Sync,
) -> Result<Vec<BenchRow>> {
    let pool = thread_pool()?;
    Ok(config
        .grid
        .iter()
        .enumerate()
        .map(|(c, &cell)| {
            let runs: Vec<RunRecord> = pool.install(|| {
                (0..config.instances_per_cell)
                    .into_par_iter()
                    .map(|i| {
                        let seed = config.instance_seed(c, i);
                        match make_case(cell, seed) {
                            Ok(case) => run_constrained_case(config, case, seed),
                            Err(e) => RunRecord::failed(seed, e, 0.0),
                        }
                    })
                    .collect()
            });
            BenchRow::from_runs(cell, runs)
        })
        .collect())
}

/// Sphere-constrained robust regression from `z = (1/sqrt(n), ...)`.
pub fn sphere_case(cell: GridCell, seed: u64) -> Result<ConstrainedCase> {
    let inst = random_instance(cell.n, cell.m, cell.mu, seed)?;
    Ok(ConstrainedCase {
        problem: Box::new(sphere_constrained(inst)),
        z_feas: feasible_seed_point(cell.n),
    })
}

/// Runs the sphere-constrained experiment after [`derivative_gate`] passes.
pub fn run_constrained_bench(config: &BenchConfig) -> Result<Vec<BenchRow>> {
    derivative_gate(config)?;
    run_constrained_bench_with(config, sphere_case)
}

/// Worst finite-difference errors for one problem family in one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCheckRow {
    pub n: usize,
    pub m: usize,
    pub mu: f64,
    pub family: &'static str,
    pub grad_err: f64,
    pub hvp_err: f64,
    pub adjoint_err: f64,
}

impl DerivativeCheckRow {
    pub fn passes(&self) -> bool {
        self.grad_err <= FD_TOL && self.hvp_err <= FD_TOL && self.adjoint_err <= 1e-10
    }
}

const FD_POINTS: usize = 10;

/// Gradient and Hessian-vector checks at ten seeded random points for the
/// regression objective and for the sphere augmented Lagrangian at random
/// `(lambda, rho)`, plus the Jacobian adjoint identity.
pub fn run_derivative_check(config: &BenchConfig) -> Result<Vec<DerivativeCheckRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for (c, &cell) in config.grid.iter().enumerate() {
        let seed = config.instance_seed(c, 0);
        let inst = random_instance(cell.n, cell.m, cell.mu, seed)?;
        let f = robust_regression(inst.clone());
        let sphere = sphere_constrained(inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfdc4);
        let rho_dist = Uniform::new(0.1, 100.0).expect("valid range");
        let scale = 1.0 / (cell.n as f64).sqrt();

        let mut reg = DerivativeCheckRow {
            n: cell.n,
            m: cell.m,
            mu: cell.mu,
            family: "robust_regression",
            grad_err: 0.0,
            hvp_err: 0.0,
            adjoint_err: 0.0,
        };
        let mut al = DerivativeCheckRow {
            family: "sphere_augmented_lagrangian",
            ..reg.clone()
        };
        for _ in 0..FD_POINTS {
            let x = DVector::from_fn(cell.n, |_, _| StandardNormal.sample(&mut rng));
            let r = fd_check(&f, &x, default_fd_step(&x));
            reg.grad_err = reg.grad_err.max(r.grad_err);
            reg.hvp_err = reg.hvp_err.max(r.hvp_err);

            let xs = &x * scale;
            let lambda = DVector::from_fn(1, |_, _| StandardNormal.sample(&mut rng));
            let rho = rho_dist.sample(&mut rng);
            let z = feasible_seed_point(cell.n);
            let l = al_function(&sphere, &lambda, rho, &z);
            let r = fd_check(&l, &xs, default_fd_step(&xs));
            al.grad_err = al.grad_err.max(r.grad_err);
            al.hvp_err = al.hvp_err.max(r.hvp_err);

            let u = DVector::from_fn(cell.n, |_, _| StandardNormal.sample(&mut rng));
            let w = DVector::from_fn(1, |_, _| StandardNormal.sample(&mut rng));
            let lhs = u.dot(&sphere.jacobian_tvec(&xs, &w));
            let rhs = w.dot(&sphere.jacobian_vec(&xs, &u));
            al.adjoint_err = al.adjoint_err.max((lhs - rhs).abs() / lhs.abs().max(1.0));
        }
        rows.push(reg);
        rows.push(al);
    }
    Ok(rows)
}

/// Fails with the first problem family whose derivatives disagree with
/// finite differences on any grid cell.
pub fn derivative_gate(config: &BenchConfig) -> Result<()> {
    match run_derivative_check(config)?
        .into_iter()
        .find(|r| !r.passes())
    {
        Some(r) => Err(Error::DerivativeGate {
            family: r.family,
            n: r.n,
            m: r.m,
            grad_err: r.grad_err,
            hvp_err: r.hvp_err,
        }),
        None => Ok(()),
    }
}

pub const CSV_HEADER: [&str; 8] = [
    "n",
    "m",
    "mu",
    "mean_objective",
    "mean_iterations",
    "mean_feasibility",
    "mean_wall_time_s",
    "all_residuals_pass",
];

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.mu.to_string(),
            r.mean_objective.to_string(),
            r.mean_iterations.to_string(),
            r.mean_feasibility
                .map(|v| v.to_string())
                .unwrap_or_default(),
            r.mean_wall_time_s.to_string(),
            r.all_residuals_pass().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Table layout with objective, iteration and time columns; constrained rows
/// add the feasibility violation in units of `1e-4`.
pub fn write_markdown<W: Write>(rows: &[BenchRow], constrained: bool, mut out: W) -> Result<()> {
    if constrained {
        writeln!(
            out,
            "| n | m | mu | Objective value | Feasibility violation (x1e-4) | Total inner iterations | CPU time (s) |"
        )?;
        writeln!(out, "|---|---|---|---|---|---|---|")?;
    } else {
        writeln!(
            out,
            "| n | m | mu | Objective value | Iterations | CPU time (s) |"
        )?;
        writeln!(out, "|---|---|---|---|---|---|")?;
    }
    for r in rows {
        if constrained {
            writeln!(
                out,
                "| {} | {} | {} | {:.1} | {:.2} | {:.1} | {:.2} |",
                r.n,
                r.m,
                r.mu,
                r.mean_objective,
                r.mean_feasibility.unwrap_or(f64::NAN) * 1e4,
                r.mean_iterations,
                r.mean_wall_time_s
            )?;
        } else {
            writeln!(
                out,
                "| {} | {} | {} | {:.1} | {:.1} | {:.2} |",
                r.n, r.m, r.mu, r.mean_objective, r.mean_iterations, r.mean_wall_time_s
            )?;
        }
    }
    Ok(())
}

/// Writes `rows` to `path` (stdout when `None`).
pub fn emit_report(
    rows: &[BenchRow],
    format: ReportFormat,
    constrained: bool,
    path: Option<&Path>,
) -> Result<()> {
    let mut buf = Vec::new();
    match format {
        ReportFormat::Csv => write_csv(rows, &mut buf)?,
        ReportFormat::Markdown => write_markdown(rows, constrained, &mut buf)?,
    }
    match path {
        Some(p) => std::fs::write(p, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

pub fn write_derivative_csv<W: Write>(rows: &[DerivativeCheckRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n",
        "m",
        "mu",
        "family",
        "grad_err",
        "hvp_err",
        "adjoint_err",
        "pass",
    ])?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.m.to_string(),
            r.mu.to_string(),
            r.family.to_string(),
            format!("{:e}", r.grad_err),
            format!("{:e}", r.hvp_err),
            format!("{:e}", r.adjoint_err),
            r.passes().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
