use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use alnewton::bench::{self, BenchConfig, Experiment, GridCell, ReportFormat, THREADS_ENV};
use alnewton::newton_cg::{newton_cg, LineSearchRule};
use alnewton::problems::{
    random_instance, robust_regression, sphere_constrained, RegressionInstance,
};
use alnewton::{al_solve, Oracle, Result, SmoothFunction};

#[derive(Parser)]
#[command(
    name = "alnewton",
    version,
    about = "Newton-CG and augmented Lagrangian benchmarks"
)]
#[command(after_help = format!("Worker threads are read from {THREADS_ENV}."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Newton-CG on the robust-regression grid.
    BenchUnconstrained(BenchArgs),
    /// Augmented Lagrangian on the sphere-constrained grid.
    BenchConstrained(BenchArgs),
    /// Finite-difference checks of every derivative routine.
    CheckDerivatives(BenchArgs),
    /// Solve one instance and print the iteration trace.
    Solve(SolveArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Grid as `n,m,mu;n,m,mu;...`.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, value_enum)]
    oracle: Option<Oracle>,
    #[arg(long, value_enum)]
    line_search: Option<LineSearchRule>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<ReportFormat>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemKind {
    Unconstrained,
    Constrained,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum, default_value = "unconstrained")]
    problem: ProblemKind,
    /// Instance file; a random instance is drawn when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Writes the instance used to this file.
    #[arg(long)]
    save_instance: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "exact")]
    oracle: Oracle,
    #[arg(long, value_enum, default_value = "hybrid")]
    line_search: LineSearchRule,
}

fn default_grid(experiment: Experiment) -> Vec<GridCell> {
    let (ns, ms): (&[usize], &[usize]) = match experiment {
        Experiment::Constrained => (&[100, 200], &[10, 50, 100]),
        _ => (&[100, 200, 300], &[10, 50, 100, 200]),
    };
    let mut grid = Vec::new();
    for &n in ns {
        for &m in ms {
            for mu in [1.0, 5.0] {
                grid.push(GridCell { n, m, mu });
            }
        }
    }
    grid
}

fn load_config(experiment: Experiment, args: &BenchArgs) -> Result<BenchConfig> {
    let mut cfg = match &args.config {
        Some(path) => BenchConfig::load(path)?,
        None => BenchConfig::new(experiment, default_grid(experiment)),
    };
    cfg.experiment = experiment;
    if let Some(g) = &args.grid {
        cfg.grid = GridCell::parse_list(g)?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(k) = args.instances {
        cfg.instances_per_cell = k;
    }
    if let Some(o) = args.oracle {
        cfg.oracle = o;
    }
    if let Some(l) = args.line_search {
        cfg.line_search = l;
    }
    if args.out.is_some() {
        cfg.output.path = args.out.clone();
    }
    if let Some(f) = args.format {
        cfg.output.format = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_bench(experiment: Experiment, args: &BenchArgs) -> Result<bool> {
    let cfg = load_config(experiment, args)?;
    let out = cfg.output.path.as_deref();
    match experiment {
        Experiment::DerivativeCheck => {
            let rows = bench::run_derivative_check(&cfg)?;
            let mut buf = Vec::new();
            bench::write_derivative_csv(&rows, &mut buf)?;
            match out {
                Some(p) => std::fs::write(p, buf)?,
                None => print!("{}", String::from_utf8_lossy(&buf)),
            }
            Ok(rows.iter().all(|r| r.passes()))
        }
        Experiment::Unconstrained | Experiment::Constrained => {
            let constrained = experiment == Experiment::Constrained;
            let rows = if constrained {
                bench::run_constrained_bench(&cfg)?
            } else {
                bench::run_unconstrained_bench(&cfg)?
            };
            bench::emit_report(&rows, cfg.output.format, constrained, out)?;
            let mut ok = true;
            for row in &rows {
                for run in row.runs.iter().filter(|r| !r.residuals_pass) {
                    ok = false;
                    eprintln!(
                        "residual check failed: n={} m={} mu={} seed={}{}",
                        row.n,
                        row.m,
                        row.mu,
                        run.seed,
                        run.failure
                            .as_deref()
                            .map(|e| format!(" ({e})"))
                            .unwrap_or_default()
                    );
                }
            }
            Ok(ok)
        }
    }
}

fn solve(args: &SolveArgs) -> Result<bool> {
    let inst = match &args.instance {
        Some(p) => RegressionInstance::load(p)?,
        None => random_instance(args.n, args.m, args.mu, args.seed)?,
    };
    if let Some(p) = &args.save_instance {
        inst.save(p)?;
    }
    let mut cfg = BenchConfig::new(
        match args.problem {
            ProblemKind::Unconstrained => Experiment::Unconstrained,
            ProblemKind::Constrained => Experiment::Constrained,
        },
        vec![],
    );
    cfg.oracle = args.oracle;
    cfg.line_search = args.line_search;
    let n = inst.n();
    match args.problem {
        ProblemKind::Unconstrained => {
            let f = robust_regression(inst);
            let params = cfg.newton_params(args.seed);
            let report = newton_cg(&f, &DVector::from_element(n, 1.0), &params)?;
            println!("iter kind    alpha        f_after      |g|          |d|          cg_iters");
            for (k, s) in report.trace.iter().enumerate() {
                println!(
                    "{k:<4} {:<7} {:<12.4e} {:<12.6e} {:<12.4e} {:<12.4e} {}",
                    format!("{:?}", s.kind),
                    s.alpha,
                    s.f_after,
                    s.grad_norm,
                    s.d_norm,
                    s.cg_iterations
                );
            }
            let grad = f.gradient(&report.x_final).norm();
            println!(
                "status {:?}  f = {:.6}  |g| = {:.3e}  hess-vec products = {}",
                report.status, report.f_final, grad, report.eval_counts.hess_vecs
            );
            Ok(report.status == alnewton::Status::SecondOrderPoint && grad <= params.eps_g)
        }
        ProblemKind::Constrained => {
            let problem = sphere_constrained(inst);
            let z = alnewton::problems::feasible_seed_point(n);
            let params = cfg.al_params(z.clone(), z, 1, args.seed);
            let report = al_solve(&problem, &params)?;
            println!("outer tau_g        tau_h        rho          |c~|         inner_iters");
            for (k, (sp, inner)) in report
                .subproblems
                .iter()
                .zip(&report.inner_reports)
                .enumerate()
            {
                println!(
                    "{k:<5} {:<12.4e} {:<12.4e} {:<12.4e} {:<12.4e} {}",
                    sp.tau_g,
                    sp.tau_h,
                    sp.rho,
                    report.ctilde_norm_trace[k + 1],
                    inner.iterations()
                );
            }
            let res = report.residuals;
            println!(
                "status {:?}  f = {:.6}  |grad L| = {:.3e}  |c| = {:.3e}  lambda_min = {}",
                report.status,
                alnewton::augmented_lagrangian::EqualityProblem::objective(&problem)
                    .value(&report.x_final),
                res.fosp_grad,
                res.feasibility,
                res.sosp_lambda_min
                    .map_or("skipped".into(), |l| format!("{l:.3e}"))
            );
            Ok(report.status == alnewton::AlStatus::Converged
                && res.fosp_grad <= params.eps1
                && res.feasibility <= params.eps1
                && res.sosp_lambda_min.is_none_or(|l| l >= -params.eps2))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::BenchUnconstrained(a) => run_bench(Experiment::Unconstrained, a),
        Command::BenchConstrained(a) => run_bench(Experiment::Constrained, a),
        Command::CheckDerivatives(a) => run_bench(Experiment::DerivativeCheck, a),
        Command::Solve(a) => solve(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
