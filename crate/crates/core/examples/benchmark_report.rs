//! Runs a small benchmark grid from a TOML configuration and prints both
//! report formats.
//!
//!     ALNEWTON_THREADS=4 cargo run --release --example benchmark_report

use alnewton::bench::{
    run_constrained_bench, run_unconstrained_bench, write_csv, write_markdown, BenchConfig,
};

const CONFIG: &str = r#"
experiment = "unconstrained"
instances_per_cell = 4
seed = 2024

[[grid]]
n = 50
m = 10
mu = 1.0

[[grid]]
n = 50
m = 25
mu = 5.0

[solver]
eps_h = "10^-2.5"
"#;

fn main() -> alnewton::Result<()> {
    let cfg = BenchConfig::from_toml(CONFIG)?;
    let rows = run_unconstrained_bench(&cfg)?;
    write_markdown(&rows, false, std::io::stdout())?;
    println!();
    write_csv(&rows, std::io::stdout())?;
    println!();

    let rows = run_constrained_bench(&cfg)?;
    write_markdown(&rows, true, std::io::stdout())?;
    for row in &rows {
        let failed: Vec<_> = row
            .runs
            .iter()
            .filter(|r| !r.residuals_pass)
            .map(|r| r.seed)
            .collect();
        if !failed.is_empty() {
            println!(
                "cell ({}, {}, {}) failed residual checks for seeds {failed:?}",
                row.n, row.m, row.mu
            );
        }
    }
    Ok(())
}
