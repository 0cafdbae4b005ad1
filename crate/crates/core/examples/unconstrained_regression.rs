//! Newton-CG on a seeded robust-regression instance, with a dense check of
//! the final Hessian.
//!
//!     cargo run --release --example unconstrained_regression

use alnewton::newton_cg::{newton_cg, NewtonCgParams, StepKind};
use alnewton::problems::{random_instance, robust_regression};
use alnewton::{Oracle, SmoothFunction, SymmetricOperator};
use nalgebra::DVector;

fn main() -> alnewton::Result<()> {
    let f = robust_regression(random_instance(100, 10, 1.0, 7)?);
    let mut params = NewtonCgParams::new(1e-5, 10f64.powf(-2.5));
    params.oracle = Oracle::Exact;

    let report = newton_cg(&f, &DVector::from_element(100, 1.0), &params)?;
    let count = |k: StepKind| report.trace.iter().filter(|s| s.kind == k).count();
    println!("status: {:?}", report.status);
    println!("objective: {:.6}", report.f_final);
    println!(
        "steps: {} ({} Newton-type, {} CG curvature, {} oracle curvature)",
        report.iterations(),
        count(StepKind::Sol),
        count(StepKind::CgNc),
        count(StepKind::MeoNc)
    );
    println!("evaluations: {:?}", report.eval_counts);

    let x = &report.x_final;
    let hess = SymmetricOperator::new(100, |v| f.hess_vec(x, v)).dense_materialize()?;
    let lambda_min = hess.symmetric_eigen().eigenvalues.min();
    println!(
        "|grad| = {:.2e}, lambda_min = {:.4}",
        f.gradient(x).norm(),
        lambda_min
    );
    Ok(())
}
