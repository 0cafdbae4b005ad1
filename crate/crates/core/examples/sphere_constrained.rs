//! The augmented Lagrangian method on the unit sphere: first a two-variable
//! problem started at a saddle, then robust regression.
//!
//!     cargo run --release --example sphere_constrained

use alnewton::augmented_lagrangian::{al_solve, AlParams, EqualityProblem};
use alnewton::problems::{
    feasible_seed_point, random_instance, sphere_constrained, SphereConstrained,
};
use alnewton::{Oracle, SmoothFunction};
use nalgebra::DVector;

/// `f(x) = x_1`.
struct FirstCoordinate;

impl SmoothFunction for FirstCoordinate {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        x[0]
    }
    fn gradient(&self, _x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(vec![1.0, 0.0])
    }
    fn hess_vec(&self, _x: &DVector<f64>, _v: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(2)
    }
}

fn params(z: DVector<f64>) -> AlParams {
    let mut p = AlParams::new(1e-4, 1e-2, z.clone(), z, 1);
    p.inner.oracle = Oracle::Exact;
    p
}

fn main() -> alnewton::Result<()> {
    // (1, 0) is first-order stationary but maximizes x_1 on the circle.
    let circle = SphereConstrained::with_objective(FirstCoordinate);
    let report = al_solve(&circle, &params(DVector::from_vec(vec![1.0, 0.0])))?;
    println!(
        "circle: x = ({:.6}, {:.6}), multiplier {:.6}, penalties {:?}",
        report.x_final[0], report.x_final[1], report.lambda_tilde_final[0], report.rho_trace
    );

    let problem = sphere_constrained(random_instance(100, 10, 1.0, 3)?);
    let report = al_solve(&problem, &params(feasible_seed_point(100)))?;
    let r = report.residuals;
    println!("regression on the sphere: {:?}", report.status);
    println!(
        "  objective {:.6}",
        problem.objective().value(&report.x_final)
    );
    println!(
        "  outer iterations {}, inner iterations {}",
        report.outer_iters,
        report.total_inner_iterations()
    );
    println!(
        "  |grad L| = {:.2e}, |c| = {:.2e}, reduced lambda_min = {:.4}",
        r.fosp_grad,
        r.feasibility,
        r.sosp_lambda_min.unwrap_or(f64::NAN)
    );
    Ok(())
}
