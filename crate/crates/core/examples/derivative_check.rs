//! Finite-difference checks of a user-supplied function, one of which has a
//! deliberate gradient bug.
//!
//!     cargo run --example derivative_check

use alnewton::operators::{default_fd_step, fd_check};
use alnewton::SmoothFunction;
use nalgebra::DVector;

/// Rosenbrock's function in two variables.
struct Rosenbrock {
    buggy: bool,
}

impl SmoothFunction for Rosenbrock {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let t = x[1] - x[0] * x[0];
        let coeff = if self.buggy { 200.0 } else { 400.0 };
        DVector::from_vec(vec![-2.0 * (1.0 - x[0]) - coeff * x[0] * t, 200.0 * t])
    }
    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let h11 = 2.0 - 400.0 * (x[1] - 3.0 * x[0] * x[0]);
        let h12 = -400.0 * x[0];
        DVector::from_vec(vec![h11 * v[0] + h12 * v[1], h12 * v[0] + 200.0 * v[1]])
    }
}

fn main() {
    let x = DVector::from_vec(vec![-1.2, 1.0]);
    for buggy in [false, true] {
        let report = fd_check(&Rosenbrock { buggy }, &x, default_fd_step(&x));
        println!(
            "buggy = {buggy}: gradient error {:.1e}, Hessian-vector error {:.1e}, passes: {}",
            report.grad_err,
            report.hvp_err,
            report.passes(1e-5)
        );
    }
}
