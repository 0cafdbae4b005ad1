//! Matrix-free Newton-CG and a Newton-CG based augmented Lagrangian method
//! for approximate second-order stationary points.
//!
//! Every solver touches Hessians only through Hessian-vector products. The
//! runnable programs under `examples/` walk through each piece:
//!
//! * `capped_cg_demo`: the capped conjugate gradient direction finder
//! * `lanczos_oracle`: the randomized and exact minimum-eigenvalue oracles
//! * `unconstrained_regression`: Newton-CG on robust regression
//! * `sphere_constrained`: the augmented Lagrangian method on the unit sphere
//! * `derivative_check`: finite-difference checks of user derivatives
//! * `benchmark_report`: running a benchmark grid and writing a report

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augmented_lagrangian;
pub mod bench;
pub mod capped_cg;
pub mod error;
pub mod meo;
pub mod newton_cg;
pub mod operators;
pub mod problems;

pub use augmented_lagrangian::{al_solve, AlParams, AlReport, AlStatus, EqualityProblem};
pub use capped_cg::{capped_cg, CgOutcome, CgParams, DirectionKind};
pub use error::{Error, Result};
pub use meo::{exact_meo, lanczos_meo, MeoKind, MeoOutcome, MeoParams, Oracle};
pub use newton_cg::{newton_cg, LineSearchRule, NewtonCgParams, NewtonCgReport, Status};
pub use operators::{Counted, EvalCounts, SmoothFunction, SymmetricOperator};
pub use problems::{RegressionInstance, RobustRegression, SphereConstrained};
