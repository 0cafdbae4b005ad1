//! Newton-CG based augmented Lagrangian method for
//! `min f(x) s.t. c(x) = 0`.
//!
//! The method works on the shifted constraint `c~(x) = c(x) - c(z)`, where `z`
//! is a known nearly feasible point, so that `z` is exactly feasible for the
//! shifted problem. Each outer iteration minimizes
//! `L~(x) = f(x) + lambda' c~(x) + rho |c~(x)|^2 / 2` with Newton-CG to
//! geometrically tightening tolerances, starting from `z` whenever the previous
//! iterate has a larger augmented value than `f(z)`. Multipliers used in the
//! subproblems are projected onto a ball of radius `Lambda`. The penalty grows
//! by `r` whenever the shifted violation fails to shrink by the factor `alpha`.
//!
//! The penalty must exceed twice the constant `gamma` for which
//! `f + gamma |c|^2 / 2` is bounded below. That constant is a property of the
//! problem and is not checked here.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::newton_cg::{newton_cg, NewtonCgParams, NewtonCgReport, Status};
use crate::operators::{check_dim, check_finite, EvalCounts, SmoothFunction, SymmetricOperator};

/// Evaluators for an equality-constrained problem.
pub trait EqualityProblem {
    fn n(&self) -> usize;
    fn m(&self) -> usize;
    fn objective(&self) -> &dyn SmoothFunction;
    fn constraints(&self, x: &DVector<f64>) -> DVector<f64>;
    /// `grad c(x) w`, an n-vector.
    fn jacobian_tvec(&self, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64>;
    /// `grad c(x)' v`, an m-vector.
    fn jacobian_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64>;
    /// `(sum_i w_i hess c_i(x)) v`.
    fn constraint_hess_vec(
        &self,
        x: &DVector<f64>,
        w: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64>;
}

/// The augmented Lagrangian of the shifted problem as a [`SmoothFunction`].
pub struct AlFunction<'a, P: ?Sized> {
    problem: &'a P,
    lambda: DVector<f64>,
    rho: f64,
    c_ref: DVector<f64>,
    constraint_evals: Cell<usize>,
    jacobian_vecs: Cell<usize>,
}

impl<'a, P: EqualityProblem + ?Sized> AlFunction<'a, P> {
    /// `c_ref` is `c(z)` for the reference point `z`.
    pub fn with_reference(
        problem: &'a P,
        lambda: DVector<f64>,
        rho: f64,
        c_ref: DVector<f64>,
    ) -> Self {
        Self {
            problem,
            lambda,
            rho,
            c_ref,
            constraint_evals: Cell::new(0),
            jacobian_vecs: Cell::new(0),
        }
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn shifted_constraints(&self, x: &DVector<f64>) -> DVector<f64> {
        self.constraint_evals.set(self.constraint_evals.get() + 1);
        self.problem.constraints(x) - &self.c_ref
    }

    /// Constraint and Jacobian tallies; objective tallies come from the solver.
    pub fn constraint_counts(&self) -> EvalCounts {
        EvalCounts {
            constraint_evals: self.constraint_evals.get(),
            jacobian_vecs: self.jacobian_vecs.get(),
            ..EvalCounts::default()
        }
    }

    fn jt(&self, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        self.jacobian_vecs.set(self.jacobian_vecs.get() + 1);
        self.problem.jacobian_tvec(x, w)
    }

    fn j(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.jacobian_vecs.set(self.jacobian_vecs.get() + 1);
        self.problem.jacobian_vec(x, v)
    }
}

impl<P: EqualityProblem + ?Sized> SmoothFunction for AlFunction<'_, P> {
    fn dim(&self) -> usize {
        self.problem.n()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let ct = self.shifted_constraints(x);
        self.problem.objective().value(x)
            + self.lambda.dot(&ct)
            + 0.5 * self.rho * ct.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let ct = self.shifted_constraints(x);
        let w = &self.lambda + ct * self.rho;
        self.problem.objective().gradient(x) + self.jt(x, &w)
    }

    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let ct = self.shifted_constraints(x);
        let w = &self.lambda + ct * self.rho;
        let mut out = self.problem.objective().hess_vec(x, v);
        out += self.problem.constraint_hess_vec(x, &w, v);
        let jv = self.j(x, v);
        out += self.jt(x, &jv) * self.rho;
        out
    }
}

/// Builds `x -> f(x) + lambda' c~(x) + rho |c~(x)|^2 / 2` with `c~ = c - c(z_feas)`.
pub fn al_function<'a, P: EqualityProblem + ?Sized>(
    problem: &'a P,
    lambda: &DVector<f64>,
    rho: f64,
    z_feas: &DVector<f64>,
) -> AlFunction<'a, P> {
    AlFunction::with_reference(problem, lambda.clone(), rho, problem.constraints(z_feas))
}

/// `(max{eps1, r^(k log eps1 / log 2)}, max{eps2, r^(k log eps2 / log 2)})`.
///
/// Written as `eps^(k log2 r)`, which reaches `eps` exactly once
/// `k log2 r >= 1`.
pub fn tolerance_schedule(k: usize, eps1: f64, eps2: f64, r: f64) -> (f64, f64) {
    let exponent = k as f64 * r.log2();
    let tau = |eps: f64| {
        if exponent >= 1.0 {
            eps
        } else {
            eps.powf(exponent).max(eps)
        }
    };
    (tau(eps1), tau(eps2))
}

/// Starting point for subproblem `k`: `z_feas` if `L~(x_k) > f(z_feas)`, else `x_k`.
pub fn warm_start_point<P: EqualityProblem + ?Sized>(
    problem: &P,
    x_k: &DVector<f64>,
    lambda_k: &DVector<f64>,
    rho_k: f64,
    z_feas: &DVector<f64>,
) -> DVector<f64> {
    let al = al_function(problem, lambda_k, rho_k, z_feas);
    if al.value(x_k) > problem.objective().value(z_feas) {
        z_feas.clone()
    } else {
        x_k.clone()
    }
}

/// Returns `(lambda~, lambda_next)` with `lambda~ = lambda_k + rho_k c~` and
/// `lambda_next` its projection onto the ball of radius `lambda_max`.
pub fn multiplier_update(
    lambda_k: &DVector<f64>,
    rho_k: f64,
    ctilde_next: &DVector<f64>,
    lambda_max: f64,
) -> (DVector<f64>, DVector<f64>) {
    let tilde = lambda_k + ctilde_next * rho_k;
    let norm = tilde.norm();
    let next = if norm <= lambda_max {
        tilde.clone()
    } else {
        &tilde * (lambda_max / norm)
    };
    (tilde, next)
}

/// `r rho_k` if `k = 0` or `|c~(x_{k+1})| > alpha |c~(x_k)|`, else `rho_k`.
pub fn penalty_update(
    rho_k: f64,
    ctilde_next_norm: f64,
    ctilde_curr_norm: f64,
    alpha: f64,
    r: f64,
    k: usize,
) -> f64 {
    if k == 0 || ctilde_next_norm > alpha * ctilde_curr_norm {
        r * rho_k
    } else {
        rho_k
    }
}

/// First-order residuals `(|grad f + grad c lambda|, |c(x)|)`.
pub fn check_fosp<P: EqualityProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    lambda_tilde: &DVector<f64>,
) -> (f64, f64) {
    let grad = problem.objective().gradient(x) + problem.jacobian_tvec(x, lambda_tilde);
    (grad.norm(), problem.constraints(x).norm())
}

/// Smallest eigenvalue of the Lagrangian Hessian restricted to the null space
/// of `grad c(x)'`, computed densely. Returns `+inf` when that null space is
/// trivial.
pub fn check_sosp<P: EqualityProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    lambda_tilde: &DVector<f64>,
) -> Result<f64> {
    let n = problem.n();
    let m = problem.m();
    let op = SymmetricOperator::new(n, |v| {
        problem.objective().hess_vec(x, v) + problem.constraint_hess_vec(x, lambda_tilde, v)
    });
    let hess = op.dense_materialize()?;
    let hess = (&hess + hess.transpose()) * 0.5;

    let basis = if m == 0 {
        DMatrix::identity(n, n)
    } else {
        let mut jac = DMatrix::zeros(n, m);
        let mut e = DVector::zeros(m);
        for i in 0..m {
            e[i] = 1.0;
            jac.set_column(i, &problem.jacobian_tvec(x, &e));
            e[i] = 0.0;
        }
        let gram = SymmetricEigen::new(&jac * jac.transpose());
        let sigma_max = gram.eigenvalues.amax().sqrt();
        let tol = 1e-10 * sigma_max.max(f64::MIN_POSITIVE);
        let cols: Vec<_> = gram
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &ev)| ev.max(0.0).sqrt() <= tol)
            .map(|(i, _)| gram.eigenvectors.column(i).into_owned())
            .collect();
        if cols.is_empty() {
            return Ok(f64::INFINITY);
        }
        DMatrix::from_columns(&cols)
    };
    let reduced = basis.transpose() * hess * &basis;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    Ok(SymmetricEigen::new(reduced).eigenvalues.min())
}

#[derive(Debug, Clone)]
pub struct AlParams {
    pub eps1: f64,
    pub eps2: f64,
    /// Multiplier ball radius `Lambda`.
    pub lambda_max: f64,
    pub rho0: f64,
    pub alpha: f64,
    pub r: f64,
    pub delta: f64,
    /// Known point with `|c(z_feas)| <= eps1 / 2`.
    pub z_feas: DVector<f64>,
    pub x0: DVector<f64>,
    pub lambda0: DVector<f64>,
    /// Template for the subproblem solver; tolerances are overwritten per outer iteration.
    pub inner: NewtonCgParams,
    pub max_outer: usize,
    /// Drop the second-order requirement on subproblem solutions.
    pub fosp_only: bool,
    /// Largest `n` for which the final dense reduced-Hessian check runs.
    pub sosp_check_cap: usize,
}

impl AlParams {
    /// Defaults `Lambda = 100`, `rho0 = 10`, `alpha = 0.25`, `r = 10`, `lambda0 = 0`.
    pub fn new(eps1: f64, eps2: f64, z_feas: DVector<f64>, x0: DVector<f64>, m: usize) -> Self {
        Self {
            eps1,
            eps2,
            lambda_max: 100.0,
            rho0: 10.0,
            alpha: 0.25,
            r: 10.0,
            delta: 0.01,
            z_feas,
            x0,
            lambda0: DVector::zeros(m),
            inner: NewtonCgParams::new(eps1, eps2),
            max_outer: 1000,
            fosp_only: false,
            sosp_check_cap: 500,
        }
    }

    fn validate(&self, n: usize, m: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.eps1 > 0.0 && self.eps1 < 1.0 && self.eps2 > 0.0 && self.eps2 < 1.0) {
            return bad(format!(
                "eps1, eps2 must lie in (0, 1), got {}, {}",
                self.eps1, self.eps2
            ));
        }
        if !(self.lambda_max > 0.0) || !(self.rho0 > 0.0) {
            return bad("Lambda and rho0 must be positive".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.r > 1.0) {
            return bad(format!("r must exceed 1, got {}", self.r));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        check_dim(n, &self.z_feas)?;
        check_dim(n, &self.x0)?;
        check_dim(m, &self.lambda0)?;
        check_finite("reference point", &self.z_feas)?;
        check_finite("starting point", &self.x0)?;
        check_finite("initial multiplier", &self.lambda0)?;
        if self.lambda0.norm() > self.lambda_max {
            return bad("initial multiplier lies outside the ball of radius Lambda".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlStatus {
    Converged,
    OuterLimit,
}

/// What outer iteration `k` handed to, and got back from, Newton-CG.
#[derive(Debug, Clone)]
pub struct SubproblemRecord {
    pub tau_g: f64,
    pub tau_h: f64,
    pub rho: f64,
    /// Truncated multiplier used in the subproblem.
    pub lambda: DVector<f64>,
    pub started_at_reference: bool,
    /// `L~(x_{k+1}, lambda_k; rho_k)`.
    pub al_value: f64,
    /// `f(z_feas)`.
    pub f_reference: f64,
    /// `|grad_x L~(x_{k+1}, lambda_k; rho_k)|`.
    pub al_grad_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub fosp_grad: f64,
    pub feasibility: f64,
    pub sosp_lambda_min: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AlReport {
    pub x_final: DVector<f64>,
    /// Untruncated multiplier estimate at the output.
    pub lambda_tilde_final: DVector<f64>,
    pub outer_iters: usize,
    /// `rho_0, rho_1, ...` for every subproblem solved.
    pub rho_trace: Vec<f64>,
    /// `|c~(x_0)|, |c~(x_1)|, ...`.
    pub ctilde_norm_trace: Vec<f64>,
    pub subproblems: Vec<SubproblemRecord>,
    pub inner_reports: Vec<NewtonCgReport>,
    pub residuals: Residuals,
    pub status: AlStatus,
    pub eval_counts: EvalCounts,
}

impl AlReport {
    pub fn total_inner_iterations(&self) -> usize {
        self.inner_reports
            .iter()
            .map(NewtonCgReport::iterations)
            .sum()
    }
}

/// Runs the augmented Lagrangian method.
pub fn al_solve<P: EqualityProblem + ?Sized>(problem: &P, params: &AlParams) -> Result<AlReport> {
    let n = problem.n();
    let m = problem.m();
    params.validate(n, m)?;

    let c_ref = problem.constraints(&params.z_feas);
    check_dim(m, &c_ref)?;
    let bound = params.eps1 / 2.0;
    if c_ref.norm() > bound {
        return Err(Error::InfeasibleReference {
            norm: c_ref.norm(),
            bound,
        });
    }
    let f_reference = problem.objective().value(&params.z_feas);

    let mut x = params.x0.clone();
    let mut lambda = params.lambda0.clone();
    let mut rho = params.rho0;
    let mut rho_trace = Vec::new();
    let mut ctilde_norm_trace = vec![(problem.constraints(&x) - &c_ref).norm()];
    let mut subproblems = Vec::new();
    let mut inner_reports = Vec::new();
    let mut counts = EvalCounts::default();

    for k in 0..params.max_outer {
        let (tau_g, tau_h) = tolerance_schedule(k, params.eps1, params.eps2, params.r);
        rho_trace.push(rho);
        let al = AlFunction::with_reference(problem, lambda.clone(), rho, c_ref.clone());
        let started_at_reference = al.value(&x) > f_reference;
        let start = if started_at_reference {
            params.z_feas.clone()
        } else {
            x.clone()
        };

        let mut inner = params.inner;
        inner.eps_g = tau_g;
        inner.eps_h = tau_h;
        inner.first_order_only = params.fosp_only;
        inner.seed = params
            .inner
            .seed
            .wrapping_add((k as u64).wrapping_mul(1_000_003));
        let report = newton_cg(&al, &start, &inner)?;
        counts += report.eval_counts;
        let expected = if params.fosp_only {
            Status::FirstOrderPoint
        } else {
            Status::SecondOrderPoint
        };
        if report.status != expected {
            return Err(Error::SubproblemFailed {
                outer: k,
                status: report.status,
            });
        }

        let x_next = report.x_final.clone();
        let ctilde = al.shifted_constraints(&x_next);
        subproblems.push(SubproblemRecord {
            tau_g,
            tau_h,
            rho,
            lambda: lambda.clone(),
            started_at_reference,
            al_value: report.f_final,
            f_reference,
            al_grad_norm: report.grad_norm_final,
        });
        counts += al.constraint_counts();
        inner_reports.push(report);

        let (lambda_tilde, lambda_next) =
            multiplier_update(&lambda, rho, &ctilde, params.lambda_max);
        let ctilde_norm = ctilde.norm();
        let ctilde_prev = *ctilde_norm_trace.last().expect("seeded with x0");
        ctilde_norm_trace.push(ctilde_norm);

        let feasibility = problem.constraints(&x_next).norm();
        let done = tau_g <= params.eps1 && tau_h <= params.eps2 && feasibility <= params.eps1;
        if done || k + 1 == params.max_outer {
            let residuals = final_residuals(problem, &x_next, &lambda_tilde, params)?;
            return Ok(AlReport {
                x_final: x_next,
                lambda_tilde_final: lambda_tilde,
                outer_iters: k + 1,
                rho_trace,
                ctilde_norm_trace,
                subproblems,
                inner_reports,
                residuals,
                status: if done {
                    AlStatus::Converged
                } else {
                    AlStatus::OuterLimit
                },
                eval_counts: counts,
            });
        }

        lambda = lambda_next;
        rho = penalty_update(rho, ctilde_norm, ctilde_prev, params.alpha, params.r, k);
        x = x_next;
    }
    Err(Error::InvalidParameter("max_outer must be positive".into()))
}

fn final_residuals<P: EqualityProblem + ?Sized>(
    problem: &P,
    x: &DVector<f64>,
    lambda_tilde: &DVector<f64>,
    params: &AlParams,
) -> Result<Residuals> {
    let (fosp_grad, feasibility) = check_fosp(problem, x, lambda_tilde);
    let sosp_lambda_min = if problem.n() <= params.sosp_check_cap {
        Some(check_sosp(problem, x, lambda_tilde)?)
    } else {
        None
    };
    Ok(Residuals {
        fosp_grad,
        feasibility,
        sosp_lambda_min,
    })
}
