//! Newton-CG with capped-CG directions, eigenvalue-oracle escapes and a
//! hybrid backtracking line search.
//!
//! Away from first-order points the damped Newton system is solved by capped
//! CG. Solution directions are searched with a quadratic decrease test and
//! negative-curvature directions with a cubic one. Near first-order points the
//! eigenvalue oracle either certifies approximate second-order stationarity,
//! which ends the run, or supplies an escape direction.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::capped_cg::{capped_cg, CgParams, DirectionKind};
use crate::error::{Error, Result};
use crate::meo::{exact_meo, lanczos_meo, MeoKind, MeoParams, Oracle};
use crate::operators::{
    check_finite, default_fd_step, fd_check, Counted, EvalCounts, FdReport, SmoothFunction,
    SymmetricOperator,
};

/// Sufficient-decrease rule used for `Sol` directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum LineSearchRule {
    /// Quadratic test for solution directions, cubic for curvature directions.
    Hybrid,
    /// Cubic test for every direction.
    CubicAlways,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonCgParams {
    pub eps_g: f64,
    pub eps_h: f64,
    pub theta: f64,
    pub zeta: f64,
    pub eta: f64,
    pub delta: f64,
    pub oracle: Oracle,
    pub line_search: LineSearchRule,
    pub max_outer_iters: usize,
    pub max_backtracks: usize,
    /// Base seed for the randomized oracle; iteration `t` uses `seed + t`.
    pub seed: u64,
    /// Stop at the first point with `|grad| <= eps_g` without calling the oracle.
    pub first_order_only: bool,
}

impl NewtonCgParams {
    pub fn new(eps_g: f64, eps_h: f64) -> Self {
        Self {
            eps_g,
            eps_h,
            theta: 0.8,
            zeta: 0.5,
            eta: 0.2,
            delta: 0.01,
            oracle: Oracle::Randomized,
            line_search: LineSearchRule::Hybrid,
            max_outer_iters: 100_000,
            max_backtracks: 200,
            seed: 0,
            first_order_only: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit_closed = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1], got {v}"
                )))
            }
        };
        let unit_open = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must lie in (0, 1), got {v}"
                )))
            }
        };
        unit_closed("eps_g", self.eps_g)?;
        unit_closed("eps_h", self.eps_h)?;
        unit_open("theta", self.theta)?;
        unit_open("zeta", self.zeta)?;
        unit_open("eta", self.eta)?;
        unit_open("delta", self.delta)?;
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter(
                "max_outer_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    SecondOrderPoint,
    FirstOrderPoint,
    IterLimit,
    LineSearchFail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Capped-CG approximate solution.
    Sol,
    /// Capped-CG negative curvature.
    CgNc,
    /// Oracle negative curvature.
    MeoNc,
}

impl StepKind {
    pub fn is_negative_curvature(self) -> bool {
        !matches!(self, StepKind::Sol)
    }
}

/// One accepted step `x+ = x + theta^j d`.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub kind: StepKind,
    pub alpha: f64,
    pub backtracks: usize,
    pub f_before: f64,
    pub f_after: f64,
    pub grad_norm: f64,
    pub d_norm: f64,
    pub cg_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct LineSearchFailure {
    pub kind: StepKind,
    pub f_at_x: f64,
    pub d_norm: f64,
    pub grad_norm: f64,
    /// Finite-difference check of the derivatives at the failing iterate.
    pub derivative_check: FdReport,
}

#[derive(Debug, Clone)]
pub struct NewtonCgReport {
    pub x_final: DVector<f64>,
    pub f_final: f64,
    pub grad_norm_final: f64,
    pub status: Status,
    pub trace: Vec<StepRecord>,
    pub eval_counts: EvalCounts,
    pub meo_certificate: bool,
    /// Oracle's eigenvalue estimate at the certified point.
    pub lambda_min_estimate: Option<f64>,
    pub line_search_failure: Option<LineSearchFailure>,
}

impl NewtonCgReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

fn sgn(s: f64) -> f64 {
    if s >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Scales a negative-curvature direction to `-sgn(d'g) |d'Hd| / |d|^3 d`.
///
/// The result `d+` satisfies `d+'g <= 0` and `d+'H d+ / |d+|^2 = -|d+|`.
pub fn negcurve_rescale(
    d: &DVector<f64>,
    g: &DVector<f64>,
    h: &SymmetricOperator,
) -> Result<DVector<f64>> {
    let curv = d.dot(&h.apply(d)?);
    if !(curv < 0.0) {
        return Err(Error::NotNegativeCurvature(curv));
    }
    let norm = d.norm();
    Ok(d * (-sgn(d.dot(g)) * curv.abs() / (norm * norm * norm)))
}

/// An accepted backtracking step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchStep {
    pub alpha: f64,
    pub backtracks: usize,
    pub f_new: f64,
}

fn backtrack<F: SmoothFunction>(
    f: &Counted<F>,
    x: &DVector<f64>,
    d: &DVector<f64>,
    theta: f64,
    max_backtracks: usize,
    accept: impl Fn(f64, f64) -> bool,
) -> Result<LineSearchStep> {
    let mut alpha = 1.0;
    for j in 0..=max_backtracks {
        let trial = x + d * alpha;
        let f_new = f.value(&trial)?;
        if accept(f_new, alpha) {
            return Ok(LineSearchStep {
                alpha,
                backtracks: j,
                f_new,
            });
        }
        alpha *= theta;
    }
    Err(Error::LineSearchFail { max_backtracks })
}

/// Smallest `j >= 0` with `F(x + theta^j d) < F(x) - eta eps_h theta^(2j) |d|^2`.
#[allow(clippy::too_many_arguments)]
pub fn line_search_sol<F: SmoothFunction>(
    f: &Counted<F>,
    x: &DVector<f64>,
    f_x: f64,
    d: &DVector<f64>,
    theta: f64,
    eta: f64,
    eps_h: f64,
    max_backtracks: usize,
) -> Result<LineSearchStep> {
    let d_sq = d.norm_squared();
    backtrack(f, x, d, theta, max_backtracks, |f_new, alpha| {
        f_new < f_x - eta * eps_h * alpha * alpha * d_sq
    })
}

/// Smallest `j >= 0` with `F(x + theta^j d) < F(x) - eta theta^(2j) |d|^3 / 2`.
pub fn line_search_nc<F: SmoothFunction>(
    f: &Counted<F>,
    x: &DVector<f64>,
    f_x: f64,
    d: &DVector<f64>,
    theta: f64,
    eta: f64,
    max_backtracks: usize,
) -> Result<LineSearchStep> {
    let d_cubed = d.norm().powi(3);
    backtrack(f, x, d, theta, max_backtracks, |f_new, alpha| {
        f_new < f_x - eta * alpha * alpha * d_cubed / 2.0
    })
}

/// Minimizes `f` from `u0`.
///
/// Contract violations (bad parameters, dimension mismatch, non-finite
/// evaluations, capped-CG breakdown) are errors. A line search that runs out
/// of backtracks or an exhausted outer budget is reported through
/// [`Status`] with the trace so far.
pub fn newton_cg<F: SmoothFunction>(
    func: F,
    u0: &DVector<f64>,
    params: &NewtonCgParams,
) -> Result<NewtonCgReport> {
    params.validate()?;
    let f = Counted::new(func);
    crate::operators::check_dim(f.dim(), u0)?;
    check_finite("starting point", u0)?;

    let mut x = u0.clone();
    let mut f_x = f.value(&x)?;
    let mut trace = Vec::new();

    let finish = |x: DVector<f64>,
                  f_x: f64,
                  grad_norm: f64,
                  status: Status,
                  trace: Vec<StepRecord>,
                  certificate: Option<f64>,
                  failure: Option<LineSearchFailure>,
                  counts: EvalCounts| NewtonCgReport {
        x_final: x,
        f_final: f_x,
        grad_norm_final: grad_norm,
        status,
        trace,
        eval_counts: counts,
        meo_certificate: certificate.is_some(),
        lambda_min_estimate: certificate,
        line_search_failure: failure,
    };

    for t in 0..params.max_outer_iters {
        let g = f.gradient(&x)?;
        let grad_norm = g.norm();

        if grad_norm <= params.eps_g && params.first_order_only {
            return Ok(finish(
                x,
                f_x,
                grad_norm,
                Status::FirstOrderPoint,
                trace,
                None,
                None,
                f.counts(),
            ));
        }

        let (kind, d, cg_iterations) = {
            let h = f.hessian_at(&x);
            if grad_norm > params.eps_g {
                let cg = capped_cg(&h, &g, &CgParams::new(params.eps_h, params.zeta))?;
                match cg.kind {
                    DirectionKind::Sol => (StepKind::Sol, cg.d, cg.iterations),
                    DirectionKind::Nc => (
                        StepKind::CgNc,
                        negcurve_rescale(&cg.d, &g, &h)?,
                        cg.iterations,
                    ),
                }
            } else {
                let meo = match params.oracle {
                    Oracle::Exact => exact_meo(&h, params.eps_h)?,
                    Oracle::Randomized => lanczos_meo(
                        &h,
                        &MeoParams::new(
                            params.eps_h,
                            params.delta,
                            params.seed.wrapping_add(t as u64),
                        ),
                    )?,
                };
                match (meo.kind, meo.v) {
                    (MeoKind::NegativeCurvature, Some(v)) => {
                        (StepKind::MeoNc, negcurve_rescale(&v, &g, &h)?, 0)
                    }
                    _ => {
                        drop(h);
                        return Ok(finish(
                            x,
                            f_x,
                            grad_norm,
                            Status::SecondOrderPoint,
                            trace,
                            Some(meo.lambda_estimate),
                            None,
                            f.counts(),
                        ));
                    }
                }
            }
        };

        let quadratic = kind == StepKind::Sol && params.line_search == LineSearchRule::Hybrid;
        let step = if quadratic {
            line_search_sol(
                &f,
                &x,
                f_x,
                &d,
                params.theta,
                params.eta,
                params.eps_h,
                params.max_backtracks,
            )
        } else {
            line_search_nc(
                &f,
                &x,
                f_x,
                &d,
                params.theta,
                params.eta,
                params.max_backtracks,
            )
        };
        let step = match step {
            Ok(s) => s,
            Err(Error::LineSearchFail { .. }) => {
                let failure = LineSearchFailure {
                    kind,
                    f_at_x: f_x,
                    d_norm: d.norm(),
                    grad_norm,
                    derivative_check: fd_check(f.inner(), &x, default_fd_step(&x)),
                };
                return Ok(finish(
                    x,
                    f_x,
                    grad_norm,
                    Status::LineSearchFail,
                    trace,
                    None,
                    Some(failure),
                    f.counts(),
                ));
            }
            Err(e) => return Err(e),
        };

        x.axpy(step.alpha, &d, 1.0);
        trace.push(StepRecord {
            kind,
            alpha: step.alpha,
            backtracks: step.backtracks,
            f_before: f_x,
            f_after: step.f_new,
            grad_norm,
            d_norm: d.norm(),
            cg_iterations,
        });
        f_x = step.f_new;
    }

    let grad_norm = f.gradient(&x)?.norm();
    let counts = f.counts();
    Ok(finish(
        x,
        f_x,
        grad_norm,
        Status::IterLimit,
        trace,
        None,
        None,
        counts,
    ))
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;

    use super::*;

    struct HalfSquare(usize);

    impl SmoothFunction for HalfSquare {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            0.5 * x.norm_squared()
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            x.clone()
        }
        fn hess_vec(&self, _x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
            v.clone()
        }
    }

    struct DoubleWell;

    impl SmoothFunction for DoubleWell {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &DVector<f64>) -> f64 {
            (x[0] * x[0] - 1.0).powi(2) / 4.0
        }
        fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
            DVector::from_element(1, x[0] * (x[0] * x[0] - 1.0))
        }
        fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
            v * (3.0 * x[0] * x[0] - 1.0)
        }
    }

    #[test]
    fn rescale_hand_example() {
        let h =
            SymmetricOperator::from_matrix(DMatrix::from_diagonal(&DVector::from_row_slice(&[
                -1.0, 1.0,
            ])));
        let d = DVector::from_row_slice(&[2.0, 0.0]);
        let g = DVector::from_row_slice(&[0.0, 3.0]);
        let out = negcurve_rescale(&d, &g, &h).unwrap();
        assert_eq!(out.as_slice(), &[-1.0, 0.0]);
    }

    #[test]
    fn rescale_sign_of_zero_is_positive() {
        let h = SymmetricOperator::from_matrix(DMatrix::from_element(1, 1, -1.0));
        let out = negcurve_rescale(
            &DVector::from_element(1, 1.0),
            &DVector::from_element(1, 0.0),
            &h,
        )
        .unwrap();
        assert_eq!(out[0], -1.0);
    }

    #[test]
    fn rescale_rejects_positive_curvature() {
        let h = SymmetricOperator::identity(2);
        assert!(matches!(
            negcurve_rescale(&DVector::from_element(2, 1.0), &DVector::zeros(2), &h),
            Err(Error::NotNegativeCurvature(_))
        ));
    }

    #[test]
    fn quadratic_sol_search_accepts_full_step() {
        let f = Counted::new(HalfSquare(2));
        let x = DVector::from_row_slice(&[1.0, 0.0]);
        let d = -&x / 1.2;
        let step = line_search_sol(&f, &x, 0.5, &d, 0.8, 0.2, 0.1, 200).unwrap();
        assert_eq!(step.backtracks, 0);
        assert_eq!(step.alpha, 1.0);
        assert!((step.f_new - 0.5 * (0.2f64 / 1.2).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn cubic_search_on_double_well() {
        let f = Counted::new(DoubleWell);
        let x = DVector::from_element(1, 0.0);
        let d = DVector::from_element(1, -1.0);
        let step = line_search_nc(&f, &x, 0.25, &d, 0.8, 0.2, 200).unwrap();
        assert_eq!(step.backtracks, 0);
        assert_eq!(step.f_new, 0.0);
    }

    #[test]
    fn line_search_gives_up() {
        // A direction of ascent can never satisfy the decrease test.
        let f = Counted::new(HalfSquare(1));
        let x = DVector::from_element(1, 1.0);
        let d = DVector::from_element(1, 1.0);
        assert!(matches!(
            line_search_nc(&f, &x, 0.5, &d, 0.5, 0.2, 10),
            Err(Error::LineSearchFail { max_backtracks: 10 })
        ));
        assert_eq!(f.counts().values, 11);
    }

    #[test]
    fn convex_quadratic_terminates_with_certificate() {
        let mut params = NewtonCgParams::new(1e-6, 1e-3);
        params.oracle = Oracle::Exact;
        let report = newton_cg(HalfSquare(5), &DVector::from_element(5, 1.0), &params).unwrap();
        assert_eq!(report.status, Status::SecondOrderPoint);
        assert!(report.meo_certificate);
        assert!(report.x_final.norm() <= 1e-6);
    }

    #[test]
    fn double_well_escapes_saddle() {
        let mut params = NewtonCgParams::new(1e-8, 1e-3);
        params.oracle = Oracle::Exact;
        let report = newton_cg(DoubleWell, &DVector::from_element(1, 0.0), &params).unwrap();
        assert_eq!(report.status, Status::SecondOrderPoint);
        let first = &report.trace[0];
        assert_eq!(first.kind, StepKind::MeoNc);
        assert_eq!(first.d_norm, 1.0);
        assert_eq!(first.backtracks, 0);
        assert!((report.x_final[0].abs() - 1.0).abs() < 1e-8);
        assert!(report.f_final < 1e-15);
        assert!((report.lambda_min_estimate.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn first_order_mode_skips_oracle() {
        let mut params = NewtonCgParams::new(1e-8, 1e-3);
        params.first_order_only = true;
        let report = newton_cg(DoubleWell, &DVector::from_element(1, 0.0), &params).unwrap();
        assert_eq!(report.status, Status::FirstOrderPoint);
        assert_eq!(report.eval_counts.hess_vecs, 0);
    }

    #[test]
    fn iteration_limit_is_reported() {
        let mut params = NewtonCgParams::new(1e-12, 1e-3);
        params.max_outer_iters = 1;
        let report = newton_cg(DoubleWell, &DVector::from_element(1, 3.0), &params).unwrap();
        assert_eq!(report.status, Status::IterLimit);
        assert_eq!(report.trace.len(), 1);
    }

    #[test]
    fn rejects_invalid_params() {
        let mut params = NewtonCgParams::new(1e-6, 1e-3);
        params.theta = 1.0;
        assert!(newton_cg(HalfSquare(1), &DVector::zeros(1), &params).is_err());
    }
}
