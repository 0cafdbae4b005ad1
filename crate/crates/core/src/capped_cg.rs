//! Capped conjugate gradient for the damped system `(H + 2 eps I) d = -g`.
//!
//! CG runs on the damped matrix while monitoring curvature. It returns either
//! an approximate solution (`Sol`) or a direction of curvature below `-eps`
//! for `H` (`Nc`). The bound `U` on `|H|` is learned from the products seen so
//! far, and the derived quantities `kappa`, `zeta_hat`, `tau`, `T` follow it.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::operators::{check_dim, check_finite, SymmetricOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionKind {
    Sol,
    Nc,
}

#[derive(Debug, Clone, Copy)]
pub struct CgParams {
    /// Damping `eps`, in (0, 1].
    pub eps: f64,
    /// Relative accuracy `zeta`, in (0, 1).
    pub zeta: f64,
    /// Initial estimate of `|H|`.
    pub u_init: f64,
    /// Iteration safeguard; `None` means `20 n + 200`.
    pub max_iters: Option<usize>,
}

impl CgParams {
    pub fn new(eps: f64, zeta: f64) -> Self {
        Self {
            eps,
            zeta,
            u_init: 0.0,
            max_iters: None,
        }
    }

    fn validate(&self) -> Result<()> {
        // eps = 1 is reached by the first augmented Lagrangian subproblem.
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "capped CG eps must lie in (0, 1], got {}",
                self.eps
            )));
        }
        if !(self.zeta > 0.0 && self.zeta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "capped CG zeta must lie in (0, 1), got {}",
                self.zeta
            )));
        }
        if !(self.u_init >= 0.0 && self.u_init.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "capped CG U must be finite and nonnegative, got {}",
                self.u_init
            )));
        }
        Ok(())
    }
}

/// Final values of the adaptive quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgMeta {
    pub u: f64,
    pub kappa: f64,
    pub zeta_hat: f64,
    pub tau: f64,
    pub t: f64,
}

impl CgMeta {
    fn new(u: f64, eps: f64, zeta: f64) -> Self {
        let kappa = (u + 2.0 * eps) / eps;
        let tau = kappa.sqrt() / (kappa.sqrt() + 1.0);
        Self {
            u,
            kappa,
            zeta_hat: zeta / (3.0 * kappa),
            tau,
            t: 4.0 * kappa.powi(4) / (1.0 - tau.sqrt()).powi(2),
        }
    }

    fn raise(&mut self, hv_norm: f64, v_norm: f64, eps: f64, zeta: f64) {
        if hv_norm > self.u * v_norm {
            *self = Self::new(hv_norm / v_norm, eps, zeta);
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub kind: DirectionKind,
    pub d: DVector<f64>,
    pub iterations: usize,
    pub meta: CgMeta,
}

/// State at the point the safeguard fired.
#[derive(Debug, Clone)]
pub struct CgPartial {
    pub iterations: usize,
    pub y: DVector<f64>,
    pub residual_norm: f64,
    pub meta: CgMeta,
}

fn outcome(kind: DirectionKind, d: DVector<f64>, iterations: usize, meta: CgMeta) -> CgOutcome {
    CgOutcome {
        kind,
        d,
        iterations,
        meta,
    }
}

/// Scales `y` by the minimizer of the quadratic model along it, which makes
/// `d'g = -d'(H + 2 eps I) d` hold to rounding. Costs one product.
fn galerkin_rescale(
    h: &SymmetricOperator,
    g: &DVector<f64>,
    eps: f64,
    y: DVector<f64>,
) -> Result<DVector<f64>> {
    let curv = y.dot(&(h.apply(&y)? + &y * (2.0 * eps)));
    let s = -y.dot(g) / curv;
    Ok(if curv > 0.0 && s.is_finite() {
        y * s
    } else {
        y
    })
}

/// Runs capped CG on `(H + 2 eps I) d = -g`.
///
/// Each iteration applies `H` twice: once to the new search direction (reused
/// by the next step) and once to the residual for the `|H r|` monitor. `H y`
/// is carried along the CG recurrence and stored for every iterate so the
/// final history scan needs no further products. A `Sol` return spends one
/// more product on a one-dimensional Galerkin rescale.
pub fn capped_cg(h: &SymmetricOperator, g: &DVector<f64>, params: &CgParams) -> Result<CgOutcome> {
    params.validate()?;
    check_dim(h.dim(), g)?;
    check_finite("capped CG right-hand side", g)?;
    let n = g.len();
    let r0_norm = g.norm();
    if r0_norm == 0.0 {
        return Err(Error::ZeroGradient);
    }
    let eps = params.eps;
    let zeta = params.zeta;
    let max_iters = params.max_iters.unwrap_or(20 * n + 200);
    let mut meta = CgMeta::new(params.u_init, eps, zeta);

    let mut y = DVector::zeros(n);
    let mut hy = DVector::zeros(n);
    let mut r = g.clone();
    let mut p = -g;
    let mut hp = h.apply(&p)?;
    let mut hbar_p = &hp + &p * (2.0 * eps);
    let mut p_curv = p.dot(&hbar_p);

    if p_curv < eps * p.norm_squared() {
        return Ok(outcome(DirectionKind::Nc, p, 0, meta));
    }
    meta.raise(hp.norm(), p.norm(), eps, zeta);

    let mut ys = vec![y.clone()];
    let mut hys = vec![hy.clone()];
    let mut rr = r.norm_squared();
    let mut j = 0usize;

    loop {
        if j >= max_iters {
            return Err(Error::CgIterationLimit(Box::new(CgPartial {
                iterations: j,
                y,
                residual_norm: rr.sqrt(),
                meta,
            })));
        }
        let alpha = rr / p_curv;
        y.axpy(alpha, &p, 1.0);
        hy.axpy(alpha, &hp, 1.0);
        r.axpy(alpha, &hbar_p, 1.0);
        let rr_next = r.norm_squared();
        let beta = rr_next / rr;
        rr = rr_next;
        p = &p * beta - &r;
        j += 1;

        hp = h.apply(&p)?;
        hbar_p = &hp + &p * (2.0 * eps);
        p_curv = p.dot(&hbar_p);
        let hr = h.apply(&r)?;

        meta.raise(hp.norm(), p.norm(), eps, zeta);
        meta.raise(hy.norm(), y.norm(), eps, zeta);
        meta.raise(hr.norm(), r.norm(), eps, zeta);

        let y_sq = y.norm_squared();
        let r_norm = rr.sqrt();
        if y.dot(&hy) + 2.0 * eps * y_sq < eps * y_sq {
            return Ok(outcome(DirectionKind::Nc, y, j, meta));
        } else if r_norm <= meta.zeta_hat * r0_norm {
            let d = galerkin_rescale(h, g, eps, y)?;
            return Ok(outcome(DirectionKind::Sol, d, j, meta));
        } else if p_curv < eps * p.norm_squared() {
            return Ok(outcome(DirectionKind::Nc, p, j, meta));
        } else if r_norm > meta.t.sqrt() * meta.tau.powf(j as f64 / 2.0) * r0_norm {
            let alpha = rr / p_curv;
            let y_next = &y + &p * alpha;
            let hy_next = &hy + &hp * alpha;
            for (yi, hyi) in ys.iter().zip(&hys).take(j) {
                let diff = &y_next - yi;
                let hdiff = &hy_next - hyi;
                let diff_sq = diff.norm_squared();
                if diff.dot(&hdiff) + 2.0 * eps * diff_sq < eps * diff_sq {
                    return Ok(outcome(DirectionKind::Nc, diff, j, meta));
                }
            }
            // Unreachable in exact arithmetic.
            return Err(Error::CgIterationLimit(Box::new(CgPartial {
                iterations: j,
                y,
                residual_norm: r_norm,
                meta,
            })));
        }
        ys.push(y.clone());
        hys.push(hy.clone());
    }
}

fn within(lhs: f64, rhs: f64, tol: f64) -> bool {
    lhs <= rhs + tol * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)
}

/// Checks the four properties every `Sol` direction satisfies:
///
/// * `eps |d|^2 <= d'(H + 2 eps I) d`
/// * `|d| <= 1.1 |g| / eps`
/// * `d'g = -d'(H + 2 eps I) d`
/// * `|(H + 2 eps I) d + g| <= eps zeta |d| / 2`
///
/// each up to a relative slack of `1e-8`.
pub fn validate_sol(
    h: &SymmetricOperator,
    g: &DVector<f64>,
    eps: f64,
    zeta: f64,
    d: &DVector<f64>,
) -> Result<bool> {
    const TOL: f64 = 1e-8;
    let hbar_d = h.apply(d)? + d * (2.0 * eps);
    let d_sq = d.norm_squared();
    let curv = d.dot(&hbar_d);
    let dg = d.dot(g);
    let residual = (&hbar_d + g).norm();

    let curvature_ok = within(eps * d_sq, curv, TOL);
    let length_ok = within(d.norm(), 1.1 * g.norm() / eps, TOL);
    let orth_ok = (dg + curv).abs() <= TOL * dg.abs().max(curv.abs());
    let residual_ok = within(residual, eps * zeta * d.norm() / 2.0, TOL);
    Ok(curvature_ok && length_ok && orth_ok && residual_ok && d_sq > 0.0)
}
