//! Minimum-eigenvalue oracles.
//!
//! An oracle either returns a unit vector `v` with `v'Hv <= -eps/2` or
//! certifies `lambda_min(H) >= -eps`. The randomized Lanczos oracle certifies
//! with probability at least `1 - delta`; the exact oracle is deterministic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::{random_unit, SymmetricOperator};

/// Which oracle the Newton-CG solver calls near first-order points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    Randomized,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeoKind {
    Certificate,
    NegativeCurvature,
}

#[derive(Debug, Clone)]
pub struct MeoOutcome {
    pub kind: MeoKind,
    /// Unit direction, present iff `kind` is `NegativeCurvature`.
    pub v: Option<DVector<f64>>,
    pub iterations: usize,
    pub lambda_estimate: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct MeoParams {
    pub eps: f64,
    pub delta: f64,
    /// Bound on `|H|`; estimated by power iteration when absent.
    pub norm_estimate: Option<f64>,
    pub seed: u64,
}

impl MeoParams {
    pub fn new(eps: f64, delta: f64, seed: u64) -> Self {
        Self {
            eps,
            delta,
            norm_estimate: None,
            seed,
        }
    }
}

/// Lanczos iteration cap `min{n, 1 + ceil(ln(2.75 n / delta^2) / 2 * sqrt(|H| / eps))}`.
pub fn lanczos_iteration_cap(n: usize, eps: f64, delta: f64, h_norm: f64) -> usize {
    let log_term = (2.75 * n as f64 / (delta * delta)).ln() / 2.0;
    let steps = (log_term * (h_norm / eps).sqrt()).ceil();
    // Saturating float-to-int cast keeps huge ratios at usize::MAX.
    n.min(1usize.saturating_add(steps as usize))
}

/// Power-iteration estimate of `|H|`: ten steps from a seeded random start,
/// inflated by 1.1.
pub fn estimate_operator_norm(h: &SymmetricOperator, seed: u64) -> Result<f64> {
    const STEPS: usize = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = random_unit(h.dim(), &mut rng);
    let mut est = 0.0;
    for _ in 0..STEPS {
        let w = h.apply(&v)?;
        est = w.norm();
        if est == 0.0 {
            return Ok(0.0);
        }
        v = w / est;
    }
    Ok(1.1 * est)
}

fn smallest_eigenpair(m: &DMatrix<f64>) -> (f64, DVector<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    (lambda, eig.eigenvectors.column(idx).into_owned())
}

/// Randomized Lanczos oracle with full reorthogonalization.
///
/// After every iteration the smallest Ritz pair of the tridiagonal matrix is
/// lifted back to the ambient space and tested against `H` using the stored
/// products `H q_i`, so each iteration costs exactly one application of `H`.
pub fn lanczos_meo(h: &SymmetricOperator, params: &MeoParams) -> Result<MeoOutcome> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "oracle needs dimension >= 1".into(),
        ));
    }
    if !(params.eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "oracle eps must be positive, got {}",
            params.eps
        )));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "oracle delta must lie in (0, 1), got {}",
            params.delta
        )));
    }
    let h_norm = match params.norm_estimate {
        Some(v) => v,
        None => estimate_operator_norm(h, params.seed ^ 0x9e37_79b9_7f4a_7c15)?,
    };
    let cap = lanczos_iteration_cap(n, params.eps, params.delta, h_norm);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut q = random_unit(n, &mut rng);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(cap);
    let mut images: Vec<DVector<f64>> = Vec::with_capacity(cap);
    let mut alphas: Vec<f64> = Vec::with_capacity(cap);
    let mut betas: Vec<f64> = Vec::with_capacity(cap);
    let mut lambda_estimate = f64::INFINITY;

    for j in 0..cap {
        let hq = h.apply(&q)?;
        let alpha = q.dot(&hq);
        let mut w = &hq - &q * alpha;
        if let (Some(prev), Some(&beta)) = (basis.last(), betas.last()) {
            w.axpy(-beta, prev, 1.0);
        }
        basis.push(q);
        images.push(hq);
        alphas.push(alpha);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }

        let k = j + 1;
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alphas[r]
            } else if r == c + 1 {
                betas[c]
            } else if c == r + 1 {
                betas[r]
            } else {
                0.0
            }
        });
        let (theta, s) = smallest_eigenpair(&t);
        lambda_estimate = theta;
        let mut v = DVector::zeros(n);
        let mut hv = DVector::zeros(n);
        for (i, si) in s.iter().enumerate() {
            v.axpy(*si, &basis[i], 1.0);
            hv.axpy(*si, &images[i], 1.0);
        }
        let v_norm = v.norm();
        v /= v_norm;
        hv /= v_norm;
        if v.dot(&hv) <= -params.eps / 2.0 {
            return Ok(MeoOutcome {
                kind: MeoKind::NegativeCurvature,
                v: Some(v),
                iterations: k,
                lambda_estimate,
            });
        }

        let beta = w.norm();
        if beta < 1e-12 {
            // Invariant Krylov subspace: the Ritz values are exact eigenvalues.
            return Ok(MeoOutcome {
                kind: MeoKind::Certificate,
                v: None,
                iterations: k,
                lambda_estimate,
            });
        }
        betas.push(beta);
        q = w / beta;
    }

    Ok(MeoOutcome {
        kind: MeoKind::Certificate,
        v: None,
        iterations: alphas.len(),
        lambda_estimate,
    })
}

/// Deterministic oracle from a dense symmetric eigensolve of the materialized
/// operator. Returns the exact minimum eigenvector when `lambda_min < -eps/2`.
pub fn exact_meo(h: &SymmetricOperator, eps: f64) -> Result<MeoOutcome> {
    if h.dim() == 0 {
        return Err(Error::InvalidParameter(
            "oracle needs dimension >= 1".into(),
        ));
    }
    let dense = h.dense_materialize()?;
    let sym = (&dense + dense.transpose()) * 0.5;
    let (lambda, v) = smallest_eigenpair(&sym);
    let iterations = h.dim();
    if lambda < -eps / 2.0 {
        let v = &v / v.norm();
        if v.dot(&(&sym * &v)) <= -eps / 2.0 {
            return Ok(MeoOutcome {
                kind: MeoKind::NegativeCurvature,
                v: Some(v),
                iterations,
                lambda_estimate: lambda,
            });
        }
    }
    Ok(MeoOutcome {
        kind: MeoKind::Certificate,
        v: None,
        iterations,
        lambda_estimate: lambda,
    })
}
