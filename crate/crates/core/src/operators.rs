//! Matrix-free symmetric operators and smooth functions.
//!
//! Solvers only ever touch a function through [`Counted`], which tallies every
//! value, gradient and Hessian-vector evaluation and rejects non-finite output.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Largest dimension [`SymmetricOperator::dense_materialize`] accepts by default.
pub const DENSE_CAP: usize = 2000;

/// A smooth objective with value, gradient and Hessian-vector product.
pub trait SmoothFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64>;
}

impl<F: SmoothFunction + ?Sized> SmoothFunction for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).gradient(x)
    }
    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        (**self).hess_vec(x, v)
    }
}

/// Evaluation tallies for one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalCounts {
    pub values: usize,
    pub gradients: usize,
    pub hess_vecs: usize,
    pub constraint_evals: usize,
    pub jacobian_vecs: usize,
}

impl std::ops::AddAssign for EvalCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.values += rhs.values;
        self.gradients += rhs.gradients;
        self.hess_vecs += rhs.hess_vecs;
        self.constraint_evals += rhs.constraint_evals;
        self.jacobian_vecs += rhs.jacobian_vecs;
    }
}

pub(crate) fn check_dim(expected: usize, v: &DVector<f64>) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_finite(what: &'static str, v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|e| e.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

type Action<'a> = Box<dyn Fn(&DVector<f64>) -> DVector<f64> + 'a>;

/// Counting, validating view of a [`SmoothFunction`].
pub struct Counted<F> {
    inner: F,
    counts: Cell<EvalCounts>,
}

impl<F: SmoothFunction> Counted<F> {
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            counts: Cell::new(EvalCounts::default()),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn counts(&self) -> EvalCounts {
        self.counts.get()
    }

    fn bump(&self, f: impl FnOnce(&mut EvalCounts)) {
        let mut c = self.counts.get();
        f(&mut c);
        self.counts.set(c);
    }

    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), x)?;
        self.bump(|c| c.values += 1);
        let v = self.inner.value(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("objective value"))
        }
    }

    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x)?;
        self.bump(|c| c.gradients += 1);
        let g = self.inner.gradient(x);
        check_dim(self.dim(), &g)?;
        check_finite("gradient", &g)?;
        Ok(g)
    }

    /// The Hessian at `x` as a matrix-free operator. Each application counts
    /// as one Hessian-vector product.
    pub fn hessian_at<'a>(&'a self, x: &'a DVector<f64>) -> SymmetricOperator<'a> {
        SymmetricOperator::new(self.dim(), move |v| {
            self.bump(|c| c.hess_vecs += 1);
            self.inner.hess_vec(x, v)
        })
    }
}

/// A symmetric linear map known only through its action, with a product counter.
pub struct SymmetricOperator<'a> {
    dim: usize,
    action: Action<'a>,
    count: Cell<usize>,
}

impl<'a> SymmetricOperator<'a> {
    pub fn new(dim: usize, action: impl Fn(&DVector<f64>) -> DVector<f64> + 'a) -> Self {
        Self {
            dim,
            action: Box::new(action),
            count: Cell::new(0),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, |v| v.clone())
    }

    /// Wraps a dense matrix. Symmetry is the caller's responsibility.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        assert!(m.is_square(), "operator matrix must be square");
        let dim = m.nrows();
        Self::new(dim, move |v| &m * v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matvec_count(&self) -> usize {
        self.count.get()
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim, v)?;
        self.count.set(self.count.get() + 1);
        let out = (self.action)(v);
        check_dim(self.dim, &out)?;
        check_finite("operator application", &out)?;
        Ok(out)
    }

    /// Column `i` is the operator applied to `e_i`.
    pub fn dense_materialize(&self) -> Result<DMatrix<f64>> {
        self.dense_materialize_capped(DENSE_CAP)
    }

    pub fn dense_materialize_capped(&self, cap: usize) -> Result<DMatrix<f64>> {
        if self.dim > cap {
            return Err(Error::DenseCapExceeded { dim: self.dim, cap });
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut e = DVector::zeros(self.dim);
        for i in 0..self.dim {
            e[i] = 1.0;
            let col = self.apply(&e)?;
            m.set_column(i, &col);
            e[i] = 0.0;
        }
        Ok(m)
    }
}

/// Default central-difference step, `1e-5 * (1 + |x|_inf)`.
pub fn default_fd_step(x: &DVector<f64>) -> f64 {
    1e-5 * (1.0 + x.amax())
}

/// Worst relative errors found by [`fd_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub grad_err: f64,
    pub hvp_err: f64,
}

impl FdReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.grad_err <= tol && self.hvp_err <= tol
    }
}

fn rel_err(analytic: &DVector<f64>, reference: &DVector<f64>) -> f64 {
    (analytic - reference).amax() / reference.amax().max(1.0)
}

/// Compares the analytic gradient with central differences of the value, and
/// the analytic Hessian-vector product with central differences of the
/// gradient along five seeded random directions.
pub fn fd_check<F: SmoothFunction + ?Sized>(f: &F, x: &DVector<f64>, step: f64) -> FdReport {
    fd_check_with(f, x, step, 5, 0x5eed)
}

/// [`fd_check`] with an explicit probe count and probe seed. Errors are
/// measured in the max-norm relative to `max(1, |reference|_inf)`.
pub fn fd_check_with<F: SmoothFunction + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    step: f64,
    probes: usize,
    seed: u64,
) -> FdReport {
    assert!(step > 0.0, "finite-difference step must be positive");
    let n = x.len();
    let g = f.gradient(x);
    let mut g_fd = DVector::zeros(n);
    let mut xp = x.clone();
    for i in 0..n {
        xp[i] = x[i] + step;
        let fp = f.value(&xp);
        xp[i] = x[i] - step;
        let fm = f.value(&xp);
        xp[i] = x[i];
        g_fd[i] = (fp - fm) / (2.0 * step);
    }
    let grad_err = rel_err(&g, &g_fd);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hvp_err: f64 = 0.0;
    for _ in 0..probes {
        let v = random_unit(n, &mut rng);
        let hv = f.hess_vec(x, &v);
        let gp = f.gradient(&(x + &v * step));
        let gm = f.gradient(&(x - &v * step));
        let hv_fd = (gp - gm) / (2.0 * step);
        hvp_err = hvp_err.max(rel_err(&hv, &hv_fd));
    }
    FdReport { grad_err, hvp_err }
}

/// A unit vector drawn uniformly from the sphere (normalized Gaussian).
pub fn random_unit(n: usize, rng: &mut impl rand::Rng) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let norm: f64 = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}
