#![allow(dead_code)]

use alnewton::SmoothFunction;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_vector(n: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(n, |_, _| StandardNormal.sample(rng))
}

pub fn random_symmetric(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    (&a + a.transpose()) * 0.5
}

/// `B'B / n`, positive semidefinite with a spread spectrum.
pub fn random_psd(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    (b.transpose() * &b) / (n as f64)
}

/// `Q diag(spectrum) Q'` with `Q` the orthogonal factor of a Gaussian matrix.
pub fn with_spectrum(spectrum: &[f64], rng: &mut impl Rng) -> DMatrix<f64> {
    let n = spectrum.len();
    let q: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng))
        .qr()
        .q();
    let h: DMatrix<f64> =
        &q * DMatrix::from_diagonal(&DVector::from_row_slice(spectrum)) * q.transpose();
    (&h + h.transpose()) * 0.5
}

pub fn lambda_min(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// Central-difference Hessian assembled column by column from the gradient.
pub fn fd_hessian<F: SmoothFunction>(f: &F, x: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let n = x.len();
    let mut out = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (f.gradient(&xp) - f.gradient(&xm)) / (2.0 * h);
        out.set_column(j, &col);
    }
    out
}

/// `|x|^2 / 2`.
pub struct HalfSquare(pub usize);

impl SmoothFunction for HalfSquare {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        x.norm_squared() / 2.0
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }
    fn hess_vec(&self, _x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        v.clone()
    }
}

/// `(x^2 - 1)^2 / 4` in one dimension.
pub struct DoubleWell;

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

/// `x_1` on R^2.
pub struct FirstCoordinate;

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
