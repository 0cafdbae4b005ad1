//! Regularized robust regression benchmarks.
//!
//! The objective is `sum_i phi(a_i'x - b_i) + mu |x|_4^4` with
//! `phi(t) = t^2 / (1 + t^2)`, optionally constrained to the unit sphere.
//!
//! Random instances come from a `ChaCha8Rng` seeded with `seed_from_u64`.
//! Entries of `A` are drawn row by row, then the `m` entries of `b_bar`, all
//! from `rand_distr::StandardNormal`; finally `b = 2 m b_bar`.
//!
//! # Text format
//!
//! ```text
//! robust-regression 1
//! <n> <m>
//! <row 1 of A: n numbers>
//! ...
//! <row m of A>
//! <b: m numbers>
//! <mu>
//! <seed>
//! ```
//!
//! Numbers are written in shortest round-trip exponent form so a file
//! reproduces the instance bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::augmented_lagrangian::EqualityProblem;
use crate::error::{Error, Result};
use crate::operators::SmoothFunction;

const FORMAT_TAG: &str = "robust-regression 1";

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    /// `m x n`, row `i` is `a_i'`.
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub mu: f64,
    pub seed: u64,
}

impl RegressionInstance {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, mu: f64, seed: u64) -> Result<Self> {
        let inst = Self { a, b, mu, seed };
        inst.validate()?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.len() != self.a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.a.nrows(),
                got: self.b.len(),
            });
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mu must be nonnegative, got {}",
                self.mu
            )));
        }
        if !self.a.iter().chain(self.b.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("regression data"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let join = |it: &mut dyn Iterator<Item = &f64>| {
            it.map(|v| format!("{v:e}")).collect::<Vec<_>>().join(" ")
        };
        writeln!(out, "{FORMAT_TAG}").unwrap();
        writeln!(out, "{} {}", self.n(), self.m()).unwrap();
        for row in self.a.row_iter() {
            writeln!(out, "{}", join(&mut row.iter())).unwrap();
        }
        writeln!(out, "{}", join(&mut self.b.iter())).unwrap();
        writeln!(out, "{:e}", self.mu).unwrap();
        writeln!(out, "{}", self.seed).unwrap();
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))
        };
        if next("format tag")? != FORMAT_TAG {
            return Err(Error::Parse(format!("expected header `{FORMAT_TAG}`")));
        }
        let dims = parse_numbers::<usize>(next("dimensions")?)?;
        let [n, m] = dims[..] else {
            return Err(Error::Parse("dimension line must hold `n m`".into()));
        };
        let mut a = DMatrix::zeros(m, n);
        for i in 0..m {
            let row = parse_numbers::<f64>(next("matrix row")?)?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, v) in row.into_iter().enumerate() {
                a[(i, j)] = v;
            }
        }
        let b = parse_numbers::<f64>(next("b")?)?;
        if b.len() != m {
            return Err(Error::Parse(format!(
                "b has {} entries, expected {m}",
                b.len()
            )));
        }
        let mu = parse_one::<f64>(next("mu")?)?;
        let seed = parse_one::<u64>(next("seed")?)?;
        Self::new(a, DVector::from_vec(b), mu, seed)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_numbers<T: std::str::FromStr>(line: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse()
                .map_err(|_| Error::Parse(format!("bad number `{tok}`")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(line: &str) -> Result<T> {
    line.parse()
        .map_err(|_| Error::Parse(format!("bad number `{line}`")))
}

/// Seeded instance with standard normal `A` and `b = 2 m b_bar`.
pub fn random_instance(n: usize, m: usize, mu: f64, seed: u64) -> Result<RegressionInstance> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    let scale = 2.0 * m as f64;
    let b = DVector::from_fn(m, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        scale * z
    });
    RegressionInstance::new(a, b, mu, seed)
}

/// `(1/sqrt(n), ..., 1/sqrt(n))`, a point on the unit sphere.
pub fn feasible_seed_point(n: usize) -> DVector<f64> {
    DVector::from_element(n, 1.0 / (n as f64).sqrt())
}

pub fn phi(t: f64) -> f64 {
    let t2 = t * t;
    t2 / (1.0 + t2)
}

pub fn phi_prime(t: f64) -> f64 {
    let s = 1.0 + t * t;
    2.0 * t / (s * s)
}

pub fn phi_second(t: f64) -> f64 {
    let t2 = t * t;
    let s = 1.0 + t2;
    2.0 * (1.0 - 3.0 * t2) / (s * s * s)
}

/// `sum_i phi(a_i'x - b_i) + mu |x|_4^4`.
#[derive(Debug, Clone)]
pub struct RobustRegression {
    inst: RegressionInstance,
}

impl RobustRegression {
    pub fn instance(&self) -> &RegressionInstance {
        &self.inst
    }

    fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.inst.a * x - &self.inst.b
    }
}

pub fn robust_regression(inst: RegressionInstance) -> RobustRegression {
    RobustRegression { inst }
}

impl SmoothFunction for RobustRegression {
    fn dim(&self) -> usize {
        self.inst.n()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let loss: f64 = self.residuals(x).iter().map(|&t| phi(t)).sum();
        let reg: f64 = x.iter().map(|v| v.powi(4)).sum();
        loss + self.inst.mu * reg
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let w = self.residuals(x).map(phi_prime);
        self.inst.a.tr_mul(&w) + x.map(|v| 4.0 * self.inst.mu * v * v * v)
    }

    fn hess_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let curv = self.residuals(x).map(phi_second);
        let av = &self.inst.a * v;
        let w = curv.component_mul(&av);
        self.inst.a.tr_mul(&w) + x.zip_map(v, |xi, vi| 12.0 * self.inst.mu * xi * xi * vi)
    }
}

/// Robust regression subject to `|x|^2 = 1`.
#[derive(Debug, Clone)]
pub struct SphereConstrained<F> {
    objective: F,
}

impl<F: SmoothFunction> SphereConstrained<F> {
    /// Any objective on the sphere; [`sphere_constrained`] is the benchmark case.
    pub fn with_objective(objective: F) -> Self {
        Self { objective }
    }
}

pub fn sphere_constrained(inst: RegressionInstance) -> SphereConstrained<RobustRegression> {
    SphereConstrained::with_objective(robust_regression(inst))
}

impl<F: SmoothFunction> EqualityProblem for SphereConstrained<F> {
    fn n(&self) -> usize {
        self.objective.dim()
    }

    fn m(&self) -> usize {
        1
    }

    fn objective(&self) -> &dyn SmoothFunction {
        &self.objective
    }

    fn constraints(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, x.norm_squared() - 1.0)
    }

    fn jacobian_tvec(&self, x: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        x * (2.0 * w[0])
    }

    fn jacobian_vec(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_element(1, 2.0 * x.dot(v))
    }

    fn constraint_hess_vec(
        &self,
        _x: &DVector<f64>,
        w: &DVector<f64>,
        v: &DVector<f64>,
    ) -> DVector<f64> {
        v * (2.0 * w[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values() {
        assert_eq!(phi(0.0), 0.0);
        assert_eq!(phi(1.0), 0.5);
        assert!((phi(1e4) - (1.0 - 1e-8)).abs() < 1e-15);
        assert!(phi(-1e8) <= 1.0);
    }

    #[test]
    fn value_and_gradient_at_origin() {
        let inst = random_instance(4, 3, 1.0, 11).unwrap();
        let f = robust_regression(inst.clone());
        let x = DVector::zeros(4);
        let expected: f64 = inst.b.iter().map(|&b| phi(-b)).sum();
        assert_eq!(f.value(&x), expected);
        let g_expected = inst.a.tr_mul(&inst.b.map(|b| phi_prime(-b)));
        assert_eq!(f.gradient(&x), g_expected);
    }

    #[test]
    fn sphere_constraint_basics() {
        let p = sphere_constrained(random_instance(3, 2, 1.0, 0).unwrap());
        let e1 = DVector::from_row_slice(&[1.0, 0.0, 0.0]);
        assert_eq!(p.constraints(&e1)[0], 0.0);
        let zero = DVector::zeros(3);
        assert_eq!(p.constraints(&zero)[0], -1.0);
        assert_eq!(p.jacobian_tvec(&zero, &DVector::from_element(1, 1.0)), zero);
    }

    #[test]
    fn seed_point_is_on_sphere() {
        assert_eq!(feasible_seed_point(1).as_slice(), &[1.0]);
        assert_eq!(feasible_seed_point(4).as_slice(), &[0.5; 4]);
        for n in [1, 2, 3, 7, 100, 1000] {
            assert!((feasible_seed_point(n).norm_squared() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(random_instance(0, 3, 1.0, 0).is_err());
        let inst = random_instance(2, 2, 1.0, 0).unwrap();
        assert!(RegressionInstance::new(inst.a.clone(), inst.b.clone(), -1.0, 0).is_err());
        assert!(RegressionInstance::new(inst.a.clone(), DVector::zeros(3), 1.0, 0).is_err());
    }

    #[test]
    fn text_rejects_truncated_input() {
        let text = random_instance(2, 2, 1.0, 5).unwrap().to_text();
        let cut: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(matches!(
            RegressionInstance::from_text(&cut),
            Err(Error::Parse(_))
        ));
        assert!(RegressionInstance::from_text("nonsense").is_err());
    }
}
