//! Test objectives: trigonometric nonlinear-equation systems with a planted
//! root, and strongly convex quadratics with closed-form constants.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{dot, norm, norm_sq};
use crate::oracle::{Objective, ObjectiveConstants};
use crate::sampling::sample_sphere;
use crate::{Error, Result};

/// `f(x) = |C sin(x) + D cos(x) - b|^2` with `C, D` of shape `p × d` and
/// `b` planted so that `f(x_star) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkProblem {
    d: usize,
    p: usize,
    /// Row-major `p × d`.
    c: Vec<f64>,
    /// Row-major `p × d`.
    dm: Vec<f64>,
    b: Vec<f64>,
    x_star: Vec<f64>,
    seed: u64,
}

/// Locally estimated constants around a point. These are probe estimates,
/// not certificates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalConstants {
    /// Largest Hessian spectral norm seen.
    pub l2: f64,
    /// Largest `|f(x+h) - T_l(x, h)| / |h|^beta` seen, where `T_l` is the
    /// Taylor polynomial of order `beta - 1`.
    pub l_beta: f64,
    /// Smallest `|∇f|^2 / (2 f)` seen.
    pub mu: f64,
}

pub fn generate_problem(d: usize, p: usize, seed: u64) -> Result<BenchmarkProblem> {
    BenchmarkProblem::generate(d, p, seed)
}

pub fn eval_f(problem: &BenchmarkProblem, x: &[f64]) -> Result<f64> {
    problem.check(x)?;
    Ok(problem.value_unchecked(x))
}

pub fn eval_grad(problem: &BenchmarkProblem, x: &[f64]) -> Result<Vec<f64>> {
    problem.check(x)?;
    Ok(problem.grad_unchecked(x))
}

impl BenchmarkProblem {
    pub fn generate(d: usize, p: usize, seed: u64) -> Result<Self> {
        if d == 0 || p == 0 {
            return Err(Error::param("problem.d", "d and p must be positive"));
        }
        if p > d {
            return Err(Error::param("problem.p", "p must not exceed d"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c: Vec<f64> = (0..p * d).map(|_| rng.sample(StandardNormal)).collect();
        let dm: Vec<f64> = (0..p * d).map(|_| rng.sample(StandardNormal)).collect();
        let pi = core::f64::consts::PI;
        let x_star: Vec<f64> = (0..d).map(|_| rng.random_range(-pi..=pi)).collect();
        let mut problem = Self {
            d,
            p,
            c,
            dm,
            b: vec![0.0; p],
            x_star,
            seed,
        };
        problem.b = problem.map(&problem.x_star.clone());
        Ok(problem)
    }

    /// Builds a problem from explicit matrices (row-major `p × d`), planting
    /// `b` at `x_star`.
    pub fn from_parts(c: Vec<f64>, dm: Vec<f64>, p: usize, x_star: Vec<f64>) -> Result<Self> {
        let d = x_star.len();
        if d == 0 || p == 0 || p > d {
            return Err(Error::param("problem.p", "need 1 <= p <= d"));
        }
        if c.len() != p * d || dm.len() != p * d {
            return Err(Error::Dimension {
                expected: p * d,
                got: c.len().min(dm.len()),
            });
        }
        let mut problem = Self {
            d,
            p,
            c,
            dm,
            b: vec![0.0; p],
            x_star,
            seed: 0,
        };
        problem.b = problem.map(&problem.x_star.clone());
        Ok(problem)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn dm(&self) -> &[f64] {
        &self.dm
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::Dimension {
                expected: self.d,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `C sin(x) + D cos(x)`.
    fn map(&self, x: &[f64]) -> Vec<f64> {
        let (s, co): (Vec<f64>, Vec<f64>) = x.iter().map(|v| (libm::sin(*v), libm::cos(*v))).unzip();
        (0..self.p)
            .map(|i| {
                let row = i * self.d..(i + 1) * self.d;
                dot(&self.c[row.clone()], &s) + dot(&self.dm[row], &co)
            })
            .collect()
    }

    /// `g(x) = C sin(x) + D cos(x) - b`.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.map(x);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        g
    }

    fn value_unchecked(&self, x: &[f64]) -> f64 {
        norm_sq(&self.residual(x))
    }

    /// `2 J^T g` with `J = C diag(cos x) - D diag(sin x)`.
    fn grad_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let g = self.residual(x);
        let mut out = vec![0.0; self.d];
        for (i, gi) in g.iter().enumerate() {
            let row = i * self.d;
            for j in 0..self.d {
                let jac = self.c[row + j] * libm::cos(x[j]) - self.dm[row + j] * libm::sin(x[j]);
                out[j] += 2.0 * jac * gi;
            }
        }
        out
    }

    /// Hessian `2 J^T J + 2 Σ_i g_i diag(-C_i sin x - D_i cos x)`.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check(x)?;
        let d = self.d;
        let g = self.residual(x);
        let jac = DMatrix::from_fn(self.p, d, |i, j| {
            self.c[i * d + j] * libm::cos(x[j]) - self.dm[i * d + j] * libm::sin(x[j])
        });
        let mut h = jac.transpose() * &jac * 2.0;
        for (i, gi) in g.iter().enumerate() {
            for j in 0..d {
                let second = -self.c[i * d + j] * libm::sin(x[j]) - self.dm[i * d + j] * libm::cos(x[j]);
                h[(j, j)] += 2.0 * gi * second;
            }
        }
        Ok(h)
    }

    /// `x_star + radius · u` with `u` uniform on the unit sphere.
    pub fn initial_point(&self, radius: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_0000_0001);
        let u = sample_sphere(self.d, &mut rng);
        self.x_star.iter().zip(&u).map(|(s, v)| s + radius * v).collect()
    }

    /// Probes `n_probe` points uniformly in the ball of radius `radius`
    /// around `center` and, at each, a displacement of norm `step`, to
    /// estimate smoothness and PL constants. Supports `beta ∈ {1, 2, 3}`.
    pub fn probe_constants(
        &self,
        center: &[f64],
        radius: f64,
        step: f64,
        beta: u32,
        n_probe: usize,
        seed: u64,
    ) -> Result<LocalConstants> {
        self.check(center)?;
        if !(1..=3).contains(&beta) {
            return Err(Error::param("estimator.beta", "probing supports beta in 1..=3"));
        }
        if !(radius >= 0.0 && step > 0.0) || n_probe == 0 {
            return Err(Error::param("probe", "need radius >= 0, step > 0, n_probe >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = LocalConstants {
            l2: 0.0,
            l_beta: 0.0,
            mu: f64::INFINITY,
        };
        for _ in 0..n_probe {
            let u = sample_sphere(self.d, &mut rng);
            let t: f64 = rng.random();
            let rad = radius * libm::pow(t, 1.0 / self.d as f64);
            let x: Vec<f64> = center.iter().zip(&u).map(|(c, v)| c + rad * v).collect();
            let h_mat = self.hessian(&x)?;
            let eig = SymmetricEigen::new(h_mat.clone());
            let spec = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(libm::fabs(*v)));
            out.l2 = out.l2.max(spec);

            let fx = self.value_unchecked(&x);
            let gx = self.grad_unchecked(&x);
            if fx > 0.0 {
                out.mu = out.mu.min(norm_sq(&gx) / (2.0 * fx));
            }

            let dir = sample_sphere(self.d, &mut rng);
            let s: f64 = step * rng.random::<f64>().max(1e-3);
            let h: Vec<f64> = dir.iter().map(|v| s * v).collect();
            let xh: Vec<f64> = x.iter().zip(&h).map(|(a, b)| a + b).collect();
            let mut taylor = fx;
            if beta >= 2 {
                taylor += dot(&gx, &h);
            }
            if beta >= 3 {
                let hv = DVector::from_column_slice(&h);
                taylor += 0.5 * (hv.transpose() * &h_mat * &hv)[(0, 0)];
            }
            let rem = libm::fabs(self.value_unchecked(&xh) - taylor);
            out.l_beta = out.l_beta.max(rem / libm::pow(norm(&h), beta as f64));
        }
        Ok(out)
    }
}

impl Objective for BenchmarkProblem {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.value_unchecked(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(self.grad_unchecked(x))
    }

    fn constants(&self) -> ObjectiveConstants {
        ObjectiveConstants {
            f_star: Some(0.0),
            ..ObjectiveConstants::default()
        }
    }
}

/// `f(x) = ½ x^T A x + c^T x` with `A` symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObjective {
    a: DMatrix<f64>,
    c: Vec<f64>,
    mu: f64,
    l2: f64,
    f_star: f64,
    x_star: Vec<f64>,
}

pub fn quadratic_test_objective(a: DMatrix<f64>, c: Vec<f64>) -> Result<QuadraticObjective> {
    QuadraticObjective::new(a, c)
}

impl QuadraticObjective {
    pub fn new(a: DMatrix<f64>, c: Vec<f64>) -> Result<Self> {
        let d = a.nrows();
        if d == 0 || a.ncols() != d {
            return Err(Error::param("A", "must be a non-empty square matrix"));
        }
        if c.len() != d {
            return Err(Error::Dimension { expected: d, got: c.len() });
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
        if (&a - a.transpose()).iter().any(|v| libm::fabs(*v) > 1e-12 * scale.max(1.0)) {
            return Err(Error::param("A", "must be symmetric"));
        }
        let eig = SymmetricEigen::new(a.clone());
        let mu = eig.eigenvalues.min();
        let l2 = eig.eigenvalues.max();
        if !(mu > 0.0) {
            return Err(Error::param("A", "must be positive definite"));
        }
        let chol = a.clone().cholesky().ok_or_else(|| Error::param("A", "must be positive definite"))?;
        let sol = chol.solve(&DVector::from_column_slice(&c));
        let x_star: Vec<f64> = sol.iter().map(|v| -v).collect();
        let f_star = -0.5 * dot(&c, sol.as_slice());
        Ok(Self { a, c, mu, l2, f_star, x_star })
    }

    pub fn diagonal(diag: &[f64], c: Vec<f64>) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)), c)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    /// `x_star + radius · u` with `u` uniform on the unit sphere.
    pub fn initial_point(&self, radius: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_0000_0001);
        let u = sample_sphere(self.c.len(), &mut rng);
        self.x_star.iter().zip(&u).map(|(s, v)| s + radius * v).collect()
    }

    fn ax(&self, x: &[f64]) -> Vec<f64> {
        let d = self.c.len();
        (0..d).map(|i| (0..d).map(|j| self.a[(i, j)] * x[j]).sum()).collect()
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.ax(x)) + dot(&self.c, x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut g = self.ax(x);
        for (gi, ci) in g.iter_mut().zip(&self.c) {
            *gi += ci;
        }
        Some(g)
    }

    /// `l_beta = L₂ / 2` bounds the second-order Taylor remainder; remainders
    /// of higher order vanish, so the same value is valid for every `beta`.
    fn constants(&self) -> ObjectiveConstants {
        ObjectiveConstants {
            l2: Some(self.l2),
            l_beta: Some(self.l2 / 2.0),
            mu: Some(self.mu),
            f_star: Some(self.f_star),
        }
    }
}
