//! Randomized finite-difference gradient estimators.
//!
//! All three families issue exactly two oracle queries per sample:
//!
//! - kernel (central): `d (f̃(x + γ r e) - f̃(x - γ r e)) / (2γ) K(r) e`
//!   with `e` uniform on the unit sphere and `r` uniform on `[-1, 1]`;
//! - Gaussian (forward): `(f̃(x + γ u) - f̃(x)) / γ u` with `u ~ N(0, I)`;
//! - L2 (central): `d (f̃(x + γ e) - f̃(x - γ e)) / (2γ) e`.
//!
//! The same kernel formula covers the deterministic, two-point, additive and
//! mixed noise settings; the oracle's mode decides what `f̃` returns.

use alloc::vec;
use alloc::vec::Vec;

use crate::kernels::KernelSpec;
use crate::linalg::{axpy_into, norm_sq};
use crate::oracle::{Objective, ZeroOrderOracle};
use crate::sampling::{fill_gaussian, fill_sphere, sample_radius, SampleRng, Substreams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorFamily {
    KernelCentral,
    GaussianForward,
    L2Central,
}

impl EstimatorFamily {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorFamily::KernelCentral => "kernel",
            EstimatorFamily::GaussianForward => "gaussian",
            EstimatorFamily::L2Central => "l2",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub family: EstimatorFamily,
    pub gamma: f64,
    pub kernel: Option<KernelSpec>,
}

impl EstimatorConfig {
    pub fn kernel(gamma: f64, kernel: KernelSpec) -> Self {
        Self {
            family: EstimatorFamily::KernelCentral,
            gamma,
            kernel: Some(kernel),
        }
    }

    pub fn gaussian(gamma: f64) -> Self {
        Self {
            family: EstimatorFamily::GaussianForward,
            gamma,
            kernel: None,
        }
    }

    pub fn l2(gamma: f64) -> Self {
        Self {
            family: EstimatorFamily::L2Central,
            gamma,
            kernel: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::param("estimator.gamma", "must be finite and > 0"));
        }
        let wants_kernel = self.family == EstimatorFamily::KernelCentral;
        if wants_kernel != self.kernel.is_some() {
            return Err(Error::param(
                "estimator.beta",
                "a kernel is required for the kernel family and only there",
            ));
        }
        Ok(())
    }
}

/// Scratch buffers reused across samples.
#[derive(Debug, Clone)]
struct Workspace {
    dir: Vec<f64>,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl Workspace {
    fn new(d: usize) -> Self {
        Self {
            dir: vec![0.0; d],
            plus: vec![0.0; d],
            minus: vec![0.0; d],
        }
    }
}

fn check_point(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::Dimension { expected: d, got: x.len() });
    }
    if let Some(bad) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite { x: x.to_vec(), value: *bad });
    }
    Ok(())
}

/// Kernel estimate for a given direction `e` and radius `r`.
pub fn kernel_sample_at<O: Objective>(
    gamma: f64,
    kernel: &KernelSpec,
    oracle: &ZeroOrderOracle<O>,
    x: &[f64],
    e: &[f64],
    r: f64,
    rng: &mut SampleRng,
) -> Result<Vec<f64>> {
    let d = x.len();
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    axpy_into(&mut plus, x, gamma * r, e);
    axpy_into(&mut minus, x, -gamma * r, e);
    let (fp, fm) = oracle.query_pair(&plus, &minus, &mut rng.noise)?;
    let scale = d as f64 * (fp - fm) / (2.0 * gamma) * kernel.eval(r)?;
    Ok(e.iter().map(|v| scale * v).collect())
}

/// L2-randomization estimate for a given direction `e`.
pub fn l2_sample_at<O: Objective>(
    gamma: f64,
    oracle: &ZeroOrderOracle<O>,
    x: &[f64],
    e: &[f64],
    rng: &mut SampleRng,
) -> Result<Vec<f64>> {
    let d = x.len();
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    axpy_into(&mut plus, x, gamma, e);
    axpy_into(&mut minus, x, -gamma, e);
    let (fp, fm) = oracle.query_pair(&plus, &minus, &mut rng.noise)?;
    let scale = d as f64 * (fp - fm) / (2.0 * gamma);
    Ok(e.iter().map(|v| scale * v).collect())
}

/// Gaussian-smoothing estimate for a given direction `u`.
pub fn gaussian_sample_at<O: Objective>(
    gamma: f64,
    oracle: &ZeroOrderOracle<O>,
    x: &[f64],
    u: &[f64],
    rng: &mut SampleRng,
) -> Result<Vec<f64>> {
    let mut plus = vec![0.0; x.len()];
    axpy_into(&mut plus, x, gamma, u);
    let (fp, f0) = oracle.query_pair(&plus, x, &mut rng.noise)?;
    let scale = (fp - f0) / gamma;
    Ok(u.iter().map(|v| scale * v).collect())
}

/// Draws the random geometry for one sample and writes the estimate into `out`.
fn sample_into<O: Objective>(
    cfg: &EstimatorConfig,
    oracle: &ZeroOrderOracle<O>,
    x: &[f64],
    rng: &mut SampleRng,
    ws: &mut Workspace,
    out: &mut [f64],
) -> Result<()> {
    let d = x.len() as f64;
    let gamma = cfg.gamma;
    let scale = match cfg.family {
        EstimatorFamily::KernelCentral => {
            let kernel = cfg.kernel.as_ref().expect("validated kernel config");
            fill_sphere(&mut ws.dir, &mut rng.geometry);
            let r = sample_radius(&mut rng.geometry);
            axpy_into(&mut ws.plus, x, gamma * r, &ws.dir);
            axpy_into(&mut ws.minus, x, -gamma * r, &ws.dir);
            let (fp, fm) = oracle.query_pair(&ws.plus, &ws.minus, &mut rng.noise)?;
            d * (fp - fm) / (2.0 * gamma) * kernel.value(r)
        }
        EstimatorFamily::L2Central => {
            fill_sphere(&mut ws.dir, &mut rng.geometry);
            axpy_into(&mut ws.plus, x, gamma, &ws.dir);
            axpy_into(&mut ws.minus, x, -gamma, &ws.dir);
            let (fp, fm) = oracle.query_pair(&ws.plus, &ws.minus, &mut rng.noise)?;
            d * (fp - fm) / (2.0 * gamma)
        }
        EstimatorFamily::GaussianForward => {
            fill_gaussian(&mut ws.dir, &mut rng.geometry);
            axpy_into(&mut ws.plus, x, gamma, &ws.dir);
            let (fp, f0) = oracle.query_pair(&ws.plus, x, &mut rng.noise)?;
            (fp - f0) / gamma
        }
    };
    for (o, v) in out.iter_mut().zip(&ws.dir) {
        *o = scale * v;
    }
    Ok(())
}

/// One gradient estimate at `x` (two oracle queries).
pub fn grad_sample<O: Objective>(
    cfg: &EstimatorConfig,
    oracle: &ZeroOrderOracle<O>,
    x: &[f64],
    rng: &mut SampleRng,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_point(x, oracle.dim())?;
    let mut ws = Workspace::new(x.len());
    let mut out = vec![0.0; x.len()];
    sample_into(cfg, oracle, x, rng, &mut ws, &mut out)?;
    Ok(out)
}

/// Mini-batch average of `batch` independent samples; sample `i` of iteration
/// `iter` uses `streams.sample(iter, i)`. Summation runs in index order.
pub fn batch_gradient<O: Objective>(
    cfg: &EstimatorConfig,
    oracle: &ZeroOrderOracle<O>,
    x: &[f64],
    batch: usize,
    streams: &Substreams,
    iter: u64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.len()];
    BatchEstimator::new(cfg.clone(), x.len())?.estimate(oracle, x, batch, streams, iter, &mut out)?;
    Ok(out)
}

/// Reusable mini-batch estimator holding its scratch space.
#[derive(Debug, Clone)]
pub struct BatchEstimator {
    cfg: EstimatorConfig,
    ws: Workspace,
    sample: Vec<f64>,
}

impl BatchEstimator {
    pub fn new(cfg: EstimatorConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            ws: Workspace::new(dim),
            sample: vec![0.0; dim],
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.cfg
    }

    pub fn estimate<O: Objective>(
        &mut self,
        oracle: &ZeroOrderOracle<O>,
        x: &[f64],
        batch: usize,
        streams: &Substreams,
        iter: u64,
        out: &mut [f64],
    ) -> Result<()> {
        if batch == 0 {
            return Err(Error::param("opt.batch", "must be >= 1"));
        }
        check_point(x, oracle.dim())?;
        if self.sample.len() != x.len() || out.len() != x.len() {
            return Err(Error::Dimension {
                expected: self.sample.len(),
                got: x.len(),
            });
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..batch {
            let mut rng = streams.sample(iter, i as u64);
            sample_into(&self.cfg, oracle, x, &mut rng, &mut self.ws, &mut self.sample)?;
            for (o, s) in out.iter_mut().zip(&self.sample) {
                *o += s;
            }
        }
        let inv = 1.0 / batch as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        Ok(())
    }
}

/// Monte-Carlo summary of an estimator at a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct GradSampleStats {
    pub mean_vector: Vec<f64>,
    /// Three standard errors per component.
    pub component_ci: Vec<f64>,
    /// Three standard errors of the mean vector in Euclidean norm,
    /// `3 sqrt(Σ_i Var(g_i) / n)`.
    pub ci_halfwidth: f64,
    /// Mean of `|g|^2`.
    pub second_moment: f64,
    /// Three standard errors of `second_moment`.
    pub second_moment_ci: f64,
    pub n_samples: usize,
}

impl GradSampleStats {
    /// `|mean - reference|`.
    pub fn bias_norm(&self, reference: &[f64]) -> f64 {
        libm::sqrt(
            self.mean_vector
                .iter()
                .zip(reference)
                .map(|(m, r)| (m - r) * (m - r))
                .sum(),
        )
    }
}

/// Draws `n` independent samples (sample `i` uses `streams.sample(i, 0)`) and
/// summarises them with Welford accumulators.
pub fn measure_stats<O: Objective>(
    cfg: &EstimatorConfig,
    oracle: &ZeroOrderOracle<O>,
    x: &[f64],
    n: usize,
    streams: &Substreams,
) -> Result<GradSampleStats> {
    if n < 100 {
        return Err(Error::param("samples", "at least 100 samples are required"));
    }
    cfg.validate()?;
    check_point(x, oracle.dim())?;
    let d = x.len();
    let mut ws = Workspace::new(d);
    let mut g = vec![0.0; d];
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    let (mut sq_mean, mut sq_m2) = (0.0, 0.0);
    for i in 0..n {
        let mut rng = streams.sample(i as u64, 0);
        sample_into(cfg, oracle, x, &mut rng, &mut ws, &mut g)?;
        let k = (i + 1) as f64;
        for ((mu, s), v) in mean.iter_mut().zip(m2.iter_mut()).zip(&g) {
            let delta = v - *mu;
            *mu += delta / k;
            *s += delta * (v - *mu);
        }
        let sq = norm_sq(&g);
        let delta = sq - sq_mean;
        sq_mean += delta / k;
        sq_m2 += delta * (sq - sq_mean);
    }
    let nf = n as f64;
    let var: Vec<f64> = m2.iter().map(|s| s / (nf - 1.0)).collect();
    let component_ci = var.iter().map(|v| 3.0 * libm::sqrt(v / nf)).collect();
    let ci_halfwidth = 3.0 * libm::sqrt(var.iter().sum::<f64>() / nf);
    let second_moment_ci = 3.0 * libm::sqrt(sq_m2 / (nf - 1.0) / nf);
    Ok(GradSampleStats {
        mean_vector: mean,
        component_ci,
        ci_halfwidth,
        second_moment: sq_mean,
        second_moment_ci,
        n_samples: n,
    })
}
