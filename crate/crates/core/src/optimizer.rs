//! Mini-batch SGD driven by zero-order estimators or by a synthetic biased
//! first-order oracle.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::estimators::{BatchEstimator, EstimatorConfig};
use crate::linalg::{dot, norm, norm_sq};
use crate::oracle::{Objective, ZeroOrderOracle};
use crate::sampling::{Substreams, MAX_BATCH};
use crate::{Error, Result};

/// Above this many iterations only every `ceil(n_iters / TRACE_POINTS)`-th
/// iterate is recorded.
pub const SUBSAMPLE_ABOVE: usize = 100_000;
pub const TRACE_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub eta: f64,
    pub n_iters: usize,
    pub batch: usize,
    pub seed: u64,
    pub record_grad_norm: bool,
}

impl OptimizerConfig {
    pub fn new(eta: f64, n_iters: usize, batch: usize, seed: u64) -> Self {
        Self {
            eta,
            n_iters,
            batch,
            seed,
            record_grad_norm: false,
        }
    }

    /// `eta = 0` is accepted and leaves the iterate fixed.
    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::param("opt.eta", "must be finite and >= 0"));
        }
        if self.n_iters == 0 {
            return Err(Error::param("opt.iters", "must be >= 1"));
        }
        if self.batch == 0 || self.batch as u64 > MAX_BATCH {
            return Err(Error::param("opt.batch", "must lie in 1..=2^20"));
        }
        Ok(())
    }

    pub fn record_stride(&self) -> usize {
        if self.n_iters > SUBSAMPLE_ABOVE {
            self.n_iters.div_ceil(TRACE_POINTS)
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub f_gap: f64,
    /// Cumulative oracle calls before the gradient at `iter` is formed.
    pub oracle_calls: u64,
    /// Norm of the gradient estimate used at `iter`; absent for the final
    /// iterate or when not requested.
    pub grad_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub x_final: Vec<f64>,
    pub config: OptimizerConfig,
}

impl RunTrace {
    pub fn initial_gap(&self) -> Option<f64> {
        self.records.first().map(|r| r.f_gap)
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().map(|r| r.f_gap)
    }

    pub fn total_calls(&self) -> u64 {
        self.records.last().map_or(0, |r| r.oracle_calls)
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f_gap).collect()
    }
}

/// Anything that produces an update direction for SGD.
pub trait GradientSource {
    fn dim(&self) -> usize;

    /// Exact objective value, used only for the recorded gap.
    fn value(&self, x: &[f64]) -> f64;

    /// Writes the mini-batch direction for iteration `iter` into `out`.
    fn direction(&mut self, x: &[f64], iter: u64, batch: usize, streams: &Substreams, out: &mut [f64]) -> Result<()>;

    /// Cumulative oracle calls so far.
    fn calls(&self) -> u64;
}

/// `x_{k+1} = x_k - eta g_k` for `n_iters` steps. Non-finite iterates or
/// values abort with [`Error::Diverged`] carrying the partial trace.
pub fn run_sgd<S: GradientSource>(source: &mut S, cfg: &OptimizerConfig, x0: &[f64], f_star: f64) -> Result<RunTrace> {
    cfg.validate()?;
    if x0.len() != source.dim() {
        return Err(Error::Dimension {
            expected: source.dim(),
            got: x0.len(),
        });
    }
    let streams = Substreams::new(cfg.seed);
    let stride = cfg.record_stride();
    let start = source.calls();
    let n = cfg.n_iters;
    let mut records = Vec::with_capacity(n / stride + 2);
    let mut x = x0.to_vec();
    let mut last_finite = x.clone();
    let mut g = vec![0.0; x.len()];
    let diverged = |iter: usize, records: Vec<TraceRecord>, x: Vec<f64>| Error::Diverged {
        iter,
        trace: Box::new(RunTrace {
            records,
            x_final: x,
            config: *cfg,
        }),
    };
    for k in 0..=n {
        let gap = source.value(&x) - f_star;
        if !gap.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(diverged(k, records, last_finite));
        }
        last_finite.copy_from_slice(&x);
        let calls = source.calls() - start;
        let mut grad_norm = None;
        if k < n {
            match source.direction(&x, k as u64, cfg.batch, &streams, &mut g) {
                Ok(()) => {}
                Err(Error::NonFinite { .. }) => return Err(diverged(k, records, last_finite)),
                Err(e) => return Err(e),
            }
            if cfg.record_grad_norm {
                grad_norm = Some(norm(&g));
            }
        }
        if k % stride == 0 || k == n {
            records.push(TraceRecord {
                iter: k,
                f_gap: gap,
                oracle_calls: calls,
                grad_norm,
            });
        }
        if k < n {
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= cfg.eta * gi;
            }
        }
    }
    Ok(RunTrace {
        records,
        x_final: x,
        config: *cfg,
    })
}

struct ZeroOrderSource<'a, O> {
    oracle: &'a ZeroOrderOracle<O>,
    estimator: BatchEstimator,
}

impl<O: Objective> GradientSource for ZeroOrderSource<'_, O> {
    fn dim(&self) -> usize {
        self.oracle.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.oracle.objective().value(x)
    }

    fn direction(&mut self, x: &[f64], iter: u64, batch: usize, streams: &Substreams, out: &mut [f64]) -> Result<()> {
        self.estimator.estimate(self.oracle, x, batch, streams, iter, out)
    }

    fn calls(&self) -> u64 {
        self.oracle.calls()
    }
}

/// Zero-order mini-batch SGD: each step averages `batch` estimator samples
/// (`2 · batch` oracle calls).
pub fn zo_mb_sgd<O: Objective>(
    oracle: &ZeroOrderOracle<O>,
    est: &EstimatorConfig,
    cfg: &OptimizerConfig,
    x0: &[f64],
    f_star: f64,
) -> Result<RunTrace> {
    let mut source = ZeroOrderSource {
        oracle,
        estimator: BatchEstimator::new(est.clone(), oracle.dim())?,
    };
    run_sgd(&mut source, cfg, x0, f_star)
}

struct ExactSource<'a, O> {
    objective: &'a O,
    calls: u64,
}

impl<O: Objective> GradientSource for ExactSource<'_, O> {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    fn direction(&mut self, x: &[f64], _iter: u64, _batch: usize, _streams: &Substreams, out: &mut [f64]) -> Result<()> {
        let g = self
            .objective
            .gradient(x)
            .ok_or_else(|| Error::param("objective", "no analytic gradient available"))?;
        out.copy_from_slice(&g);
        self.calls += 1;
        Ok(())
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

/// Plain gradient descent with the analytic gradient (one call per step).
pub fn gradient_descent<O: Objective>(objective: &O, cfg: &OptimizerConfig, x0: &[f64], f_star: f64) -> Result<RunTrace> {
    run_sgd(&mut ExactSource { objective, calls: 0 }, cfg, x0, f_star)
}

/// First-order oracle returning `∇f(x) + b(x) + n` with
///
/// - `b(x) = -√m ∇f(x) + ζ v(x)`, `v(x)` a unit vector orthogonal to `∇f(x)`,
///   so `|b|^2 = m |∇f|^2 + ζ^2` exactly;
/// - `n = s z / √d`, `z ~ N(0, I)`, `s^2 = M |∇f + b|^2 + σ^2`, so `E n = 0`
///   and `E|n|^2 = M |∇f + b|^2 + σ^2` exactly.
#[derive(Debug, Clone)]
pub struct SyntheticBiasedOracle<O> {
    objective: O,
    m: f64,
    zeta_sq: f64,
    big_m: f64,
    sigma_sq: f64,
    l2: f64,
    mu: f64,
    f_star: f64,
}

impl<O: Objective> SyntheticBiasedOracle<O> {
    /// The objective must report `l2`, `mu` and `f_star`.
    pub fn new(objective: O, m: f64, zeta_sq: f64, big_m: f64, sigma_sq: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&m) {
            return Err(Error::param("m", "must satisfy 0 <= m < 1"));
        }
        for (name, v) in [("zeta_sq", zeta_sq), ("big_m", big_m), ("sigma_sq", sigma_sq)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and >= 0"));
            }
        }
        if zeta_sq > 0.0 && objective.dim() < 2 {
            return Err(Error::param("zeta_sq", "an orthogonal bias direction needs d >= 2"));
        }
        let k = objective.constants();
        let (Some(l2), Some(mu), Some(f_star)) = (k.l2, k.mu, k.f_star) else {
            return Err(Error::param("objective", "needs known l2, mu and f_star"));
        };
        Ok(Self {
            objective,
            m,
            zeta_sq,
            big_m,
            sigma_sq,
            l2,
            mu,
            f_star,
        })
    }

    pub fn objective(&self) -> &O {
        &self.objective
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn zeta_sq(&self) -> f64 {
        self.zeta_sq
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn f_star(&self) -> f64 {
        self.f_star
    }

    /// Largest step size covered by the convergence bound, `1 / ((M + 1) L₂)`.
    pub fn max_eta(&self) -> f64 {
        1.0 / ((self.big_m + 1.0) * self.l2)
    }

    /// `b(x)` for the given true gradient.
    pub fn bias(&self, grad: &[f64]) -> Vec<f64> {
        let sm = libm::sqrt(self.m);
        let mut b: Vec<f64> = grad.iter().map(|g| -sm * g).collect();
        if self.zeta_sq > 0.0 {
            let v = orthogonal_unit(grad);
            let z = libm::sqrt(self.zeta_sq);
            for (bi, vi) in b.iter_mut().zip(&v) {
                *bi += z * vi;
            }
        }
        b
    }

    /// One draw `∇f(x) + b(x) + n`.
    pub fn sample<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        let grad = self.true_gradient(x)?;
        let mean = self.biased_mean(&grad);
        self.add_noise(&mean, &mut out, rng);
        Ok(out)
    }

    fn true_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.objective.dim() {
            return Err(Error::Dimension {
                expected: self.objective.dim(),
                got: x.len(),
            });
        }
        self.objective
            .gradient(x)
            .ok_or_else(|| Error::param("objective", "no analytic gradient available"))
    }

    fn biased_mean(&self, grad: &[f64]) -> Vec<f64> {
        let b = self.bias(grad);
        grad.iter().zip(&b).map(|(g, b)| g + b).collect()
    }

    /// Writes `mean + n` into `out`.
    fn add_noise<R: Rng + ?Sized>(&self, mean: &[f64], out: &mut [f64], rng: &mut R) {
        let s2 = self.big_m * norm_sq(mean) + self.sigma_sq;
        let scale = libm::sqrt(s2 / mean.len() as f64);
        for (o, mu) in out.iter_mut().zip(mean) {
            let z: f64 = if s2 > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
            *o = mu + scale * z;
        }
    }
}

/// A unit vector orthogonal to `g` (any unit vector if `g = 0`), obtained by
/// Gram–Schmidt on a fixed reference direction.
fn orthogonal_unit(g: &[f64]) -> Vec<f64> {
    let d = g.len();
    let gn = norm(g);
    let candidates = [
        (0..d).map(|i| 1.0 / (1.0 + i as f64)).collect::<Vec<f64>>(),
        (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
    ];
    for r in candidates.iter().chain(core::iter::once(&{
        let mut e = vec![0.0; d];
        e[d - 1] = 1.0;
        e
    })) {
        let mut v = r.clone();
        if gn > 0.0 {
            let proj = dot(&v, g) / (gn * gn);
            for (vi, gi) in v.iter_mut().zip(g) {
                *vi -= proj * gi;
            }
        }
        let vn = norm(&v);
        if vn > 1e-8 * norm(r) {
            return v.iter().map(|x| x / vn).collect();
        }
    }
    // The three references cannot all be parallel to g when d >= 2.
    let mut e = vec![0.0; d];
    e[0] = 1.0;
    e
}

struct BiasedSource<'a, O>(&'a SyntheticBiasedOracle<O>);

impl<O: Objective> GradientSource for BiasedSource<'_, O> {
    fn dim(&self) -> usize {
        self.0.objective.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.0.objective.value(x)
    }

    /// Noise draw `j` of iteration `iter` uses `streams.sample(iter, j)`.
    fn direction(&mut self, x: &[f64], iter: u64, batch: usize, streams: &Substreams, out: &mut [f64]) -> Result<()> {
        let grad = self.0.true_gradient(x)?;
        let mean = self.0.biased_mean(&grad);
        let mut draw = vec![0.0; x.len()];
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..batch {
            let mut rng = streams.sample(iter, j as u64);
            self.0.add_noise(&mean, &mut draw, &mut rng.geometry);
            for (o, v) in out.iter_mut().zip(&draw) {
                *o += v;
            }
        }
        let inv = 1.0 / batch as f64;
        out.iter_mut().for_each(|v| *v *= inv);
        Ok(())
    }

    /// The synthetic oracle does not meter calls.
    fn calls(&self) -> u64 {
        0
    }
}

/// First-order SGD with the synthetic biased oracle. Requires
/// `eta <= 1 / ((M + 1) L₂)`.
pub fn biased_sgd<O: Objective>(oracle: &SyntheticBiasedOracle<O>, cfg: &OptimizerConfig, x0: &[f64]) -> Result<RunTrace> {
    if cfg.eta > oracle.max_eta() * (1.0 + 1e-12) {
        return Err(Error::param("opt.eta", "must not exceed 1 / ((M + 1) L2)"));
    }
    run_sgd(&mut BiasedSource(oracle), cfg, x0, oracle.f_star)
}

/// Pointwise statistics of gaps across repetitions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTrace {
    pub iters: Vec<usize>,
    pub oracle_calls: Vec<u64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation (zero for a single repetition).
    pub std: Vec<f64>,
    /// Standard error of the mean.
    pub se: Vec<f64>,
    pub reps: usize,
}

/// Averages gaps arithmetically across traces recorded at the same iterations.
pub fn mean_trace(traces: &[RunTrace]) -> Result<MeanTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::param("opt.reps", "need at least one trace"))?;
    let len = first.records.len();
    if traces.iter().any(|t| t.records.len() != len) {
        return Err(Error::param("opt.reps", "traces have different lengths"));
    }
    let n = traces.len() as f64;
    let mut out = MeanTrace {
        iters: first.records.iter().map(|r| r.iter).collect(),
        oracle_calls: Vec::with_capacity(len),
        mean: Vec::with_capacity(len),
        std: Vec::with_capacity(len),
        se: Vec::with_capacity(len),
        reps: traces.len(),
    };
    for i in 0..len {
        let mean = traces.iter().map(|t| t.records[i].f_gap).sum::<f64>() / n;
        let var = if traces.len() > 1 {
            traces.iter().map(|t| (t.records[i].f_gap - mean) * (t.records[i].f_gap - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let calls = traces.iter().map(|t| t.records[i].oracle_calls).sum::<u64>() / traces.len() as u64;
        out.oracle_calls.push(calls);
        out.mean.push(mean);
        out.std.push(libm::sqrt(var));
        out.se.push(libm::sqrt(var / n));
    }
    Ok(out)
}

/// Repetition `r` of a run seeded with `seed` uses `seed ^ r`.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    seed ^ rep as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::QuadraticObjective;
    use crate::kernels::build_kernel;
    use crate::oracle::FnObjective;

    fn identity(d: usize) -> QuadraticObjective {
        QuadraticObjective::diagonal(&vec![1.0; d], vec![0.0; d]).unwrap()
    }

    #[test]
    fn exact_descent_contracts_geometrically() {
        let q = identity(3);
        let cfg = OptimizerConfig::new(0.5, 20, 1, 0);
        let t = gradient_descent(&q, &cfg, &[1.0, -2.0, 0.5], 0.0).unwrap();
        assert_eq!(t.records.len(), 21);
        for w in t.records.windows(2) {
            assert!((w[1].f_gap / w[0].f_gap - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_step_keeps_the_iterate() {
        let oracle = ZeroOrderOracle::noise_free(identity(2));
        let est = EstimatorConfig::kernel(0.1, build_kernel(2).unwrap());
        let cfg = OptimizerConfig::new(0.0, 10, 3, 1);
        let t = zo_mb_sgd(&oracle, &est, &cfg, &[1.0, 1.0], 0.0).unwrap();
        assert_eq!(t.x_final, vec![1.0, 1.0]);
        assert!(t.records.iter().all(|r| r.f_gap == 1.0));
    }

    #[test]
    fn call_accounting_matches_two_per_sample() {
        let oracle = ZeroOrderOracle::noise_free(identity(4));
        for est in [
            EstimatorConfig::kernel(0.01, build_kernel(3).unwrap()),
            EstimatorConfig::gaussian(0.01),
            EstimatorConfig::l2(0.01),
        ] {
            oracle.reset_calls();
            let cfg = OptimizerConfig::new(0.05, 25, 7, 2);
            let t = zo_mb_sgd(&oracle, &est, &cfg, &[1.0; 4], 0.0).unwrap();
            for r in &t.records {
                assert_eq!(r.oracle_calls, 2 * 7 * r.iter as u64);
            }
            assert_eq!(oracle.calls(), 2 * 7 * 25);
        }
    }

    #[test]
    fn runs_are_bit_deterministic() {
        let oracle = ZeroOrderOracle::noise_free(identity(5));
        let est = EstimatorConfig::gaussian(0.01);
        let mut cfg = OptimizerConfig::new(0.02, 50, 2, 9);
        cfg.record_grad_norm = true;
        let a = zo_mb_sgd(&oracle, &est, &cfg, &[1.0; 5], 0.0).unwrap();
        let b = zo_mb_sgd(&oracle, &est, &cfg, &[1.0; 5], 0.0).unwrap();
        assert_eq!(a, b);
        assert!(a.records[0].grad_norm.is_some());
        assert!(a.records.last().unwrap().grad_norm.is_none());
        cfg.seed = 10;
        assert_ne!(a, zo_mb_sgd(&oracle, &est, &cfg, &[1.0; 5], 0.0).unwrap());
    }

    #[test]
    fn long_runs_are_subsampled() {
        let q = identity(1);
        let cfg = OptimizerConfig::new(0.0, 250_000, 1, 0);
        let t = gradient_descent(&q, &cfg, &[1.0], 0.0).unwrap();
        assert_eq!(cfg.record_stride(), 25);
        assert_eq!(t.records.len(), 10_001);
        assert_eq!(t.records.last().unwrap().iter, 250_000);
    }

    #[test]
    fn divergence_returns_partial_trace() {
        let f = FnObjective::new(1, |x: &[f64]| x[0].exp()).with_gradient(|x| vec![x[0].exp()]);
        let cfg = OptimizerConfig::new(-1.0, 5, 1, 0);
        assert!(gradient_descent(&f, &cfg, &[0.0], 0.0).is_err());
        let cfg = OptimizerConfig::new(1e3, 500, 1, 0);
        let q = QuadraticObjective::diagonal(&[1.0], vec![0.0]).unwrap();
        match gradient_descent(&q, &cfg, &[1.0], 0.0) {
            Err(Error::Diverged { iter, trace }) => {
                assert!(iter > 0);
                assert_eq!(trace.records.len(), iter);
                assert!(trace.x_final.iter().all(|v| v.is_finite()));
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn synthetic_bias_has_exact_norm() {
        let q = identity(3);
        let o = SyntheticBiasedOracle::new(q, 0.5, 0.04, 1.0, 0.0).unwrap();
        for g in [[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]] {
            let b = o.bias(&g);
            let want = 0.5 * norm_sq(&g) + 0.04;
            assert!((norm_sq(&b) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn synthetic_oracle_rejects_bad_parameters() {
        assert!(SyntheticBiasedOracle::new(identity(2), 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SyntheticBiasedOracle::new(identity(1), 0.0, 0.1, 0.0, 0.0).is_err());
        let o = SyntheticBiasedOracle::new(identity(2), 0.0, 0.0, 3.0, 0.0).unwrap();
        let cfg = OptimizerConfig::new(0.3, 5, 1, 0);
        assert!(biased_sgd(&o, &cfg, &[1.0, 1.0]).is_err());
        let cfg = OptimizerConfig::new(0.25, 5, 1, 0);
        assert!(biased_sgd(&o, &cfg, &[1.0, 1.0]).is_ok());
    }

    #[test]
    fn noiseless_synthetic_oracle_is_gradient_descent() {
        let q = QuadraticObjective::diagonal(&[0.5, 2.0], vec![0.0, 0.0]).unwrap();
        let o = SyntheticBiasedOracle::new(q.clone(), 0.0, 0.0, 0.0, 0.0).unwrap();
        let cfg = OptimizerConfig::new(0.5, 30, 4, 3);
        let a = biased_sgd(&o, &cfg, &[1.0, 1.0]).unwrap();
        let b = gradient_descent(&q, &cfg, &[1.0, 1.0], 0.0).unwrap();
        assert_eq!(a.gaps(), b.gaps());
    }

    #[test]
    fn mean_trace_statistics() {
        let q = identity(1);
        let cfg = OptimizerConfig::new(0.5, 3, 1, 0);
        let a = gradient_descent(&q, &cfg, &[1.0], 0.0).unwrap();
        let b = gradient_descent(&q, &cfg, &[3.0], 0.0).unwrap();
        let m = mean_trace(&[a, b]).unwrap();
        assert_eq!(m.mean[0], 2.5);
        assert!((m.std[0] - 8f64.sqrt()).abs() < 1e-12);
        assert!(mean_trace(&[]).is_err());
    }
}
