//! Objectives and the zero-order oracles wrapping them.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::noise::NoiseModel;
use crate::{Error, Result};

/// Known analytic constants of an objective. Any of them may be unknown.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObjectiveConstants {
    /// Lipschitz constant of the gradient.
    pub l2: Option<f64>,
    /// Hölder constant of the Taylor remainder of order `beta`.
    pub l_beta: Option<f64>,
    /// Polyak–Lojasiewicz constant.
    pub mu: Option<f64>,
    /// Optimal value.
    pub f_star: Option<f64>,
}

/// An exact objective `f: R^d -> R`.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn constants(&self) -> ObjectiveConstants {
        ObjectiveConstants::default()
    }
}

macro_rules! forward_objective {
    ($($ty:ty),*) => {$(
        impl<T: Objective + ?Sized> Objective for $ty {
            fn dim(&self) -> usize { (**self).dim() }
            fn value(&self, x: &[f64]) -> f64 { (**self).value(x) }
            fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> { (**self).gradient(x) }
            fn constants(&self) -> ObjectiveConstants { (**self).constants() }
        }
    )*};
}
forward_objective!(&T, Box<T>, Arc<T>);

type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Objective defined by closures.
pub struct FnObjective<F> {
    dim: usize,
    value: F,
    gradient: Option<GradFn>,
    constants: ObjectiveConstants,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, value: F) -> Self {
        Self {
            dim,
            value,
            gradient: None,
            constants: ObjectiveConstants::default(),
        }
    }

    pub fn with_gradient(mut self, grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Box::new(grad));
        self
    }

    pub fn with_constants(mut self, constants: ObjectiveConstants) -> Self {
        self.constants = constants;
        self
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    fn constants(&self) -> ObjectiveConstants {
        self.constants
    }
}

/// The four oracle regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleMode {
    /// ① `f(x) + δ(x)`
    Deterministic,
    /// ② `f(x, ξ) + δ(x)`: two-point feedback on a stochastic objective.
    TwoPoint,
    /// ③ `f(x) + ξ`
    Additive,
    /// ④ `f(x) + ξ + δ(x)`
    Mixed,
}

impl OracleMode {
    pub const ALL: [OracleMode; 4] = [
        OracleMode::Deterministic,
        OracleMode::TwoPoint,
        OracleMode::Additive,
        OracleMode::Mixed,
    ];

    /// 1-based index matching ①..④.
    pub fn index(self) -> u8 {
        match self {
            OracleMode::Deterministic => 1,
            OracleMode::TwoPoint => 2,
            OracleMode::Additive => 3,
            OracleMode::Mixed => 4,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Self::ALL.get(usize::from(i).checked_sub(1)?).copied()
    }

    fn uses_det(self) -> bool {
        !matches!(self, OracleMode::Additive)
    }

    fn uses_stoch(self) -> bool {
        matches!(self, OracleMode::Additive | OracleMode::Mixed)
    }
}

/// Per-realisation stochasticity of `f(x, ξ)` in mode ②, modelled as
/// `f(x, ξ) = f(x) + std * z` with `z ~ N(0, 1)`.
///
/// With `shared = true` both points of a pair query are evaluated on the same
/// realisation, which is what two-point feedback means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizationNoise {
    pub std: f64,
    pub shared: bool,
}

impl Default for RealizationNoise {
    fn default() -> Self {
        Self { std: 0.0, shared: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub mode: OracleMode,
    pub det_noise: NoiseModel,
    pub stoch_noise: NoiseModel,
    pub realization: RealizationNoise,
}

impl OracleConfig {
    pub fn noise_free() -> Self {
        Self::deterministic(NoiseModel::None)
    }

    pub fn deterministic(det_noise: NoiseModel) -> Self {
        Self {
            mode: OracleMode::Deterministic,
            det_noise,
            stoch_noise: NoiseModel::None,
            realization: RealizationNoise::default(),
        }
    }

    pub fn additive(stoch_noise: NoiseModel) -> Self {
        Self {
            mode: OracleMode::Additive,
            det_noise: NoiseModel::None,
            stoch_noise,
            realization: RealizationNoise::default(),
        }
    }

    pub fn mixed(det_noise: NoiseModel, stoch_noise: NoiseModel) -> Self {
        Self {
            mode: OracleMode::Mixed,
            det_noise,
            stoch_noise,
            realization: RealizationNoise::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.det_noise.validate()?;
        self.stoch_noise.validate()?;
        if !self.det_noise.is_deterministic() {
            return Err(Error::param("oracle.det_scheme", "deterministic slot holds a stochastic model"));
        }
        if !self.stoch_noise.is_stochastic() {
            return Err(Error::param("oracle.stoch_dist", "stochastic slot holds a deterministic model"));
        }
        if !self.mode.uses_det() && self.det_noise != NoiseModel::None {
            return Err(Error::param("oracle.mode", "mode 3 carries no deterministic noise"));
        }
        if !self.mode.uses_stoch() && self.stoch_noise != NoiseModel::None {
            return Err(Error::param("oracle.mode", "modes 1 and 2 carry no additive stochastic noise"));
        }
        let std = self.realization.std;
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::param("oracle.realization_std", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// A zero-order oracle: an exact objective observed through one of the four
/// noise regimes. Every query increments an atomic call counter.
pub struct ZeroOrderOracle<O> {
    objective: O,
    config: OracleConfig,
    calls: AtomicU64,
}

impl<O: Objective> ZeroOrderOracle<O> {
    pub fn new(objective: O, config: OracleConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            objective,
            config,
            calls: AtomicU64::new(0),
        })
    }

    pub fn noise_free(objective: O) -> Self {
        Self::new(objective, OracleConfig::noise_free()).expect("noise-free config is valid")
    }

    pub fn objective(&self) -> &O {
        &self.objective
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn mode(&self) -> OracleMode {
        self.config.mode
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    fn exact(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        let value = self.objective.value(x);
        if !value.is_finite() {
            return Err(Error::NonFinite { x: x.to_vec(), value });
        }
        Ok(value)
    }

    fn realization<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.config.mode == OracleMode::TwoPoint && self.config.realization.std > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            self.config.realization.std * z
        } else {
            0.0
        }
    }

    fn observe<R: RngCore + ?Sized>(&self, x: &[f64], value: f64, realization: f64, rng: &mut R) -> f64 {
        let det = self.config.det_noise.deterministic_part(x, value);
        let stoch = self.config.stoch_noise.draw(rng);
        match self.config.mode {
            OracleMode::Deterministic => value + det,
            OracleMode::TwoPoint => value + realization + det,
            OracleMode::Additive => value + stoch,
            OracleMode::Mixed => value + det + stoch,
        }
    }

    /// One noisy function value. Stochastic components are drawn fresh.
    pub fn query<R: RngCore + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<f64> {
        let value = self.exact(x)?;
        let realization = self.realization(rng);
        Ok(self.observe(x, value, realization, rng))
    }

    /// Two noisy function values. In mode ② with shared realisations both
    /// values see the same `ξ`; every other stochastic term is drawn per point.
    pub fn query_pair<R: RngCore + ?Sized>(&self, a: &[f64], b: &[f64], rng: &mut R) -> Result<(f64, f64)> {
        let (va, vb) = (self.exact(a)?, self.exact(b)?);
        let ra = self.realization(rng);
        let rb = if self.config.realization.shared {
            ra
        } else {
            self.realization(rng)
        };
        let fa = self.observe(a, va, ra, rng);
        let fb = self.observe(b, vb, rb, rng);
        Ok((fa, fb))
    }
}
