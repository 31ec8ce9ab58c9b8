//! Closed-form bound, parameter and complexity calculators.
//!
//! Dominant-order expressions (`error_floor`, `optimal_gamma`, `max_noise`,
//! `complexity_row`) use unit constants and drop logarithmic factors.
//! They are meant for overlays, orderings and exponent checks only.

use crate::{Error, Result};

/// Zero-order oracle settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Case {
    /// `f(x) + δ(x)`.
    Deterministic,
    /// `f(x, ξ) + δ(x)` with both points sharing `ξ`.
    TwoPoint,
    /// `f(x) + ξ`.
    Additive,
    /// `f(x) + ξ + δ(x)`.
    Mixed,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::Deterministic, Case::TwoPoint, Case::Additive, Case::Mixed];

    pub fn index(self) -> u8 {
        match self {
            Case::Deterministic => 1,
            Case::TwoPoint => 2,
            Case::Additive => 3,
            Case::Mixed => 4,
        }
    }

    pub fn from_index(i: u8) -> Option<Self> {
        Case::ALL.get(usize::from(i).wrapping_sub(1)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Approach {
    Kernel,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Deterministic or two-point oracle.
    T1,
    /// One-point oracle with additive stochastic noise.
    T2,
    /// One-point oracle with stochastic and deterministic noise.
    T3,
}

impl Theorem {
    pub fn for_case(case: Case) -> Self {
        match case {
            Case::Deterministic | Case::TwoPoint => Theorem::T1,
            Case::Additive => Theorem::T2,
            Case::Mixed => Theorem::T3,
        }
    }
}

/// Which complexity table to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TableMode {
    #[default]
    Paper,
    /// Dimension dependence from the sharper bias / second-moment analysis.
    Improved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub beta: u32,
    pub d: usize,
    pub l2: f64,
    pub l_beta: f64,
    pub mu: f64,
    pub gamma: f64,
    /// Deterministic noise level `Δ`.
    pub delta: f64,
    /// Stochastic noise level `Δ̃`.
    pub delta_tilde: f64,
    pub batch: usize,
    pub eta: f64,
    pub epsilon: f64,
    /// `f(x_0) - f*`.
    pub f0_gap: f64,
    pub mode: TableMode,
}

impl Default for BoundInputs {
    fn default() -> Self {
        Self {
            beta: 2,
            d: 1,
            l2: 1.0,
            l_beta: 1.0,
            mu: 1.0,
            gamma: 0.1,
            delta: 0.0,
            delta_tilde: 0.0,
            batch: 1,
            eta: 0.01,
            epsilon: 0.01,
            f0_gap: 1.0,
            mode: TableMode::Paper,
        }
    }
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.beta == 0 {
            return Err(Error::param("beta", "must be >= 1"));
        }
        if self.d == 0 {
            return Err(Error::param("d", "must be >= 1"));
        }
        if self.batch == 0 {
            return Err(Error::param("batch", "must be >= 1"));
        }
        let nonneg = [
            ("l2", self.l2),
            ("l_beta", self.l_beta),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("delta_tilde", self.delta_tilde),
            ("eta", self.eta),
            ("epsilon", self.epsilon),
            ("f0_gap", self.f0_gap),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }

    fn d(&self) -> f64 {
        self.d as f64
    }

    fn beta(&self) -> f64 {
        f64::from(self.beta)
    }

    fn require_gamma(&self) -> Result<()> {
        if self.gamma > 0.0 {
            Ok(())
        } else {
            Err(Error::param("gamma", "must be > 0"))
        }
    }

    fn require_mu(&self) -> Result<()> {
        if self.mu > 0.0 {
            Ok(())
        } else {
            Err(Error::param("mu", "must be > 0"))
        }
    }
}

/// Constants of a biased gradient oracle: noise `(M, σ²)` and bias `(m, ζ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    pub big_m: f64,
    pub sigma_sq: f64,
    pub m: f64,
    pub zeta_sq: f64,
}

/// `(1 - η μ (1 - m))^N f0 + ζ² / (2 μ (1 - m)) + η L₂ σ² / (2 B μ (1 - m))`.
pub fn lemma1_bound(inputs: &BoundInputs, params: &OracleParams, n: u64) -> Result<f64> {
    inputs.validate()?;
    inputs.require_mu()?;
    if !(0.0..1.0).contains(&params.m) {
        return Err(Error::param("m", "must satisfy 0 <= m < 1"));
    }
    let eta_max = 1.0 / ((params.big_m + 1.0) * inputs.l2);
    if !(inputs.eta > 0.0 && inputs.eta <= eta_max * (1.0 + 1e-12)) {
        return Err(Error::param("eta", "must satisfy 0 < eta <= 1 / ((M + 1) L2)"));
    }
    let one_m = 1.0 - params.m;
    let rate = 1.0 - inputs.eta * inputs.mu * one_m;
    let geometric = libm::pow(rate, n as f64) * inputs.f0_gap;
    Ok(geometric + lemma1_floor(inputs, params))
}

/// The `N → ∞` limit of [`lemma1_bound`].
pub fn lemma1_floor(inputs: &BoundInputs, params: &OracleParams) -> f64 {
    let denom = 2.0 * inputs.mu * (1.0 - params.m);
    params.zeta_sq / denom + inputs.eta * inputs.l2 * params.sigma_sq / (inputs.batch as f64 * denom)
}

/// Oracle constants of the kernel estimator in each setting.
pub fn theorem_params(theorem: Theorem, inputs: &BoundInputs) -> Result<OracleParams> {
    inputs.validate()?;
    let (b, d) = (inputs.beta(), inputs.d());
    let (b2, b3, d2) = (b * b, b * b * b, d * d);
    let g = inputs.gamma;
    let g2 = g * g;
    let smooth = inputs.l_beta * inputs.l_beta * libm::pow(g, 2.0 * (b - 1.0));
    let over = |v: f64| if v == 0.0 { 0.0 } else { v / g2 };
    if (inputs.delta > 0.0 || inputs.delta_tilde > 0.0) && g == 0.0 {
        return Err(Error::param("gamma", "must be > 0 when noise is present"));
    }
    let (dl, dt) = (inputs.delta * inputs.delta, inputs.delta_tilde * inputs.delta_tilde);
    let l22 = inputs.l2 * inputs.l2;
    let p = match theorem {
        Theorem::T1 => OracleParams {
            big_m: 6.0 * b3 * d,
            sigma_sq: 0.75 * b3 * d2 * l22 * g2 + 2.0 * b3 * d2 * over(dl),
            m: 0.0,
            zeta_sq: b2 * d2 * (smooth + over(dl)),
        },
        Theorem::T2 => OracleParams {
            big_m: 18.0 * b3 * d,
            sigma_sq: 0.75 * d2 * l22 * g2 + 2.0 * d2 * over(dt),
            m: 0.0,
            zeta_sq: 8.0 * b2 * d2 * smooth,
        },
        Theorem::T3 => OracleParams {
            big_m: b3 * d,
            sigma_sq: b3 * d2 * l22 * g2 + b3 * d2 * over(dl + dt),
            m: 0.0,
            zeta_sq: b2 * d2 * smooth + b2 * d2 * over(dl),
        },
    };
    Ok(p)
}

/// Deterministic level entering the bias in the given setting.
fn bias_level(inputs: &BoundInputs, case: Case) -> f64 {
    match case {
        Case::Additive => 0.0,
        _ => inputs.delta,
    }
}

/// Squared noise level entering the second moment in the given setting.
fn variance_level(inputs: &BoundInputs, case: Case) -> f64 {
    let (dl, dt) = (inputs.delta * inputs.delta, inputs.delta_tilde * inputs.delta_tilde);
    match case {
        Case::Deterministic | Case::TwoPoint => dl,
        Case::Additive => dt,
        Case::Mixed => dl + dt,
    }
}

/// `|E g̃ - ∇f| <= κ_β d (L_β γ^{β-1} + Δ / γ)`; the `Δ` term is absent
/// under purely stochastic noise.
pub fn kernel_bias_bound(inputs: &BoundInputs, kappa_beta: f64, case: Case) -> Result<f64> {
    inputs.validate()?;
    inputs.require_gamma()?;
    let g = inputs.gamma;
    let smooth = inputs.l_beta * libm::pow(g, inputs.beta() - 1.0);
    Ok(kappa_beta * inputs.d() * (smooth + bias_level(inputs, case) / g))
}

/// `E|g̃|^2 <= κ (6 d |∇f|^2 + 3 d² L₂² γ² / 4 + 2 d² V / γ²)` with `V`
/// the squared noise level of the setting.
pub fn kernel_second_moment_bound(inputs: &BoundInputs, kappa: f64, case: Case, grad_norm_sq: f64) -> Result<f64> {
    inputs.validate()?;
    inputs.require_gamma()?;
    let (d, g) = (inputs.d(), inputs.gamma);
    let v = variance_level(inputs, case);
    Ok(kappa * (6.0 * d * grad_norm_sq + 0.75 * d * d * inputs.l2 * inputs.l2 * g * g + 2.0 * d * d * v / (g * g)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBounds {
    pub bias_bound: f64,
    pub second_moment_bound: f64,
}

/// Gaussian smoothing: bias `<= L₂ γ d^{3/2} + Δ d^{1/2} / γ` and
/// `E|g̃|^2 <= 3 L₂² γ² d³ + 3 d |∇f|^2 + 3 d V / γ²`.
pub fn gaussian_bounds(inputs: &BoundInputs, case: Case, grad_norm_sq: f64) -> Result<GaussianBounds> {
    inputs.validate()?;
    inputs.require_gamma()?;
    let (d, g, l2) = (inputs.d(), inputs.gamma, inputs.l2);
    let bias_bound = l2 * g * libm::pow(d, 1.5) + bias_level(inputs, case) * libm::sqrt(d) / g;
    let v = variance_level(inputs, case);
    let second_moment_bound = 3.0 * l2 * l2 * g * g * d * d * d + 3.0 * d * grad_norm_sq + 3.0 * d * v / (g * g);
    Ok(GaussianBounds {
        bias_bound,
        second_moment_bound,
    })
}

fn require_delta(inputs: &BoundInputs) -> Result<()> {
    if inputs.delta > 0.0 {
        Ok(())
    } else {
        Err(Error::param("delta", "must be > 0"))
    }
}

fn require_kernel_beta(inputs: &BoundInputs) -> Result<()> {
    if inputs.beta >= 2 {
        Ok(())
    } else {
        Err(Error::param("beta", "the kernel expression needs beta >= 2"))
    }
}

/// Dominant-order error floor: `d² Δ^{2(β-1)/β}` (kernel) or `d² Δ` (Gaussian).
pub fn error_floor(approach: Approach, inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    require_delta(inputs)?;
    let d2 = inputs.d() * inputs.d();
    match approach {
        Approach::Kernel => {
            require_kernel_beta(inputs)?;
            let b = inputs.beta();
            Ok(d2 * libm::pow(inputs.delta, 2.0 * (b - 1.0) / b))
        }
        Approach::Gaussian => Ok(d2 * inputs.delta),
    }
}

/// The bias-plus-noise expression traded off by `γ`:
/// `d² γ^{2(β-1)} + d² Δ² / γ²` (kernel) or `γ² d³ + Δ² d / γ²` (Gaussian).
pub fn floor_expression(approach: Approach, inputs: &BoundInputs, gamma: f64) -> f64 {
    let d = inputs.d();
    let dl = inputs.delta * inputs.delta;
    match approach {
        Approach::Kernel => d * d * (libm::pow(gamma, 2.0 * (inputs.beta() - 1.0)) + dl / (gamma * gamma)),
        Approach::Gaussian => gamma * gamma * d * d * d + dl * d / (gamma * gamma),
    }
}

/// The exact minimiser of [`floor_expression`]: `(Δ² / (β - 1))^{1/(2β)}`
/// for the kernel (equal to `Δ^{1/β}` at `β = 2` and of the same order
/// otherwise) and `Δ^{1/2} d^{-1/2}` for Gaussian smoothing.
pub fn optimal_gamma(approach: Approach, inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    require_delta(inputs)?;
    match approach {
        Approach::Kernel => {
            require_kernel_beta(inputs)?;
            let b = inputs.beta();
            Ok(libm::pow(inputs.delta * inputs.delta / (b - 1.0), 1.0 / (2.0 * b)))
        }
        Approach::Gaussian => Ok(libm::sqrt(inputs.delta / inputs.d())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BatchRegime {
    /// `B <= β³ d`.
    Small,
    /// `B > β³ d`.
    Large,
}

pub fn batch_regime(inputs: &BoundInputs) -> BatchRegime {
    let threshold = inputs.beta() * inputs.beta() * inputs.beta() * inputs.d();
    if inputs.batch as f64 <= threshold {
        BatchRegime::Small
    } else {
        BatchRegime::Large
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityRow {
    pub regime: BatchRegime,
    pub n_bound: f64,
    pub t_bound: f64,
    pub delta_max: f64,
}

/// Noise level that the table's oracle-complexity term refers to.
fn table_level(inputs: &BoundInputs, case: Case) -> f64 {
    match case {
        Case::Deterministic | Case::TwoPoint => inputs.delta,
        Case::Additive => inputs.delta_tilde,
        Case::Mixed => libm::hypot(inputs.delta, inputs.delta_tilde),
    }
}

/// Iteration complexity `N`, oracle complexity `T` and admissible noise
/// level for one cell of the complexity table (unit constants, no logs).
pub fn complexity_row(case: Case, approach: Approach, inputs: &BoundInputs) -> Result<ComplexityRow> {
    inputs.validate()?;
    inputs.require_mu()?;
    if !(inputs.epsilon > 0.0) {
        return Err(Error::param("epsilon", "must be > 0"));
    }
    let (d, mu, eps, bsz) = (inputs.d(), inputs.mu, inputs.epsilon, inputs.batch as f64);
    let improved = inputs.mode == TableMode::Improved;
    let additive = case == Case::Additive;
    let regime = batch_regime(inputs);
    let row = match regime {
        BatchRegime::Small => {
            let d_exp = match (improved, additive) {
                (false, false) => -1.5,
                (false, true) => -1.0,
                (true, false) => -1.0,
                (true, true) => -0.5,
            };
            ComplexityRow {
                regime,
                n_bound: d / (bsz * mu),
                t_bound: d / mu,
                delta_max: mu * eps * libm::pow(d, d_exp),
            }
        }
        BatchRegime::Large => {
            let level = table_level(inputs, case);
            let level_sq = level * level;
            let batch_gain = if additive { libm::sqrt(bsz) } else { 1.0 };
            let (noise_calls, delta_max) = match approach {
                Approach::Gaussian => {
                    let d_pow = if improved { 2.0 } else { 4.0 };
                    let calls = libm::pow(d, d_pow) * level_sq / (eps * eps * mu * mu * mu);
                    let dmax_exp = if improved { -1.0 } else { -2.0 };
                    (calls, mu * eps * libm::pow(d, dmax_exp))
                }
                Approach::Kernel => {
                    require_kernel_beta(inputs)?;
                    let b = inputs.beta();
                    let d_pow = if improved { 2.0 } else { 2.0 + 2.0 / (b - 1.0) };
                    let calls = libm::pow(d, d_pow) * level_sq
                        / (libm::pow(eps, b / (b - 1.0)) * libm::pow(mu, (2.0 * b - 1.0) / (b - 1.0)));
                    let dmax_d = if improved { 1.0 } else { b / (b - 1.0) };
                    (calls, libm::pow(mu * eps, b / (2.0 * (b - 1.0))) / libm::pow(d, dmax_d))
                }
            };
            ComplexityRow {
                regime,
                n_bound: 1.0 / mu,
                t_bound: (bsz / mu).max(noise_calls),
                delta_max: delta_max * batch_gain,
            }
        }
    };
    Ok(row)
}

/// Admissible noise level from the matching complexity-table cell.
pub fn max_noise(approach: Approach, case: Case, inputs: &BoundInputs) -> Result<f64> {
    complexity_row(case, approach, inputs).map(|r| r.delta_max)
}

/// Markov bound on `P(f(x_N) - f* >= eps)`: `min(1, expected_gap / eps)`.
pub fn markov_confidence(expected_gap: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::param("epsilon", "must be > 0"));
    }
    if !(expected_gap >= 0.0) {
        return Err(Error::param("expected_gap", "must be >= 0"));
    }
    Ok((expected_gap / eps).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn lemma1_pure_geometric() {
        let inputs = BoundInputs {
            eta: 0.1,
            mu: 1.0,
            l2: 1.0,
            ..BoundInputs::default()
        };
        let p = OracleParams {
            big_m: 0.0,
            sigma_sq: 0.0,
            m: 0.0,
            zeta_sq: 0.0,
        };
        assert!(close(lemma1_bound(&inputs, &p, 10).unwrap(), 0.9f64.powi(10)));
        assert!((lemma1_bound(&inputs, &p, 10).unwrap() - 0.3487).abs() < 1e-4);
    }

    #[test]
    fn lemma1_limit_and_errors() {
        let inputs = BoundInputs {
            eta: 0.1,
            mu: 0.5,
            l2: 2.0,
            batch: 4,
            ..BoundInputs::default()
        };
        let p = OracleParams {
            big_m: 1.0,
            sigma_sq: 2.0,
            m: 0.5,
            zeta_sq: 0.3,
        };
        let floor = 0.3 / (2.0 * 0.5 * 0.5) + 0.1 * 2.0 * 2.0 / (2.0 * 4.0 * 0.5 * 0.5);
        assert!(close(lemma1_bound(&inputs, &p, 1_000_000).unwrap(), floor));
        assert!(lemma1_bound(&inputs, &OracleParams { m: 1.0, ..p }, 1).is_err());
        let fast = BoundInputs { eta: 0.3, ..inputs };
        assert!(lemma1_bound(&fast, &p, 1).is_err());
    }

    #[test]
    fn theorem1_plugged_values() {
        let inputs = BoundInputs {
            beta: 2,
            d: 4,
            gamma: 1.0,
            l2: 1.0,
            l_beta: 1.0,
            ..BoundInputs::default()
        };
        let p = theorem_params(Theorem::T1, &inputs).unwrap();
        assert_eq!((p.big_m, p.sigma_sq, p.zeta_sq, p.m), (192.0, 96.0, 64.0, 0.0));
    }

    #[test]
    fn theorem2_bias_vanishes_with_gamma() {
        let mut inputs = BoundInputs {
            beta: 3,
            d: 8,
            delta_tilde: 0.0,
            ..BoundInputs::default()
        };
        let mut last = f64::INFINITY;
        for g in [1e-1, 1e-2, 1e-3, 1e-4] {
            inputs.gamma = g;
            let z = theorem_params(Theorem::T2, &inputs).unwrap().zeta_sq;
            assert!(z < last);
            last = z;
        }
        assert!(last < 1e-10);
        assert_eq!(theorem_params(Theorem::T3, &inputs).unwrap().big_m, 27.0 * 8.0);
    }

    #[test]
    fn kernel_bias_example() {
        let inputs = BoundInputs {
            beta: 2,
            d: 8,
            gamma: 0.1,
            delta: 1e-4,
            l_beta: 1.0,
            ..BoundInputs::default()
        };
        let b = kernel_bias_bound(&inputs, 1.5, Case::Deterministic).unwrap();
        assert!(close(b, 1.5 * 8.0 * (0.1 + 1e-3)));
        let additive = kernel_bias_bound(&inputs, 1.5, Case::Additive).unwrap();
        assert!(close(additive, 1.5 * 8.0 * 0.1));
        assert!(kernel_bias_bound(&BoundInputs { gamma: 0.0, ..inputs }, 1.5, Case::Deterministic).is_err());
    }

    #[test]
    fn gaussian_bias_example() {
        let inputs = BoundInputs {
            d: 4,
            gamma: 0.1,
            l2: 1.0,
            ..BoundInputs::default()
        };
        let g = gaussian_bounds(&inputs, Case::Deterministic, 0.0).unwrap();
        assert!(close(g.bias_bound, 0.8));
        assert!(close(g.second_moment_bound, 3.0 * 0.01 * 64.0));
    }

    #[test]
    fn floors() {
        let k2 = BoundInputs {
            beta: 2,
            delta: 1e-4,
            ..BoundInputs::default()
        };
        assert!(close(error_floor(Approach::Kernel, &k2).unwrap(), 1e-4));
        let k3 = BoundInputs {
            beta: 3,
            delta: 1e-3,
            ..BoundInputs::default()
        };
        assert!(close(error_floor(Approach::Kernel, &k3).unwrap(), 1e-4));
        assert!(error_floor(Approach::Kernel, &BoundInputs { beta: 1, ..k3 }).is_err());
        assert!(error_floor(Approach::Gaussian, &BoundInputs { delta: 0.0, ..k3 }).is_err());
    }

    #[test]
    fn gaussian_optimum_value() {
        let inputs = BoundInputs {
            d: 9,
            delta: 1e-4,
            ..BoundInputs::default()
        };
        let g = optimal_gamma(Approach::Gaussian, &inputs).unwrap();
        assert!(close(g, (1e-4f64 / 9.0).sqrt()));
        assert!(close(floor_expression(Approach::Gaussian, &inputs, g), 2.0 * 1e-4 * 81.0));
    }

    #[test]
    fn kernel_gamma_matches_power_law_at_beta_two() {
        let inputs = BoundInputs {
            beta: 2,
            delta: 1e-6,
            ..BoundInputs::default()
        };
        assert!(close(optimal_gamma(Approach::Kernel, &inputs).unwrap(), 1e-3));
    }

    #[test]
    fn small_batch_rows() {
        let inputs = BoundInputs {
            beta: 3,
            d: 10,
            mu: 0.5,
            epsilon: 0.1,
            delta: 1e-3,
            ..BoundInputs::default()
        };
        let a = complexity_row(Case::Deterministic, Approach::Kernel, &BoundInputs { batch: 1, ..inputs }).unwrap();
        let b = complexity_row(Case::Deterministic, Approach::Kernel, &BoundInputs { batch: 200, ..inputs }).unwrap();
        assert_eq!(a.regime, BatchRegime::Small);
        assert_eq!(a.t_bound, b.t_bound);
        assert!(close(a.n_bound, 20.0));
        assert!(close(a.delta_max, 0.05 * 10f64.powf(-1.5)));
        let add = complexity_row(Case::Additive, Approach::Gaussian, &inputs).unwrap();
        assert!(close(add.delta_max, 0.005));
    }

    #[test]
    fn large_batch_rows() {
        let base = BoundInputs {
            beta: 2,
            d: 4,
            mu: 1.0,
            epsilon: 0.01,
            delta: 1e-3,
            delta_tilde: 1e-3,
            batch: 100,
            ..BoundInputs::default()
        };
        let det = complexity_row(Case::Deterministic, Approach::Kernel, &base).unwrap();
        let add = complexity_row(Case::Additive, Approach::Kernel, &base).unwrap();
        assert_eq!(det.regime, BatchRegime::Large);
        assert!(close(add.delta_max, det.delta_max * 10.0));
        assert!(close(det.delta_max, 0.01 / 16.0));
        // T = max{B/μ, d^4 Δ² / (ε² μ³)} for β = 2.
        assert!(close(det.t_bound, 100f64.max(256.0 * 1e-6 / 1e-4)));
        let imp = BoundInputs {
            mode: TableMode::Improved,
            ..base
        };
        let k = complexity_row(Case::Deterministic, Approach::Kernel, &imp).unwrap();
        assert!(close(k.delta_max, 0.01 / 4.0));
        let g = complexity_row(Case::Additive, Approach::Gaussian, &imp).unwrap();
        assert!(close(g.delta_max, 0.01 / 4.0 * 10.0));
        assert!(complexity_row(Case::Deterministic, Approach::Kernel, &BoundInputs { beta: 1, batch: 10, ..base }).is_err());
    }

    #[test]
    fn markov() {
        assert_eq!(markov_confidence(0.0, 0.1).unwrap(), 0.0);
        assert_eq!(markov_confidence(0.1, 0.1).unwrap(), 1.0);
        assert!(close(markov_confidence(0.01, 0.1).unwrap(), 0.1));
        assert!(markov_confidence(0.01, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn optimal_gamma_is_a_local_minimum(beta in 2u32..7, d in 1usize..64, le in -8.0f64..-1.0) {
            let inputs = BoundInputs { beta, d, delta: 10f64.powf(le), ..BoundInputs::default() };
            for approach in [Approach::Kernel, Approach::Gaussian] {
                let g = optimal_gamma(approach, &inputs).unwrap();
                let at = floor_expression(approach, &inputs, g);
                for s in [0.9, 1.1] {
                    prop_assert!(floor_expression(approach, &inputs, g * s) >= at);
                }
            }
        }

        #[test]
        fn kernel_floor_beats_gaussian(beta in 2u32..7, d in 1usize..64, le in -8.0f64..0.0) {
            let inputs = BoundInputs { beta, d, delta: 10f64.powf(le), ..BoundInputs::default() };
            let k = error_floor(Approach::Kernel, &inputs).unwrap();
            let g = error_floor(Approach::Gaussian, &inputs).unwrap();
            prop_assert!(k <= g * (1.0 + 1e-12));
        }

        #[test]
        fn bias_bounds_grow_with_delta(a in 0.0f64..1.0, b in 0.0f64..1.0, gamma in 1e-3f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let i = |delta| BoundInputs { beta: 3, d: 5, gamma, delta, ..BoundInputs::default() };
            prop_assert!(kernel_bias_bound(&i(lo), 2.0, Case::Mixed).unwrap() <= kernel_bias_bound(&i(hi), 2.0, Case::Mixed).unwrap());
            prop_assert!(
                gaussian_bounds(&i(lo), Case::Mixed, 1.0).unwrap().bias_bound
                    <= gaussian_bounds(&i(hi), Case::Mixed, 1.0).unwrap().bias_bound
            );
        }
    }
}
