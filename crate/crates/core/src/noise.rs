//! Noise models attached to zero-order oracles.
//!
//! Deterministic noise `δ(x)` is a pure function of the query point with
//! `|δ(x)| <= Δ`. Stochastic noise `ξ` is drawn fresh per query with
//! `E[ξ^2] <= Δ̃^2`; it need not be zero-mean.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// How a deterministic perturbation is realised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetScheme {
    /// `Δ cos(h(x))` with `h` a stable 64-bit hash of the bit pattern of `x`
    /// mapped onto `[0, 2π)`.
    HashCosine,
    /// Keep only the leading `bits` mantissa bits of `f(x)` (truncation toward
    /// zero). The induced error satisfies `|δ(x)| <= 2^-bits |f(x)|`.
    Mantissa { bits: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StochDist {
    /// `mean + U[-a, a]` with `a` chosen so that `E[ξ^2] = Δ̃^2`; requires `|mean| <= Δ̃`.
    Uniform { mean: f64 },
    /// Zero-mean normal with standard deviation `Δ̃`, truncated to `±3Δ̃`.
    GaussianTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum NoiseModel {
    #[default]
    None,
    DeterministicBounded { delta: f64, scheme: DetScheme },
    StochasticAdditive { delta_tilde: f64, dist: StochDist },
}

impl NoiseModel {
    pub fn hash_cosine(delta: f64) -> Self {
        NoiseModel::DeterministicBounded {
            delta,
            scheme: DetScheme::HashCosine,
        }
    }

    pub fn mantissa(bits: u32) -> Self {
        NoiseModel::DeterministicBounded {
            delta: 0.0,
            scheme: DetScheme::Mantissa { bits },
        }
    }

    pub fn uniform(delta_tilde: f64) -> Self {
        NoiseModel::StochasticAdditive {
            delta_tilde,
            dist: StochDist::Uniform { mean: 0.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::DeterministicBounded { delta, scheme } => {
                if !(delta >= 0.0 && delta.is_finite()) {
                    return Err(Error::param("oracle.delta", "must be finite and >= 0"));
                }
                if let DetScheme::Mantissa { bits } = scheme {
                    if bits > 52 {
                        return Err(Error::param("oracle.mantissa_bits", "must lie in 0..=52"));
                    }
                }
                Ok(())
            }
            NoiseModel::StochasticAdditive { delta_tilde, dist } => {
                if !(delta_tilde >= 0.0 && delta_tilde.is_finite()) {
                    return Err(Error::param("oracle.delta_tilde", "must be finite and >= 0"));
                }
                if let StochDist::Uniform { mean } = dist {
                    if !(libm::fabs(mean) <= delta_tilde) {
                        return Err(Error::param(
                            "oracle.stoch_mean",
                            "mean offset must satisfy |mean| <= delta_tilde",
                        ));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, NoiseModel::None | NoiseModel::DeterministicBounded { .. })
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, NoiseModel::None | NoiseModel::StochasticAdditive { .. })
    }

    /// `δ(x)` for a deterministic model, `0` otherwise.
    pub fn deterministic_part(&self, x: &[f64], value: f64) -> f64 {
        match *self {
            NoiseModel::DeterministicBounded { delta, scheme } => det_noise_eval(scheme, x, delta, value),
            _ => 0.0,
        }
    }

    /// A fresh draw of `ξ` for a stochastic model, `0` otherwise.
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::StochasticAdditive { delta_tilde, dist } => dist.sample(delta_tilde, rng),
            _ => 0.0,
        }
    }
}

impl StochDist {
    pub fn sample<R: RngCore + ?Sized>(&self, delta_tilde: f64, rng: &mut R) -> f64 {
        if delta_tilde == 0.0 {
            return 0.0;
        }
        match *self {
            StochDist::Uniform { mean } => {
                let half_width = libm::sqrt(3.0 * (delta_tilde * delta_tilde - mean * mean).max(0.0));
                let u: f64 = rng.random();
                mean + half_width * (2.0 * u - 1.0)
            }
            StochDist::GaussianTruncated => loop {
                let z: f64 = rng.sample(StandardNormal);
                if libm::fabs(z) <= 3.0 {
                    break delta_tilde * z;
                }
            },
        }
    }
}

/// FNV-1a over the little-endian bit patterns of `x`, finished with a
/// splitmix64 avalanche. Stable across platforms and processes.
pub fn stable_hash(x: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in x {
        for byte in v.to_bits().to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    splitmix64(h)
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Clears all but the leading `bits` bits of the 52-bit mantissa.
pub fn truncate_mantissa(value: f64, bits: u32) -> f64 {
    if !value.is_finite() || bits >= 52 {
        return value;
    }
    let mask = !((1u64 << (52 - bits)) - 1);
    f64::from_bits(value.to_bits() & mask)
}

/// The deterministic perturbation `δ(x)` added to the exact value `value = f(x)`.
///
/// For [`DetScheme::HashCosine`] the result depends only on `x` and `delta`; for
/// [`DetScheme::Mantissa`] it is the truncation error of `value` and `delta` is unused.
pub fn det_noise_eval(scheme: DetScheme, x: &[f64], delta: f64, value: f64) -> f64 {
    match scheme {
        DetScheme::HashCosine => {
            if delta == 0.0 {
                return 0.0;
            }
            let unit = (stable_hash(x) >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            delta * libm::cos(core::f64::consts::TAU * unit)
        }
        DetScheme::Mantissa { bits } => truncate_mantissa(value, bits) - value,
    }
}
