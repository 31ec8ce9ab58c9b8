//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, unknown or repeated keys
//! are errors. Every key has a default, so an empty file is a valid
//! configuration (noise-free benchmark, kernel estimator with `beta = 3`).

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use zopl_core::benchmark::{BenchmarkProblem, QuadraticObjective};
use zopl_core::estimators::{EstimatorConfig, EstimatorFamily};
use zopl_core::kernels::build_kernel;
use zopl_core::noise::{DetScheme, NoiseModel, StochDist};
use zopl_core::optimizer::OptimizerConfig;
use zopl_core::oracle::{Objective, ObjectiveConstants, OracleConfig, OracleMode, RealizationNoise};
use zopl_core::theory::{theorem_params, BoundInputs, Case, Theorem};

use crate::error::{HarnessError, Result};

pub const KEYS: &[&str] = &[
    "label",
    "problem.kind",
    "problem.d",
    "problem.p",
    "problem.seed",
    "problem.x0_radius",
    "problem.diag",
    "oracle.mode",
    "oracle.delta",
    "oracle.delta_tilde",
    "oracle.det_scheme",
    "oracle.mantissa_bits",
    "oracle.stoch_dist",
    "oracle.stoch_mean",
    "oracle.realization_std",
    "oracle.shared_realization",
    "estimator.family",
    "estimator.gamma",
    "estimator.beta",
    "opt.eta",
    "opt.iters",
    "opt.batch",
    "opt.seed",
    "opt.reps",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Benchmark,
    /// `½ x^T diag(λ) x`, minimiser at the origin.
    Quadratic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub d: usize,
    pub p: usize,
    pub seed: u64,
    pub x0_radius: f64,
    /// Eigenvalues for the quadratic problem; all ones when absent.
    pub diag: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetSchemeKind {
    Hash,
    Mantissa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StochKind {
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub mode: OracleMode,
    pub delta: f64,
    pub delta_tilde: f64,
    pub det_scheme: DetSchemeKind,
    pub mantissa_bits: u32,
    pub stoch_dist: StochKind,
    pub stoch_mean: f64,
    pub realization_std: f64,
    pub shared_realization: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSpec {
    pub family: EstimatorFamily,
    pub gamma: f64,
    pub beta: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaSpec {
    Value(f64),
    /// `1 / ((M + 1) L̂₂)` with `M` from the matching theorem and `L̂₂`
    /// a probe estimate. A heuristic, since `L̂₂` is estimated.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptSpec {
    pub eta: EtaSpec,
    pub iters: usize,
    pub batch: usize,
    pub seed: u64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub label: Option<String>,
    pub problem: ProblemSpec,
    pub oracle: OracleSpec,
    pub estimator: EstimatorSpec,
    pub opt: OptSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            label: None,
            problem: ProblemSpec {
                kind: ProblemKind::Benchmark,
                d: 16,
                p: 5,
                seed: 0,
                x0_radius: 1.0,
                diag: None,
            },
            oracle: OracleSpec {
                mode: OracleMode::Deterministic,
                delta: 0.0,
                delta_tilde: 0.0,
                det_scheme: DetSchemeKind::Hash,
                mantissa_bits: 52,
                stoch_dist: StochKind::Uniform,
                stoch_mean: 0.0,
                realization_std: 0.0,
                shared_realization: true,
            },
            estimator: EstimatorSpec {
                family: EstimatorFamily::KernelCentral,
                gamma: 0.01,
                beta: 3,
            },
            opt: OptSpec {
                eta: EtaSpec::Value(0.01),
                iters: 1000,
                batch: 1,
                seed: 0,
                reps: 1,
            },
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{key}`: cannot parse `{value}`"))
}

fn parse_bool(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("`{key}`: expected true or false, got `{value}`")),
    }
}

pub fn parse_mode(value: &str) -> Option<OracleMode> {
    match value {
        "1" | "deterministic" => Some(OracleMode::Deterministic),
        "2" | "two-point" | "two_point" => Some(OracleMode::TwoPoint),
        "3" | "additive" => Some(OracleMode::Additive),
        "4" | "mixed" => Some(OracleMode::Mixed),
        _ => None,
    }
}

pub fn parse_family(value: &str) -> Option<EstimatorFamily> {
    match value {
        "kernel" => Some(EstimatorFamily::KernelCentral),
        "gaussian" => Some(EstimatorFamily::GaussianForward),
        "l2" => Some(EstimatorFamily::L2Central),
        _ => None,
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HarnessError::ConfigLine { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            cfg.apply(key, value.trim()).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key. Used by the parser, `sweep --vary` and `--set`.
    pub fn apply(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "label" => self.label = Some(value.to_string()),
            "problem.kind" => {
                self.problem.kind = match value {
                    "benchmark" => ProblemKind::Benchmark,
                    "quadratic" => ProblemKind::Quadratic,
                    _ => return Err(format!("`{key}`: expected benchmark or quadratic")),
                }
            }
            "problem.d" => self.problem.d = num(key, value)?,
            "problem.p" => self.problem.p = num(key, value)?,
            "problem.seed" => self.problem.seed = num(key, value)?,
            "problem.x0_radius" => self.problem.x0_radius = num(key, value)?,
            "problem.diag" => {
                let diag = value
                    .split(',')
                    .map(|v| num::<f64>(key, v.trim()))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                self.problem.diag = Some(diag);
            }
            "oracle.mode" => {
                self.oracle.mode = parse_mode(value).ok_or_else(|| format!("`{key}`: expected 1..4 or a mode name"))?
            }
            "oracle.delta" => self.oracle.delta = num(key, value)?,
            "oracle.delta_tilde" => self.oracle.delta_tilde = num(key, value)?,
            "oracle.det_scheme" => {
                self.oracle.det_scheme = match value {
                    "hash" | "hash_cosine" => DetSchemeKind::Hash,
                    "mantissa" => DetSchemeKind::Mantissa,
                    _ => return Err(format!("`{key}`: expected hash or mantissa")),
                }
            }
            "oracle.mantissa_bits" => self.oracle.mantissa_bits = num(key, value)?,
            "oracle.stoch_dist" => {
                self.oracle.stoch_dist = match value {
                    "uniform" => StochKind::Uniform,
                    "gaussian" => StochKind::Gaussian,
                    _ => return Err(format!("`{key}`: expected uniform or gaussian")),
                }
            }
            "oracle.stoch_mean" => self.oracle.stoch_mean = num(key, value)?,
            "oracle.realization_std" => self.oracle.realization_std = num(key, value)?,
            "oracle.shared_realization" => self.oracle.shared_realization = parse_bool(key, value)?,
            "estimator.family" => {
                self.estimator.family =
                    parse_family(value).ok_or_else(|| format!("`{key}`: expected kernel, gaussian or l2"))?
            }
            "estimator.gamma" => self.estimator.gamma = num(key, value)?,
            "estimator.beta" => self.estimator.beta = num(key, value)?,
            "opt.eta" => {
                self.opt.eta = if value == "auto" {
                    EtaSpec::Auto
                } else {
                    EtaSpec::Value(num(key, value)?)
                }
            }
            "opt.iters" => self.opt.iters = num(key, value)?,
            "opt.batch" => self.opt.batch = num(key, value)?,
            "opt.seed" => self.opt.seed = num(key, value)?,
            "opt.reps" => self.opt.reps = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Serialises every key; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if let Some(label) = &self.label {
            put("label", label.clone());
        }
        let p = &self.problem;
        put(
            "problem.kind",
            match p.kind {
                ProblemKind::Benchmark => "benchmark",
                ProblemKind::Quadratic => "quadratic",
            }
            .into(),
        );
        put("problem.d", p.d.to_string());
        put("problem.p", p.p.to_string());
        put("problem.seed", p.seed.to_string());
        put("problem.x0_radius", p.x0_radius.to_string());
        if let Some(diag) = &p.diag {
            put(
                "problem.diag",
                diag.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            );
        }
        let o = &self.oracle;
        put("oracle.mode", o.mode.index().to_string());
        put("oracle.delta", o.delta.to_string());
        put("oracle.delta_tilde", o.delta_tilde.to_string());
        put(
            "oracle.det_scheme",
            match o.det_scheme {
                DetSchemeKind::Hash => "hash",
                DetSchemeKind::Mantissa => "mantissa",
            }
            .into(),
        );
        put("oracle.mantissa_bits", o.mantissa_bits.to_string());
        put(
            "oracle.stoch_dist",
            match o.stoch_dist {
                StochKind::Uniform => "uniform",
                StochKind::Gaussian => "gaussian",
            }
            .into(),
        );
        put("oracle.stoch_mean", o.stoch_mean.to_string());
        put("oracle.realization_std", o.realization_std.to_string());
        put("oracle.shared_realization", o.shared_realization.to_string());
        let e = &self.estimator;
        put("estimator.family", e.family.name().into());
        put("estimator.gamma", e.gamma.to_string());
        put("estimator.beta", e.beta.to_string());
        let t = &self.opt;
        put(
            "opt.eta",
            match t.eta {
                EtaSpec::Value(v) => v.to_string(),
                EtaSpec::Auto => "auto".into(),
            },
        );
        put("opt.iters", t.iters.to_string());
        put("opt.batch", t.batch.to_string());
        put("opt.seed", t.seed.to_string());
        put("opt.reps", t.reps.to_string());
        s
    }

    /// A short label derived from the estimator and batch when none is set.
    pub fn display_label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let e = &self.estimator;
        match e.family {
            EstimatorFamily::KernelCentral => format!("kernel_b{}_g{}_B{}", e.beta, e.gamma, self.opt.batch),
            other => format!("{}_g{}_B{}", other.name(), e.gamma, self.opt.batch),
        }
    }

    pub fn oracle_config(&self) -> Result<OracleConfig> {
        let o = &self.oracle;
        let det = match o.det_scheme {
            DetSchemeKind::Hash => NoiseModel::hash_cosine(o.delta),
            DetSchemeKind::Mantissa => {
                if o.delta != 0.0 {
                    return Err(HarnessError::Config(
                        "oracle.delta is unused by the mantissa scheme; set oracle.mantissa_bits".into(),
                    ));
                }
                NoiseModel::DeterministicBounded {
                    delta: 0.0,
                    scheme: DetScheme::Mantissa { bits: o.mantissa_bits },
                }
            }
        };
        let stoch = NoiseModel::StochasticAdditive {
            delta_tilde: o.delta_tilde,
            dist: match o.stoch_dist {
                StochKind::Uniform => StochDist::Uniform { mean: o.stoch_mean },
                StochKind::Gaussian => StochDist::GaussianTruncated,
            },
        };
        let uses_det = matches!(o.mode, OracleMode::Deterministic | OracleMode::TwoPoint | OracleMode::Mixed);
        let uses_stoch = matches!(o.mode, OracleMode::Additive | OracleMode::Mixed);
        if !uses_det && o.delta != 0.0 {
            return Err(HarnessError::Config("oracle.delta has no effect in mode 3".into()));
        }
        if !uses_stoch && (o.delta_tilde != 0.0 || o.stoch_mean != 0.0) {
            return Err(HarnessError::Config(
                "oracle.delta_tilde and oracle.stoch_mean only apply to modes 3 and 4".into(),
            ));
        }
        if o.mode != OracleMode::TwoPoint && o.realization_std != 0.0 {
            return Err(HarnessError::Config("oracle.realization_std only applies to mode 2".into()));
        }
        let cfg = OracleConfig {
            mode: o.mode,
            det_noise: if uses_det { det } else { NoiseModel::None },
            stoch_noise: if uses_stoch { stoch } else { NoiseModel::None },
            realization: RealizationNoise {
                std: o.realization_std,
                shared: o.shared_realization,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn estimator_config(&self) -> Result<EstimatorConfig> {
        let e = &self.estimator;
        let cfg = match e.family {
            EstimatorFamily::KernelCentral => EstimatorConfig::kernel(e.gamma, build_kernel(e.beta)?),
            EstimatorFamily::GaussianForward => EstimatorConfig::gaussian(e.gamma),
            EstimatorFamily::L2Central => EstimatorConfig::l2(e.gamma),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn build_problem(&self) -> Result<Problem> {
        let p = &self.problem;
        if !(p.x0_radius >= 0.0 && p.x0_radius.is_finite()) {
            return Err(HarnessError::Config("problem.x0_radius must be finite and >= 0".into()));
        }
        match p.kind {
            ProblemKind::Benchmark => Ok(Problem::Benchmark(BenchmarkProblem::generate(p.d, p.p, p.seed)?)),
            ProblemKind::Quadratic => {
                let diag = p.diag.clone().unwrap_or_else(|| vec![1.0; p.d]);
                if diag.len() != p.d {
                    return Err(HarnessError::Config(format!(
                        "problem.diag has {} entries but problem.d = {}",
                        diag.len(),
                        p.d
                    )));
                }
                Ok(Problem::Quadratic(QuadraticObjective::diagonal(&diag, vec![0.0; p.d])?))
            }
        }
    }

    /// Step size, resolving `auto` against the problem.
    pub fn resolve_eta(&self, problem: &Problem) -> Result<f64> {
        match self.opt.eta {
            EtaSpec::Value(v) => Ok(v),
            EtaSpec::Auto => {
                let l2 = problem.l2_estimate(self.problem.x0_radius)?;
                let case = Case::from_index(self.oracle.mode.index()).expect("mode index in 1..=4");
                let inputs = BoundInputs {
                    beta: self.estimator.beta.max(1),
                    d: self.problem.d,
                    l2,
                    gamma: self.estimator.gamma,
                    ..BoundInputs::default()
                };
                let params = theorem_params(Theorem::for_case(case), &inputs)?;
                Ok(1.0 / ((params.big_m + 1.0) * l2))
            }
        }
    }

    pub fn optimizer_config(&self, eta: f64, seed: u64) -> Result<OptimizerConfig> {
        let cfg = OptimizerConfig::new(eta, self.opt.iters, self.opt.batch, seed);
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks that every component can be built.
    pub fn validate(&self) -> Result<()> {
        if self.opt.reps == 0 {
            return Err(HarnessError::Config("opt.reps must be >= 1".into()));
        }
        let problem = self.build_problem()?;
        self.oracle_config()?;
        self.estimator_config()?;
        let eta = self.resolve_eta(&problem)?;
        self.optimizer_config(eta, self.opt.seed)?;
        Ok(())
    }
}

/// A built test problem.
#[derive(Debug, Clone)]
pub enum Problem {
    Benchmark(BenchmarkProblem),
    Quadratic(QuadraticObjective),
}

impl Problem {
    pub fn x_star(&self) -> Vec<f64> {
        match self {
            Problem::Benchmark(b) => b.x_star().to_vec(),
            Problem::Quadratic(q) => q.x_star().to_vec(),
        }
    }

    pub fn f_star(&self) -> f64 {
        match self {
            Problem::Benchmark(_) => 0.0,
            Problem::Quadratic(q) => q.f_star(),
        }
    }

    /// `x_star + radius · u`, `u` uniform on the sphere, drawn from `seed`.
    pub fn initial_point(&self, radius: f64, seed: u64) -> Vec<f64> {
        match self {
            Problem::Benchmark(b) => b.initial_point(radius, seed),
            Problem::Quadratic(q) => q.initial_point(radius, seed),
        }
    }

    /// Exact `L₂` for quadratics, a probe estimate around `x_star` otherwise.
    pub fn l2_estimate(&self, radius: f64) -> Result<f64> {
        match self {
            Problem::Benchmark(b) => Ok(b.probe_constants(b.x_star(), radius, 1e-3, 2, 200, 0)?.l2),
            Problem::Quadratic(q) => Ok(q.l2()),
        }
    }
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        match self {
            Problem::Benchmark(b) => b.dim(),
            Problem::Quadratic(q) => q.dim(),
        }
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self {
            Problem::Benchmark(b) => b.value(x),
            Problem::Quadratic(q) => q.value(x),
        }
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self {
            Problem::Benchmark(b) => b.gradient(x),
            Problem::Quadratic(q) => q.gradient(x),
        }
    }

    fn constants(&self) -> ObjectiveConstants {
        match self {
            Problem::Benchmark(b) => b.constants(),
            Problem::Quadratic(q) => q.constants(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(RunConfig::parse("# nothing\n\n").unwrap(), RunConfig::default());
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_all_sections() {
        let text = "problem.d = 8\nproblem.p=3 # trailing comment\noracle.mode = 4\noracle.delta = 1e-3\n\
                    oracle.delta_tilde = 2e-3\nestimator.family = gaussian\nopt.eta = auto\nopt.reps = 2\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.problem.d, 8);
        assert_eq!(cfg.oracle.mode, OracleMode::Mixed);
        assert_eq!(cfg.estimator.family, EstimatorFamily::GaussianForward);
        assert_eq!(cfg.opt.eta, EtaSpec::Auto);
        cfg.validate().unwrap();
    }

    #[test]
    fn errors_carry_line_numbers() {
        match RunConfig::parse("problem.d = 4\nproblem.q = 1\n") {
            Err(HarnessError::ConfigLine { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("problem.q"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(RunConfig::parse("problem.d = x").is_err());
        assert!(RunConfig::parse("problem.d").is_err());
        assert!(RunConfig::parse("opt.iters = 1\nopt.iters = 2").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig {
            label: Some("x".into()),
            ..RunConfig::default()
        };
        cfg.problem.kind = ProblemKind::Quadratic;
        cfg.problem.diag = Some(vec![0.5, 1.5]);
        cfg.problem.d = 2;
        cfg.oracle.mode = OracleMode::Additive;
        cfg.oracle.delta_tilde = 0.25;
        cfg.opt.eta = EtaSpec::Auto;
        assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn mismatched_noise_is_rejected() {
        let cfg = RunConfig::parse("oracle.mode = 1\noracle.delta_tilde = 0.1").unwrap();
        assert!(cfg.oracle_config().is_err());
        let cfg = RunConfig::parse("oracle.mode = 3\noracle.delta = 0.1").unwrap();
        assert!(cfg.oracle_config().is_err());
        let cfg = RunConfig::parse("oracle.det_scheme = mantissa\noracle.delta = 0.1").unwrap();
        assert!(cfg.oracle_config().is_err());
        let cfg = RunConfig::parse("problem.kind = quadratic\nproblem.d = 3\nproblem.diag = 1,2").unwrap();
        assert!(cfg.build_problem().is_err());
    }
}
