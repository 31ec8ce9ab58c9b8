//! Implementations behind the command-line subcommands. Each returns the
//! text to print and the process exit code.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use zopl_core::benchmark::LocalConstants;
use zopl_core::estimators::{measure_stats, EstimatorFamily};
use zopl_core::kernels::{build_kernel, verify_moments};
use zopl_core::oracle::{Objective, OracleMode, ZeroOrderOracle};
use zopl_core::sampling::Substreams;
use zopl_core::theory::{
    complexity_row, error_floor, gaussian_bounds, kernel_bias_bound, kernel_second_moment_bound, lemma1_bound,
    lemma1_floor, optimal_gamma, theorem_params, Approach, BoundInputs, Case, OracleParams, TableMode, Theorem,
};

use crate::config::{DetSchemeKind, EtaSpec, Problem, RunConfig};
use crate::error::{HarnessError, Result};
use crate::scenario::{figure_preset, run_scenario, write_outputs, LabelRun, Scenario};

pub struct Outcome {
    pub text: String,
    pub code: i32,
}

/// Renders rows as left-aligned columns separated by two spaces.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{s:<w$}", w = widths[i]))
            .collect();
        let _ = writeln!(out, "{}", line.join("  ").trim_end());
    }
    out
}

fn sci(v: f64) -> String {
    format!("{v:.6e}")
}

pub fn validate_kernels(beta_max: u32, tol: f64) -> Result<Outcome> {
    if beta_max == 0 {
        return Err(HarnessError::Config("--beta-max must be >= 1".into()));
    }
    let mut rows = vec![vec![
        "beta".to_string(),
        "degree".into(),
        "max_residual".into(),
        "kappa_beta".into(),
        "kappa_beta_bound".into(),
        "kappa".into(),
        "kappa_bound".into(),
        "status".into(),
    ]];
    let mut failed = Vec::new();
    for beta in 1..=beta_max {
        let spec = build_kernel(beta)?;
        let rep = verify_moments(&spec, tol);
        let mut problems = Vec::new();
        if !rep.moments_ok {
            problems.push("moments");
        }
        if !rep.kappa_beta_ok {
            problems.push("kappa_beta");
        }
        if !rep.kappa_ok {
            problems.push("kappa");
        }
        let status = if problems.is_empty() {
            "ok".to_string()
        } else {
            failed.push(beta);
            format!("FAIL({})", problems.join(","))
        };
        rows.push(vec![
            beta.to_string(),
            spec.degree().to_string(),
            sci(rep.max_residual()),
            sci(rep.kappa_beta),
            rep.kappa_beta_bound.map_or("-".into(), sci),
            sci(rep.kappa),
            sci(rep.kappa_bound),
            status,
        ]);
    }
    let mut text = aligned(&rows);
    let code = if failed.is_empty() {
        0
    } else {
        let _ = writeln!(text, "certificate checks failed for beta = {failed:?}");
        3
    };
    Ok(Outcome { text, code })
}

fn summarize(results: &[(String, Result<LabelRun>)]) -> Outcome {
    let mut rows = vec![vec![
        "label".to_string(),
        "eta".into(),
        "floor".into(),
        "floor_std".into(),
        "final_gap".into(),
        "calls/rep".into(),
        "status".into(),
    ]];
    let mut code = 0;
    for (label, res) in results {
        match res {
            Ok(run) => rows.push(vec![
                label.clone(),
                sci(run.eta),
                sci(run.floor.value),
                sci(run.floor.dispersion),
                sci(*run.mean.mean.last().unwrap_or(&f64::NAN)),
                run.traces.first().map_or(0, |t| t.total_calls()).to_string(),
                if run.floor.plateaued { "ok" } else { "ok (not plateaued)" }.into(),
            ]),
            Err(e) => {
                code = code.max(e.exit_code());
                rows.push(vec![label.clone(), "-".into(), "-".into(), "-".into(), "-".into(), "-".into(), format!("error: {e}")]);
            }
        }
    }
    Outcome {
        text: aligned(&rows),
        code,
    }
}

pub fn run_and_write(s: &Scenario, out: &Path, plot: bool) -> Result<Outcome> {
    s.validate()?;
    let results = run_scenario(s);
    write_outputs(s, &results, out, plot)?;
    Ok(summarize(&results))
}

/// Caption step size of every figure, selectable with `--eta caption`.
pub const CAPTION_ETA: f64 = 0.01;

/// Runs a figure preset. `eta` is `None` for the preset's scaled step,
/// `caption` for the literal 0.01, or a number.
pub fn figure(
    id: u8,
    iters: Option<usize>,
    reps: Option<usize>,
    seed: Option<u64>,
    eta: Option<&str>,
    out: &Path,
    plot: bool,
) -> Result<Outcome> {
    let mut s = figure_preset(id, iters, reps, seed)?;
    if let Some(eta) = eta {
        let value = match eta {
            "caption" => CAPTION_ETA,
            v => v
                .parse::<f64>()
                .map_err(|_| HarnessError::Config(format!("--eta expects `caption` or a number, got `{v}`")))?,
        };
        for r in &mut s.runs {
            r.opt.eta = EtaSpec::Value(value);
        }
    }
    run_and_write(&s, out, plot)
}

pub fn run(config: &Path, out: &Path, plot: bool, seed: Option<u64>) -> Result<Outcome> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.opt.seed = seed;
    }
    let name = config
        .file_stem()
        .map_or("run".to_string(), |s| s.to_string_lossy().into_owned());
    let scenario = Scenario {
        name,
        figure_id: None,
        runs: vec![cfg],
    };
    run_and_write(&scenario, out, plot)
}

/// Parses `KEY=v1,v2,...`.
pub fn parse_vary(spec: &str) -> Result<(String, Vec<String>)> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("--vary expects KEY=v1,v2,..., got `{spec}`")))?;
    let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(HarnessError::Config("--vary needs at least one value".into()));
    }
    Ok((key.trim().to_string(), values))
}

pub fn sweep_scenario(base: &RunConfig, key: &str, values: &[String], name: &str) -> Result<Scenario> {
    let runs = values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            cfg.apply(key, v).map_err(HarnessError::Config)?;
            cfg.label = Some(format!("{key}={v}"));
            Ok(cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        name: name.to_string(),
        figure_id: None,
        runs,
    })
}

pub fn sweep(config: &Path, vary: &str, out: &Path, plot: bool) -> Result<Outcome> {
    let base = RunConfig::load(config)?;
    let (key, values) = parse_vary(vary)?;
    let s = sweep_scenario(&base, &key, &values, &format!("sweep over {key}"))?;
    run_and_write(&s, out, plot)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundsCase {
    T1,
    T2,
    T3,
    Lemma1,
    Table2,
    Table3,
}

impl BoundsCase {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "t1" => BoundsCase::T1,
            "t2" => BoundsCase::T2,
            "t3" => BoundsCase::T3,
            "lemma1" => BoundsCase::Lemma1,
            "table2" => BoundsCase::Table2,
            "table3" => BoundsCase::Table3,
            _ => return Err(HarnessError::Config(format!("unknown bounds case `{s}`"))),
        })
    }
}

/// Applies `key=val` assignments to bound inputs, oracle parameters,
/// the iteration count `n` and `grad_norm_sq`.
fn parse_bound_sets(sets: &[String]) -> Result<(BoundInputs, OracleParams, u64, f64)> {
    let mut inputs = BoundInputs::default();
    let mut params = OracleParams {
        big_m: 0.0,
        sigma_sq: 0.0,
        m: 0.0,
        zeta_sq: 0.0,
    };
    let (mut n, mut grad_sq) = (100u64, 0.0f64);
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("--set expects key=val, got `{s}`")))?;
        let (k, v) = (k.trim(), v.trim());
        let bad = || HarnessError::Config(format!("cannot parse `{v}` for `{k}`"));
        let f = || v.parse::<f64>().map_err(|_| bad());
        match k {
            "beta" => inputs.beta = v.parse().map_err(|_| bad())?,
            "d" => inputs.d = v.parse().map_err(|_| bad())?,
            "batch" | "B" => inputs.batch = v.parse().map_err(|_| bad())?,
            "l2" => inputs.l2 = f()?,
            "l_beta" => inputs.l_beta = f()?,
            "mu" => inputs.mu = f()?,
            "gamma" => inputs.gamma = f()?,
            "delta" => inputs.delta = f()?,
            "delta_tilde" => inputs.delta_tilde = f()?,
            "eta" => inputs.eta = f()?,
            "epsilon" | "eps" => inputs.epsilon = f()?,
            "f0_gap" => inputs.f0_gap = f()?,
            "mode" => {
                inputs.mode = match v {
                    "paper" => TableMode::Paper,
                    "improved" => TableMode::Improved,
                    _ => return Err(bad()),
                }
            }
            "big_m" | "M" => params.big_m = f()?,
            "sigma_sq" => params.sigma_sq = f()?,
            "m" => params.m = f()?,
            "zeta_sq" => params.zeta_sq = f()?,
            "n" | "N" => n = v.parse().map_err(|_| bad())?,
            "grad_norm_sq" => grad_sq = f()?,
            _ => return Err(HarnessError::Config(format!("unknown bounds key `{k}`"))),
        }
    }
    inputs.validate()?;
    Ok((inputs, params, n, grad_sq))
}

fn case_symbol(c: Case) -> &'static str {
    match c {
        Case::Deterministic => "1 f+delta",
        Case::TwoPoint => "2 f(x,xi)+delta",
        Case::Additive => "3 f+xi",
        Case::Mixed => "4 f+xi+delta",
    }
}

pub fn bounds(case: BoundsCase, sets: &[String], csv_out: Option<&Path>) -> Result<Outcome> {
    let (mut inputs, params, n, grad_sq) = parse_bound_sets(sets)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    match case {
        BoundsCase::T1 | BoundsCase::T2 | BoundsCase::T3 => {
            let (thm, c) = match case {
                BoundsCase::T1 => (Theorem::T1, Case::Deterministic),
                BoundsCase::T2 => (Theorem::T2, Case::Additive),
                _ => (Theorem::T3, Case::Mixed),
            };
            let p = theorem_params(thm, &inputs)?;
            rows.push(vec!["quantity".into(), "value".into()]);
            rows.push(vec!["M".into(), sci(p.big_m)]);
            rows.push(vec!["sigma_sq".into(), sci(p.sigma_sq)]);
            rows.push(vec!["m".into(), sci(p.m)]);
            rows.push(vec!["zeta_sq".into(), sci(p.zeta_sq)]);
            rows.push(vec!["eta_max".into(), sci(1.0 / ((p.big_m + 1.0) * inputs.l2))]);
            if inputs.gamma > 0.0 {
                let spec = build_kernel(inputs.beta)?;
                rows.push(vec!["kernel_bias_bound".into(), sci(kernel_bias_bound(&inputs, spec.kappa_beta(), c)?)]);
                rows.push(vec![
                    "kernel_second_moment_bound".into(),
                    sci(kernel_second_moment_bound(&inputs, spec.kappa(), c, grad_sq)?),
                ]);
                let g = gaussian_bounds(&inputs, c, grad_sq)?;
                rows.push(vec!["gaussian_bias_bound".into(), sci(g.bias_bound)]);
                rows.push(vec!["gaussian_second_moment_bound".into(), sci(g.second_moment_bound)]);
            }
            if inputs.delta > 0.0 {
                for (name, a) in [("kernel", Approach::Kernel), ("gaussian", Approach::Gaussian)] {
                    if a == Approach::Kernel && inputs.beta < 2 {
                        continue;
                    }
                    rows.push(vec![format!("error_floor_{name}"), sci(error_floor(a, &inputs)?)]);
                    rows.push(vec![format!("optimal_gamma_{name}"), sci(optimal_gamma(a, &inputs)?)]);
                }
            }
        }
        BoundsCase::Lemma1 => {
            rows.push(vec!["quantity".into(), "value".into()]);
            rows.push(vec![format!("lemma1_bound(N={n})"), sci(lemma1_bound(&inputs, &params, n)?)]);
            rows.push(vec!["lemma1_floor".into(), sci(lemma1_floor(&inputs, &params))]);
        }
        BoundsCase::Table2 | BoundsCase::Table3 => {
            if case == BoundsCase::Table3 {
                inputs.mode = TableMode::Improved;
            }
            rows.push(vec![
                "case".into(),
                "approach".into(),
                "regime".into(),
                "N".into(),
                "T".into(),
                "delta_max".into(),
            ]);
            for c in Case::ALL {
                for (name, a) in [("gaussian", Approach::Gaussian), ("kernel", Approach::Kernel)] {
                    match complexity_row(c, a, &inputs) {
                        Ok(r) => rows.push(vec![
                            case_symbol(c).into(),
                            name.into(),
                            format!("{:?}", r.regime).to_lowercase(),
                            sci(r.n_bound),
                            sci(r.t_bound),
                            sci(r.delta_max),
                        ]),
                        Err(e) => rows.push(vec![case_symbol(c).into(), name.into(), format!("error: {e}")]),
                    }
                }
            }
        }
    }
    if let Some(path) = csv_out {
        let mut w = csv::Writer::from_path(path)?;
        for r in &rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(Outcome {
        text: aligned(&rows),
        code: 0,
    })
}

/// Effective deterministic noise level of the configured oracle within
/// distance `gamma` of `x`: `Δ` for the hash scheme, and for mantissa
/// truncation `2^-bits` times an upper bound on `|f|` over the ball.
fn effective_delta(cfg: &RunConfig, problem: &Problem, x: &[f64], l2: f64) -> f64 {
    let o = &cfg.oracle;
    if o.mode == OracleMode::Additive {
        return 0.0;
    }
    match o.det_scheme {
        DetSchemeKind::Hash => o.delta,
        DetSchemeKind::Mantissa => {
            let g = cfg.estimator.gamma;
            let grad = problem.gradient(x).unwrap_or_default();
            let gn = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            let reach = match cfg.estimator.family {
                EstimatorFamily::GaussianForward => g * (cfg.problem.d as f64).sqrt() * 3.0,
                _ => g,
            };
            let f_max = problem.value(x).abs() + gn * reach + 0.5 * l2 * reach * reach;
            f_max * 2f64.powi(-(o.mantissa_bits as i32))
        }
    }
}

/// Local `L₂` and `L_β` near `x`: exact for quadratics, probed within the
/// estimator's reach for the benchmark.
fn local_constants(cfg: &RunConfig, problem: &Problem, x: &[f64]) -> Result<Option<LocalConstants>> {
    let g = cfg.estimator.gamma;
    match problem {
        Problem::Quadratic(_) if cfg.estimator.beta < 2 => Ok(None),
        Problem::Quadratic(q) => Ok(Some(LocalConstants {
            l2: q.l2(),
            l_beta: if cfg.estimator.beta == 2 { q.l2() / 2.0 } else { 0.0 },
            mu: q.mu(),
        })),
        Problem::Benchmark(b) => {
            let beta = cfg.estimator.beta;
            let reach = match cfg.estimator.family {
                EstimatorFamily::GaussianForward => g * ((cfg.problem.d as f64).sqrt() + 4.0),
                _ => g,
            };
            if !(1..=3).contains(&beta) && cfg.estimator.family == EstimatorFamily::KernelCentral {
                return Ok(None);
            }
            let probe_beta = if cfg.estimator.family == EstimatorFamily::KernelCentral { beta } else { 2 };
            Ok(Some(b.probe_constants(x, reach, reach, probe_beta, 2000, 1)?))
        }
    }
}

/// Monte-Carlo bias and second moment at the initial point against the
/// matching closed-form bounds.
pub fn bias_test(config: &Path, samples: usize) -> Result<Outcome> {
    let cfg = RunConfig::load(config)?;
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let oracle = ZeroOrderOracle::new(&problem, cfg.oracle_config()?)?;
    let est = cfg.estimator_config()?;
    let x = problem.initial_point(cfg.problem.x0_radius, cfg.problem.seed);
    let stats = measure_stats(&est, &oracle, &x, samples, &Substreams::new(cfg.opt.seed))?;
    let grad = problem
        .gradient(&x)
        .ok_or_else(|| HarnessError::Config("problem has no analytic gradient".into()))?;
    let grad_sq: f64 = grad.iter().map(|v| v * v).sum();
    let bias = stats.bias_norm(&grad);

    let mut rows = vec![
        vec!["quantity".to_string(), "empirical".into(), "3*CI".into(), "bound".into(), "status".into()],
    ];
    let mut code = 0;
    let consts = local_constants(&cfg, &problem, &x)?;
    let case = Case::from_index(cfg.oracle.mode.index()).expect("mode index in 1..=4");
    let bounds = match consts {
        Some(k) => {
            let inputs = BoundInputs {
                beta: cfg.estimator.beta,
                d: cfg.problem.d,
                l2: k.l2,
                l_beta: k.l_beta,
                gamma: cfg.estimator.gamma,
                delta: effective_delta(&cfg, &problem, &x, k.l2),
                delta_tilde: cfg.oracle.delta_tilde,
                ..BoundInputs::default()
            };
            match cfg.estimator.family {
                EstimatorFamily::KernelCentral => {
                    let spec = build_kernel(cfg.estimator.beta)?;
                    Some((
                        kernel_bias_bound(&inputs, spec.kappa_beta(), case)?,
                        kernel_second_moment_bound(&inputs, spec.kappa(), case, grad_sq)?,
                    ))
                }
                EstimatorFamily::GaussianForward => {
                    let g = gaussian_bounds(&inputs, case, grad_sq)?;
                    Some((g.bias_bound, g.second_moment_bound))
                }
                EstimatorFamily::L2Central => None,
            }
        }
        None => None,
    };
    let mut check = |name: &str, emp: f64, ci: f64, bound: Option<f64>| {
        let (b, status) = match bound {
            Some(b) if emp <= b + ci => (sci(b), "ok"),
            Some(b) => {
                code = 3;
                (sci(b), "EXCEEDS")
            }
            None => ("-".into(), "no bound"),
        };
        rows.push(vec![name.into(), sci(emp), sci(ci), b, status.into()]);
    };
    check("bias_norm", bias, stats.ci_halfwidth, bounds.map(|b| b.0));
    check("second_moment", stats.second_moment, stats.second_moment_ci, bounds.map(|b| b.1));
    let mut text = aligned(&rows);
    let _ = writeln!(text, "samples = {}, |grad f(x0)|^2 = {}", stats.n_samples, sci(grad_sq));
    Ok(Outcome { text, code })
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alignment_pads_columns() {
        let t = aligned(&[vec!["a".into(), "bbb".into()], vec!["cc".into(), "d".into()]]);
        assert_eq!(t, "a   bbb\ncc  d\n");
    }

    #[test]
    fn vary_parsing() {
        let (k, v) = parse_vary("estimator.gamma=0.1, 0.01").unwrap();
        assert_eq!(k, "estimator.gamma");
        assert_eq!(v, vec!["0.1", "0.01"]);
        assert!(parse_vary("estimator.gamma").is_err());
        assert!(parse_vary("estimator.gamma=").is_err());
    }

    #[test]
    fn bounds_t1_example() {
        let sets: Vec<String> = ["beta=2", "d=4", "gamma=1", "l2=1", "l_beta=1"].iter().map(|s| s.to_string()).collect();
        let out = bounds(BoundsCase::T1, &sets, None).unwrap();
        assert!(out.text.contains("1.920000e2"));
        assert!(bounds(BoundsCase::T1, &["nope=1".to_string()], None).is_err());
    }

    #[test]
    fn kernel_validation_reports_each_beta() {
        let out = validate_kernels(3, 1e-10).unwrap();
        assert_eq!(out.text.lines().count(), 5);
    }
}
