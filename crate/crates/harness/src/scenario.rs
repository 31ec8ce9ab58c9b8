//! Scenarios: groups of labelled runs, their repetitions, and figure presets.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use zopl_core::analysis::{estimate_floor_from, FloorEstimate, DEFAULT_TAIL_FRACTION, MIN_TRACE_POINTS};
use zopl_core::estimators::EstimatorFamily;
use zopl_core::optimizer::{mean_trace, rep_seed, zo_mb_sgd, MeanTrace, RunTrace, TraceRecord};
use zopl_core::oracle::{OracleMode, ZeroOrderOracle};

use crate::config::{DetSchemeKind, EtaSpec, RunConfig};
use crate::error::{HarnessError, Result};
use crate::output::{file_stem, write_summary, write_trace, SummaryRow};
use crate::plot::{render_svg, Series};

pub const DEFAULT_FIGURE_ITERS: usize = 10_000;
pub const DEFAULT_FIGURE_REPS: usize = 3;
/// Mantissa bits kept by the deterministic noise in the figure presets.
pub const FIGURE_MANTISSA_BITS: u32 = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub figure_id: Option<u8>,
    pub runs: Vec<RunConfig>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            return Err(HarnessError::Config("scenario has no runs".into()));
        }
        let mut labels: Vec<String> = self.runs.iter().map(RunConfig::display_label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Config("run labels must be unique".into()));
        }
        self.runs.iter().try_for_each(RunConfig::validate)
    }
}

/// All repetitions of one labelled run.
#[derive(Debug, Clone)]
pub struct LabelRun {
    pub label: String,
    pub config: RunConfig,
    pub eta: f64,
    pub seeds: Vec<u64>,
    pub traces: Vec<RunTrace>,
    pub mean: MeanTrace,
    /// Floor of the mean curve.
    pub floor: FloorEstimate,
    pub rep_floors: Vec<FloorEstimate>,
}

impl LabelRun {
    pub fn mean_records(&self) -> Vec<TraceRecord> {
        mean_records(&self.mean)
    }
}

pub fn mean_records(mean: &MeanTrace) -> Vec<TraceRecord> {
    (0..mean.iters.len())
        .map(|i| TraceRecord {
            iter: mean.iters[i],
            f_gap: mean.mean[i],
            oracle_calls: mean.oracle_calls[i],
            grad_norm: None,
        })
        .collect()
}

/// Floor over the default tail; traces shorter than the estimator needs
/// fall back to their final value with zero dispersion, flagged as not
/// plateaued.
pub fn floor_of(gaps: &[f64]) -> FloorEstimate {
    if gaps.len() >= MIN_TRACE_POINTS {
        if let Ok(f) = estimate_floor_from(gaps, DEFAULT_TAIL_FRACTION) {
            return f;
        }
    }
    FloorEstimate {
        value: gaps.last().copied().unwrap_or(f64::NAN).max(0.0),
        tail_fraction: DEFAULT_TAIL_FRACTION,
        dispersion: 0.0,
        tail_points: usize::from(!gaps.is_empty()),
        plateaued: false,
    }
}

/// Runs every repetition of one configuration. Repetition `r` uses seed
/// `opt.seed ^ r` and its own oracle, so call counts are per repetition.
pub fn run_config(cfg: &RunConfig) -> Result<LabelRun> {
    cfg.validate()?;
    let problem = cfg.build_problem()?;
    let oracle_cfg = cfg.oracle_config()?;
    let est = cfg.estimator_config()?;
    let eta = cfg.resolve_eta(&problem)?;
    let x0 = problem.initial_point(cfg.problem.x0_radius, cfg.problem.seed);
    let f_star = problem.f_star();
    let seeds: Vec<u64> = (0..cfg.opt.reps).map(|r| rep_seed(cfg.opt.seed, r)).collect();
    let traces = seeds
        .par_iter()
        .map(|&seed| {
            let oracle = ZeroOrderOracle::new(&problem, oracle_cfg)?;
            let opt = cfg.optimizer_config(eta, seed)?;
            Ok(zo_mb_sgd(&oracle, &est, &opt, &x0, f_star)?)
        })
        .collect::<Result<Vec<RunTrace>>>()?;
    let mean = mean_trace(&traces)?;
    let floor = floor_of(&mean.mean);
    let rep_floors = traces.iter().map(|t| floor_of(&t.gaps())).collect();
    Ok(LabelRun {
        label: cfg.display_label(),
        config: cfg.clone(),
        eta,
        seeds,
        traces,
        mean,
        floor,
        rep_floors,
    })
}

/// Runs all labels concurrently. A failing label does not stop the others.
pub fn run_scenario(s: &Scenario) -> Vec<(String, Result<LabelRun>)> {
    s.runs
        .par_iter()
        .map(|cfg| (cfg.display_label(), run_config(cfg)))
        .collect()
}

pub fn summary_rows(run: &LabelRun) -> Vec<SummaryRow> {
    run.traces
        .iter()
        .zip(&run.seeds)
        .zip(&run.rep_floors)
        .map(|((t, seed), f)| SummaryRow {
            label: run.label.clone(),
            seed: *seed,
            floor: f.value,
            floor_std: f.dispersion,
            final_gap: t.final_gap().unwrap_or(f64::NAN),
            total_calls: t.total_calls(),
        })
        .collect()
}

/// Writes `<label>.csv` (mean curve) per successful label, `summary.csv`
/// (one row per repetition) and, when `plot` is set, `plot.svg`.
pub fn write_outputs(s: &Scenario, results: &[(String, Result<LabelRun>)], out: &Path, plot: bool) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    for (label, res) in results {
        if let Ok(run) = res {
            write_trace(&out.join(format!("{}.csv", file_stem(label))), &run.mean_records())?;
            rows.extend(summary_rows(run));
            series.push(Series {
                label: label.as_str(),
                points: run
                    .mean
                    .iters
                    .iter()
                    .zip(&run.mean.mean)
                    .map(|(i, g)| (*i as f64, *g))
                    .collect(),
            });
        }
    }
    write_summary(&out.join("summary.csv"), &rows)?;
    if plot {
        let title = match s.figure_id {
            Some(id) => format!("Figure {id}: {} (qualitative reproduction)", s.name),
            None => s.name.clone(),
        };
        let path = out.join("plot.svg");
        fs::write(&path, render_svg(&title, &series)).map_err(|e| HarnessError::io(&path, e))?;
    }
    Ok(())
}

/// Step size of the figure presets: 0.01 on the `d = 16, p = 5` problem,
/// scaled down by the growth of `L₂ ≈ 2(√d + √p)²` for standard-normal
/// `C, D` and by the estimator's factor `d`. A fixed 0.01 leaves the larger
/// problems unstable (`η L₂ > 2` already for exact gradients at `d = 128`).
pub fn figure_eta(d: usize, p: usize) -> f64 {
    let spread = |d: usize, p: usize| {
        let s = (d as f64).sqrt() + (p as f64).sqrt();
        s * s
    };
    0.01 * (spread(16, 5) / spread(d, p)) * (16.0 / d as f64)
}

fn base_figure_config(d: usize, p: usize, iters: usize, reps: usize, seed: u64) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.problem.d = d;
    cfg.problem.p = p;
    cfg.problem.seed = seed;
    cfg.oracle.mode = OracleMode::Deterministic;
    cfg.oracle.det_scheme = DetSchemeKind::Mantissa;
    cfg.oracle.mantissa_bits = FIGURE_MANTISSA_BITS;
    cfg.opt.eta = EtaSpec::Value(figure_eta(d, p));
    cfg.opt.iters = iters;
    cfg.opt.reps = reps;
    cfg.opt.seed = seed;
    cfg
}

fn with_estimator(base: &RunConfig, family: EstimatorFamily, beta: u32, gamma: f64, batch: usize, label: String) -> RunConfig {
    let mut cfg = base.clone();
    cfg.estimator.family = family;
    cfg.estimator.beta = beta;
    cfg.estimator.gamma = gamma;
    cfg.opt.batch = batch;
    cfg.label = Some(label);
    cfg
}

/// The four figure scenarios. `iters`, `reps` and `seed` default to
/// 10⁴, 3 and 0.
pub fn figure_preset(id: u8, iters: Option<usize>, reps: Option<usize>, seed: Option<u64>) -> Result<Scenario> {
    let iters = iters.unwrap_or(DEFAULT_FIGURE_ITERS);
    let reps = reps.unwrap_or(DEFAULT_FIGURE_REPS);
    let seed = seed.unwrap_or(0);
    use EstimatorFamily::{GaussianForward, KernelCentral, L2Central};
    let (name, runs) = match id {
        1 => {
            let base = base_figure_config(16, 5, iters, reps, seed);
            let mut runs = Vec::new();
            for b in [1, 10] {
                runs.push(with_estimator(&base, KernelCentral, 3, 0.01, b, format!("kernel_b3_B{b}")));
                runs.push(with_estimator(&base, GaussianForward, 3, 0.01, b, format!("gaussian_B{b}")));
            }
            ("kernel vs Gaussian, d=16, p=5", runs)
        }
        2 => {
            let base = base_figure_config(128, 16, iters, reps, seed);
            let mut runs = Vec::new();
            for g in [0.1, 0.001] {
                runs.push(with_estimator(&base, KernelCentral, 3, g, 2, format!("kernel_b3_g{g}")));
                runs.push(with_estimator(&base, GaussianForward, 3, g, 2, format!("gaussian_g{g}")));
            }
            ("effect of gamma, d=128, p=16", runs)
        }
        3 => {
            let base = base_figure_config(256, 32, iters, reps, seed);
            let runs = vec![
                with_estimator(&base, KernelCentral, 3, 0.1, 10, "kernel_b3".into()),
                with_estimator(&base, KernelCentral, 5, 0.1, 10, "kernel_b5".into()),
                with_estimator(&base, L2Central, 3, 0.1, 10, "l2".into()),
            ];
            ("effect of beta, d=256, p=32", runs)
        }
        4 => {
            let mut runs = Vec::new();
            for d in [128, 256, 512] {
                for p in [8, 16, 32, 64, 128] {
                    let base = base_figure_config(d, p, iters, reps, seed);
                    for fam in [KernelCentral, GaussianForward, L2Central] {
                        let label = format!("d{d}_p{p}_{}", fam.name());
                        runs.push(with_estimator(&base, fam, 3, 0.1, 10, label));
                    }
                }
            }
            ("effect of d and p", runs)
        }
        _ => return Err(HarnessError::Config(format!("unknown figure {id}; expected 1..=4"))),
    };
    Ok(Scenario {
        name: name.into(),
        figure_id: Some(id),
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_pure_and_valid() {
        for id in 1..=4 {
            let a = figure_preset(id, Some(100), Some(1), Some(3)).unwrap();
            assert_eq!(a, figure_preset(id, Some(100), Some(1), Some(3)).unwrap());
            a.validate().unwrap();
        }
        assert!(figure_preset(5, None, None, None).is_err());
    }

    #[test]
    fn figure_one_layout() {
        let s = figure_preset(1, None, None, None).unwrap();
        assert_eq!(s.runs.len(), 4);
        for r in &s.runs {
            assert_eq!((r.problem.d, r.problem.p, r.estimator.gamma), (16, 5, 0.01));
            assert_eq!(r.opt.eta, EtaSpec::Value(0.01));
        }
        let batches: Vec<usize> = s.runs.iter().map(|r| r.opt.batch).collect();
        assert_eq!(batches, vec![1, 1, 10, 10]);
        assert_eq!(figure_preset(4, None, None, None).unwrap().runs.len(), 45);
        assert!((figure_eta(128, 16) - 2.07e-4).abs() < 1e-6);
    }

    #[test]
    fn repetitions_use_xor_seeds() {
        let mut cfg = RunConfig::default();
        cfg.opt.iters = 120;
        cfg.opt.reps = 3;
        cfg.opt.seed = 5;
        let run = run_config(&cfg).unwrap();
        assert_eq!(run.seeds, vec![5, 4, 7]);
        assert_eq!(run.traces.len(), 3);
        assert_eq!(run.mean.iters.len(), 121);
        let again = run_config(&cfg).unwrap();
        assert_eq!(run.traces, again.traces);
    }

    #[test]
    fn short_traces_fall_back_to_final_value() {
        let f = floor_of(&[3.0, 2.0, 1.0]);
        assert_eq!(f.value, 1.0);
        assert!(!f.plateaued);
    }
}
