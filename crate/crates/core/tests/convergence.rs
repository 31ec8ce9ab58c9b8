use zopl_core::analysis::estimate_floor;
use zopl_core::benchmark::{BenchmarkProblem, QuadraticObjective};
use zopl_core::estimators::EstimatorConfig;
use zopl_core::kernels::build_kernel;
use zopl_core::optimizer::{gradient_descent, zo_mb_sgd, OptimizerConfig};
use zopl_core::oracle::{Objective, ZeroOrderOracle};
use zopl_core::theory::markov_confidence;

#[test]
fn noise_free_benchmark_run_floors_far_below_the_start() {
    let problem = BenchmarkProblem::generate(16, 5, 7).unwrap();
    let x0 = problem.initial_point(1.0, 7);
    let oracle = ZeroOrderOracle::noise_free(&problem);
    let est = EstimatorConfig::kernel(1e-4, build_kernel(3).unwrap());
    let trace = zo_mb_sgd(&oracle, &est, &OptimizerConfig::new(0.01, 5000, 10, 7), &x0, 0.0).unwrap();
    let start = trace.initial_gap().unwrap();
    assert!(trace.final_gap().unwrap() <= 1e-4 * start);
    let floor = estimate_floor(&trace, 0.1).unwrap();
    assert!(floor.value < 1e-6 * start);
    assert_eq!(trace.total_calls(), 2 * 10 * 5000);
}

#[test]
fn pl_inequality_holds_along_a_gradient_descent_path() {
    let q = QuadraticObjective::diagonal(&[0.5, 0.9, 2.0], vec![0.0; 3]).unwrap();
    let mut x = vec![1.0, -2.0, 0.5];
    for _ in 0..30 {
        let g = q.gradient(&x).unwrap();
        let gsq: f64 = g.iter().map(|v| v * v).sum();
        assert!(gsq >= 2.0 * q.mu() * (q.value(&x) - q.f_star()) * (1.0 - 1e-12));
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= 0.3 * gi;
        }
    }
}

#[test]
fn markov_restates_expected_gap_as_confidence() {
    let q = QuadraticObjective::diagonal(&[1.0, 1.0], vec![0.0; 2]).unwrap();
    let trace = gradient_descent(&q, &OptimizerConfig::new(0.5, 10, 1, 0), &[1.0, 1.0], 0.0).unwrap();
    let gap = trace.final_gap().unwrap();
    assert!((gap - 1.0 * 0.25f64.powi(10)).abs() < 1e-18);
    let eps = 1e-3;
    assert_eq!(markov_confidence(gap, eps).unwrap(), gap / eps);
    assert_eq!(markov_confidence(1.0, eps).unwrap(), 1.0);
}
