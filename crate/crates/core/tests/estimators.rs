use zopl_core::benchmark::QuadraticObjective;
use zopl_core::estimators::{kernel_sample_at, measure_stats, EstimatorConfig};
use zopl_core::kernels::{build_kernel, gauss_legendre};
use zopl_core::noise::NoiseModel;
use zopl_core::oracle::{Objective, OracleConfig, ZeroOrderOracle};
use zopl_core::sampling::{SampleRng, Substreams};
use zopl_core::theory::{gaussian_bounds, kernel_bias_bound, kernel_second_moment_bound, BoundInputs, Case};

/// Expectation of the kernel estimator in d = 2 by quadrature over the
/// direction angle (uniform grid) and the radius (Gauss-Legendre).
fn quadrature_mean(obj: &QuadraticObjective, x: &[f64], gamma: f64, beta: u32) -> Vec<f64> {
    let kernel = build_kernel(beta).unwrap();
    let oracle = ZeroOrderOracle::noise_free(obj);
    let (nodes, weights) = gauss_legendre(16);
    let n_theta = 256;
    let mut rng = SampleRng::from_seed(0);
    let mut mean = vec![0.0; 2];
    for k in 0..n_theta {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_theta as f64;
        let e = [theta.cos(), theta.sin()];
        for (r, w) in nodes.iter().zip(&weights) {
            let g = kernel_sample_at(gamma, &kernel, &oracle, x, &e, *r, &mut rng).unwrap();
            for (m, gi) in mean.iter_mut().zip(&g) {
                *m += gi * w / 2.0 / n_theta as f64;
            }
        }
    }
    mean
}

#[test]
fn kernel_mean_on_a_quadratic_matches_quadrature() {
    let obj = QuadraticObjective::diagonal(&[1.0, 1.0], vec![0.0; 2]).unwrap();
    let x = [1.0, 0.0];
    let gamma = 1e-3;
    let quad = quadrature_mean(&obj, &x, gamma, 2);
    let bias = ((quad[0] - 1.0).powi(2) + quad[1].powi(2)).sqrt();
    let inputs = BoundInputs {
        beta: 2,
        d: 2,
        l_beta: 0.5,
        gamma,
        ..BoundInputs::default()
    };
    let bound = kernel_bias_bound(&inputs, build_kernel(2).unwrap().kappa_beta(), Case::Deterministic).unwrap();
    assert!(bias <= bound, "bias {bias} above bound {bound}");
    assert!(bias < 1e-12, "central differences are exact on quadratics, got {bias}");

    let oracle = ZeroOrderOracle::noise_free(&obj);
    let cfg = EstimatorConfig::kernel(gamma, build_kernel(2).unwrap());
    let stats = measure_stats(&cfg, &oracle, &x, 100_000, &Substreams::new(9)).unwrap();
    for ((m, q), ci) in stats.mean_vector.iter().zip(&quad).zip(&stats.component_ci) {
        assert!((m - q).abs() <= *ci, "MC {m} vs quadrature {q} (3CI {ci})");
    }
}

#[test]
fn second_moments_stay_below_their_bounds() {
    let obj = QuadraticObjective::diagonal(&[0.5, 1.0, 1.5, 2.0], vec![0.0; 4]).unwrap();
    let x = [0.4, -0.3, 0.2, 0.1];
    let grad = obj.gradient(&x).unwrap();
    let grad_sq: f64 = grad.iter().map(|g| g * g).sum();
    let delta = 1e-4;
    let gamma = 0.05;
    let oracle = ZeroOrderOracle::new(&obj, OracleConfig::deterministic(NoiseModel::hash_cosine(delta))).unwrap();
    let inputs = BoundInputs {
        beta: 2,
        d: 4,
        l2: obj.l2(),
        l_beta: obj.l2() / 2.0,
        gamma,
        delta,
        ..BoundInputs::default()
    };
    let kernel = build_kernel(2).unwrap();
    let ks = measure_stats(&EstimatorConfig::kernel(gamma, kernel.clone()), &oracle, &x, 50_000, &Substreams::new(1)).unwrap();
    let kb = kernel_second_moment_bound(&inputs, kernel.kappa(), Case::Deterministic, grad_sq).unwrap();
    assert!(ks.second_moment <= kb + ks.second_moment_ci, "{} > {kb}", ks.second_moment);

    let gs = measure_stats(&EstimatorConfig::gaussian(gamma), &oracle, &x, 50_000, &Substreams::new(2)).unwrap();
    let gb = gaussian_bounds(&inputs, Case::Deterministic, grad_sq).unwrap();
    assert!(gs.second_moment <= gb.second_moment_bound + gs.second_moment_ci);
    assert!(gs.bias_norm(&grad) <= gb.bias_bound + gs.ci_halfwidth);
}

#[test]
fn stats_are_reproducible_from_the_seed() {
    let obj = QuadraticObjective::diagonal(&[1.0, 2.0, 3.0], vec![0.0; 3]).unwrap();
    let oracle = ZeroOrderOracle::noise_free(&obj);
    let cfg = EstimatorConfig::gaussian(0.01);
    let a = measure_stats(&cfg, &oracle, &[1.0, 1.0, 1.0], 500, &Substreams::new(3)).unwrap();
    let b = measure_stats(&cfg, &oracle, &[1.0, 1.0, 1.0], 500, &Substreams::new(3)).unwrap();
    let c = measure_stats(&cfg, &oracle, &[1.0, 1.0, 1.0], 500, &Substreams::new(4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}
