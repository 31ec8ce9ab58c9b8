//! Biased SGD against the Lemma 1 bound on a quadratic with μ = 0.5, L₂ = 2.

use zopl_core::benchmark::QuadraticObjective;
use zopl_core::optimizer::{biased_sgd, mean_trace, rep_seed, MeanTrace, OptimizerConfig, SyntheticBiasedOracle};
use zopl_core::theory::{lemma1_bound, lemma1_floor, BoundInputs, OracleParams};

fn quadratic() -> QuadraticObjective {
    QuadraticObjective::diagonal(&[0.5, 1.0, 1.5, 2.0], vec![0.0; 4]).unwrap()
}

fn run(m: f64, zeta_sq: f64, sigma_sq: f64, batch: usize, n: usize, reps: usize, eta: f64) -> MeanTrace {
    let q = quadratic();
    let oracle = SyntheticBiasedOracle::new(&q, m, zeta_sq, 1.0, sigma_sq).unwrap();
    let traces: Vec<_> = (0..reps)
        .map(|r| biased_sgd(&oracle, &OptimizerConfig::new(eta, n, batch, rep_seed(17, r)), &[1.0; 4]).unwrap())
        .collect();
    mean_trace(&traces).unwrap()
}

fn tail_mean(t: &MeanTrace) -> f64 {
    let tail = &t.mean[t.mean.len() * 3 / 4..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

#[test]
fn bias_plateau_sits_under_the_bound() {
    let q = quadratic();
    let eta = 0.25;
    let zeta_sq = 0.01;
    let t = run(0.0, zeta_sq, 0.0, 1, 400, 20, eta);
    let inputs = BoundInputs {
        d: 4,
        l2: q.l2(),
        mu: q.mu(),
        eta,
        f0_gap: 2.5,
        ..BoundInputs::default()
    };
    let params = OracleParams {
        big_m: 1.0,
        sigma_sq: 0.0,
        m: 0.0,
        zeta_sq,
    };
    let floor = lemma1_floor(&inputs, &params);
    let plateau = tail_mean(&t);
    assert!(plateau > 0.0 && plateau <= floor, "plateau {plateau} vs floor {floor}");
    for (i, it) in t.iters.iter().enumerate() {
        assert!(t.mean[i] <= lemma1_bound(&inputs, &params, *it as u64).unwrap() + 3.0 * t.se[i]);
    }
}

#[test]
fn doubling_the_batch_halves_the_variance_plateau() {
    let eta = 0.05;
    let one = tail_mean(&run(0.0, 0.0, 1.0, 4, 2000, 40, eta));
    let two = tail_mean(&run(0.0, 0.0, 1.0, 8, 2000, 40, eta));
    let ratio = one / two;
    assert!((1.7..2.3).contains(&ratio), "plateau ratio {ratio}");
}

#[test]
fn exact_gradients_contract_faster_than_the_bound() {
    let q = quadratic();
    let eta = 0.25;
    let t = run(0.0, 0.0, 0.0, 1, 50, 1, eta);
    let rate = 1.0 - eta * q.mu();
    for (k, gap) in t.mean.iter().enumerate() {
        assert!(*gap <= rate.powi(k as i32) * t.mean[0] * (1.0 + 1e-12));
    }
}
