use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zopl_core::benchmark::{eval_f, eval_grad, generate_problem};

#[test]
fn gradient_matches_central_differences_at_random_points() {
    let problem = generate_problem(16, 5, 11).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let x: Vec<f64> = (0..16).map(|_| rng.random_range(-3.0..3.0)).collect();
        let grad = eval_grad(&problem, &x).unwrap();
        let h = 1e-6;
        let fd: Vec<f64> = (0..16)
            .map(|j| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                (eval_f(&problem, &xp).unwrap() - eval_f(&problem, &xm).unwrap()) / (2.0 * h)
            })
            .collect();
        let err: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-6 * norm.max(1.0), "relative error {} at {x:?}", err / norm);
    }
}

#[test]
fn generation_is_bit_identical_per_seed() {
    let a = generate_problem(16, 5, 7).unwrap();
    let b = generate_problem(16, 5, 7).unwrap();
    assert_eq!(a.c(), b.c());
    assert_eq!(a.dm(), b.dm());
    assert_eq!(a.b(), b.b());
    assert_eq!(a.x_star(), b.x_star());
    assert!(eval_f(&a, a.x_star()).unwrap() <= 1e-24);
    assert!(eval_grad(&a, a.x_star()).unwrap().iter().all(|g| g.abs() < 1e-10));
    assert_ne!(generate_problem(16, 5, 8).unwrap().c(), a.c());
}

#[test]
fn p_above_d_is_rejected() {
    assert!(generate_problem(4, 5, 0).is_err());
}
