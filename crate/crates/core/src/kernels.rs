//! Odd polynomial smoothing kernels on `[-1, 1]`.
//!
//! A kernel of order `beta` satisfies, with `E[.] = (1/2) ∫_{-1}^{1} (.) du`,
//!
//! ```text
//! E[K(u)] = 0,   E[u K(u)] = 1,   E[u^j K(u)] = 0  for j = 2..=l,
//! ```
//!
//! where `l` is the largest integer strictly below `beta`. Odd kernels make every
//! even moment vanish, so only the odd moments `1, 3, 5, ... <= max(1, l)` need to
//! be imposed. The coefficients are obtained by solving that moment system; the
//! result coincides with the truncated Legendre expansion
//! `K(u) = Σ_m (2m + 1) P_m'(0) P_m(u)`, exposed separately as
//! [`legendre_kernel_coeffs`].
//!
//! The certificates `kappa_beta = ∫ |u|^beta |K(u)| du` and `kappa = ∫ K(u)^2 du`
//! are plain integrals over `[-1, 1]`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Largest supported smoothness order.
pub const MAX_BETA: u32 = 8;

/// Gauss–Legendre order used for every kernel integral. Exact for polynomials of
/// degree up to 63, which covers `u^j K(u)` and `K(u)^2` for all supported orders.
pub const QUADRATURE_NODES: usize = 32;

/// An immutable smoothing kernel with its moment certificates.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    beta: u32,
    l: u32,
    coeffs: Vec<f64>,
    kappa_beta: f64,
    kappa: f64,
}

impl KernelSpec {
    pub fn beta(&self) -> u32 {
        self.beta
    }

    /// Largest integer strictly below `beta`.
    pub fn l(&self) -> u32 {
        self.l
    }

    /// Coefficients of `u, u^3, u^5, ...`.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> u32 {
        2 * self.coeffs.len() as u32 - 1
    }

    /// `∫ |u|^beta |K(u)| du`
    pub fn kappa_beta(&self) -> f64 {
        self.kappa_beta
    }

    /// `∫ K(u)^2 du`
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Evaluates `K(r)`, rejecting arguments outside `[-1, 1]`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::KernelDomain(r));
        }
        Ok(self.value(r))
    }

    /// Horner evaluation in `r^2` without the domain check.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        let r2 = r * r;
        let inner = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r2 + c);
        r * inner
    }
}

fn order_l(beta: u32) -> u32 {
    beta - 1
}

/// Number of odd monomials `u^{2i+1}` needed to meet the moment conditions.
fn odd_terms(beta: u32) -> usize {
    let top = order_l(beta).max(1) as usize;
    top.div_ceil(2)
}

fn check_beta(beta: u32) -> Result<()> {
    if beta == 0 || beta > MAX_BETA {
        return Err(Error::param(
            "beta",
            alloc::format!("must lie in 1..={MAX_BETA}, got {beta}"),
        ));
    }
    Ok(())
}

/// Builds the minimal-degree odd kernel for smoothness order `beta`.
///
/// The moment system `Σ_i a_i / (2i + 2j + 3) = [j == 0]` over the odd
/// monomials is solved densely; certificates are computed by Gauss–Legendre
/// quadrature.
pub fn build_kernel(beta: u32) -> Result<KernelSpec> {
    check_beta(beta)?;
    let n = odd_terms(beta);
    let gram = DMatrix::from_fn(n, n, |j, i| 1.0 / (2 * (i + j) + 3) as f64);
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    let solution = gram
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularMoments {
            beta,
            residual: f64::INFINITY,
        })?;
    let residual = (&gram * &solution - &rhs).amax();
    if !residual.is_finite() || residual > 1e-9 {
        return Err(Error::SingularMoments { beta, residual });
    }
    let coeffs: Vec<f64> = solution.iter().copied().collect();
    Ok(with_certificates(beta, coeffs))
}

fn with_certificates(beta: u32, coeffs: Vec<f64>) -> KernelSpec {
    let mut spec = KernelSpec {
        beta,
        l: order_l(beta),
        coeffs,
        kappa_beta: 0.0,
        kappa: 0.0,
    };
    spec.kappa_beta = abs_moment(&spec, beta);
    spec.kappa = square_integral(&spec);
    spec
}

/// Closed-form construction `K(u) = Σ_{m odd} (2m + 1) P_m'(0) P_m(u)` in the
/// monomial basis, for odd `m <= max(1, l)`.
pub fn legendre_kernel_coeffs(beta: u32) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let n = odd_terms(beta);
    let top = 2 * n - 1;
    let polys = legendre_monomials(top);
    let mut coeffs = vec![0.0; n];
    for m in (1..=top).step_by(2) {
        let weight = (2 * m + 1) as f64 * legendre_derivative_at_zero(m);
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c += weight * polys[m][2 * i + 1];
        }
    }
    Ok(coeffs)
}

/// Monomial coefficients of `P_0..=P_top` via Bonnet's recursion.
fn legendre_monomials(top: usize) -> Vec<Vec<f64>> {
    let mut polys = vec![vec![0.0; top + 1]; top + 1];
    polys[0][0] = 1.0;
    if top >= 1 {
        polys[1][1] = 1.0;
    }
    for n in 1..top {
        let (a, b) = ((2 * n + 1) as f64, n as f64);
        let denom = (n + 1) as f64;
        for k in 0..=top {
            let shifted = if k >= 1 { polys[n][k - 1] } else { 0.0 };
            polys[n + 1][k] = (a * shifted - b * polys[n - 1][k]) / denom;
        }
    }
    polys
}

/// `P_m'(0) = m P_{m-1}(0)` with `P_{2k}(0) = (-1)^k (2k)! / (4^k (k!)^2)`.
fn legendre_derivative_at_zero(m: usize) -> f64 {
    if m.is_multiple_of(2) {
        return 0.0;
    }
    let k = (m - 1) / 2;
    let mut p = 1.0;
    for i in 1..=k {
        p *= -((2 * i - 1) as f64) / (2 * i) as f64;
    }
    m as f64 * p
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let pi = core::f64::consts::PI;
    for i in 0..n.div_ceil(2) {
        let mut x = libm::cos(pi * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if libm::fabs(step) < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn integrate(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (nodes, weights) = gauss_legendre(QUADRATURE_NODES);
    let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| w * f(mid + half * t))
        .sum::<f64>()
        * half
}

/// Positive roots of `K` in `(0, 1)`, located by a sign scan and bisection.
fn positive_roots(spec: &KernelSpec) -> Vec<f64> {
    const GRID: usize = 4096;
    let mut roots = Vec::new();
    let mut prev_u = 1.0 / GRID as f64;
    let mut prev = spec.value(prev_u);
    for k in 2..=GRID {
        let u = k as f64 / GRID as f64;
        let cur = spec.value(u);
        if prev == 0.0 {
            roots.push(prev_u);
        } else if prev * cur < 0.0 {
            let (mut a, mut b) = (prev_u, u);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if spec.value(a) * spec.value(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_u = u;
        prev = cur;
    }
    roots
}

/// `∫_{-1}^{1} |u|^p |K(u)| du`, integrating each sign-definite piece exactly.
fn abs_moment(spec: &KernelSpec, p: u32) -> f64 {
    let mut cuts = vec![0.0];
    cuts.extend(positive_roots(spec));
    cuts.push(1.0);
    let half: f64 = cuts
        .windows(2)
        .map(|w| libm::fabs(integrate(w[0], w[1], |u| libm::pow(u, p as f64) * spec.value(u))))
        .sum();
    2.0 * half
}

fn square_integral(spec: &KernelSpec) -> f64 {
    integrate(-1.0, 1.0, |u| {
        let k = spec.value(u);
        k * k
    })
}

/// `E[u^j K(u)] = (1/2) ∫ u^j K(u) du`
pub fn expected_moment(spec: &KernelSpec, j: u32) -> f64 {
    0.5 * integrate(-1.0, 1.0, |u| libm::pow(u, j as f64) * spec.value(u))
}

/// Upper bound on `kappa_beta` for `beta >= 2`: `2 sqrt(2) (beta - 1)`.
pub fn kappa_beta_bound(beta: u32) -> Option<f64> {
    (beta >= 2).then(|| 2.0 * core::f64::consts::SQRT_2 * (beta - 1) as f64)
}

/// Upper bound on `kappa`: `3 beta^3`.
pub fn kappa_bound(beta: u32) -> f64 {
    3.0 * libm::pow(f64::from(beta), 3.0)
}

/// Quadrature audit of a kernel against its moment conditions and certificate bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub beta: u32,
    pub l: u32,
    pub tol: f64,
    /// `E[K(u)]`
    pub mean: f64,
    /// `E[u K(u)]`
    pub first_moment: f64,
    /// `(j, E[u^j K(u)])` for `j = 2..=l`.
    pub higher_moments: Vec<(u32, f64)>,
    pub kappa_beta: f64,
    pub kappa: f64,
    pub kappa_beta_bound: Option<f64>,
    pub kappa_bound: f64,
    pub moments_ok: bool,
    pub kappa_beta_ok: bool,
    pub kappa_ok: bool,
}

impl MomentReport {
    /// Largest deviation of any moment from its target value.
    pub fn max_residual(&self) -> f64 {
        self.higher_moments
            .iter()
            .map(|&(_, v)| libm::fabs(v))
            .fold(
                libm::fabs(self.mean).max(libm::fabs(self.first_moment - 1.0)),
                f64::max,
            )
    }

    pub fn passed(&self) -> bool {
        self.moments_ok && self.kappa_beta_ok && self.kappa_ok
    }
}

pub fn verify_moments(spec: &KernelSpec, tol: f64) -> MomentReport {
    let beta = spec.beta;
    let mean = expected_moment(spec, 0);
    let first_moment = expected_moment(spec, 1);
    let higher_moments: Vec<(u32, f64)> =
        (2..=spec.l).map(|j| (j, expected_moment(spec, j))).collect();
    let kappa_beta = abs_moment(spec, beta);
    let kappa = square_integral(spec);
    let kappa_beta_bound = kappa_beta_bound(beta);
    let kappa_bound = kappa_bound(beta);
    let mut report = MomentReport {
        beta,
        l: spec.l,
        tol,
        mean,
        first_moment,
        higher_moments,
        kappa_beta,
        kappa,
        kappa_beta_bound,
        kappa_bound,
        moments_ok: false,
        kappa_beta_ok: kappa_beta_bound.is_none_or(|b| kappa_beta <= b),
        kappa_ok: kappa <= kappa_bound,
    };
    report.moments_ok = report.max_residual() < tol;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn beta_two_is_three_r() {
        let k = build_kernel(2).unwrap();
        assert_eq!(k.coeffs().len(), 1);
        assert!(close(k.coeffs()[0], 3.0, 1e-14));
        assert!(close(k.eval(0.5).unwrap(), 1.5, 1e-14));
        assert_eq!(k.eval(0.0).unwrap(), 0.0);
    }

    #[test]
    fn beta_one_is_three_r() {
        let k = build_kernel(1).unwrap();
        assert_eq!(k.l(), 0);
        assert_eq!(k.coeffs().len(), 1);
        assert!(close(k.coeffs()[0], 3.0, 1e-14));
    }

    #[test]
    fn beta_four_matches_hand_solved_system() {
        // {a/3 + b/5 = 1, a/5 + b/7 = 0}  =>  a = 75/4, b = -105/4
        let k = build_kernel(4).unwrap();
        assert!(close(k.coeffs()[0], 75.0 / 4.0, 1e-12));
        assert!(close(k.coeffs()[1], -105.0 / 4.0, 1e-12));
        assert!(close(k.eval(1.0).unwrap(), -7.5, 1e-12));
    }

    #[test]
    fn beta_six_matches_hand_solved_system() {
        let k = build_kernel(6).unwrap();
        let want = [3675.0 / 64.0, -13230.0 / 64.0, 10395.0 / 64.0];
        for (c, w) in k.coeffs().iter().zip(want) {
            assert!(close(*c, w, 1e-11), "{c} vs {w}");
        }
    }

    #[test]
    fn minimal_degree_follows_l() {
        let degrees: Vec<u32> = (1..=MAX_BETA)
            .map(|b| build_kernel(b).unwrap().degree())
            .collect();
        assert_eq!(degrees, [1, 1, 1, 3, 3, 5, 5, 7]);
    }

    #[test]
    fn domain_is_enforced() {
        let k = build_kernel(3).unwrap();
        assert!(matches!(k.eval(1.0 + 1e-12), Err(Error::KernelDomain(_))));
        assert!(matches!(k.eval(f64::NAN), Err(Error::KernelDomain(_))));
        assert!(k.eval(-1.0).is_ok());
    }

    #[test]
    fn unsupported_orders_are_rejected() {
        assert!(build_kernel(0).is_err());
        assert!(build_kernel(MAX_BETA + 1).is_err());
    }

    #[test]
    fn beta_two_certificates_are_closed_form() {
        let report = verify_moments(&build_kernel(2).unwrap(), 1e-12);
        assert!(close(report.first_moment, 1.0, 1e-15));
        assert!(report.mean.abs() < 1e-15);
        assert!(close(report.kappa_beta, 1.5, 1e-14));
        assert!(close(report.kappa, 6.0, 1e-14));
        assert!(report.passed());
    }

    #[test]
    fn beta_four_residuals_are_tiny() {
        let report = verify_moments(&build_kernel(4).unwrap(), 1e-12);
        assert!(report.max_residual() < 1e-12, "{report:?}");
        assert_eq!(report.higher_moments.len(), 2);
    }

    #[test]
    fn even_moments_vanish() {
        for beta in 1..=MAX_BETA {
            let k = build_kernel(beta).unwrap();
            for j in [0, 2, 4, 6] {
                assert!(expected_moment(&k, j).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn orders_two_and_up_pass_every_flag() {
        for beta in 2..=MAX_BETA {
            let report = verify_moments(&build_kernel(beta).unwrap(), 1e-10);
            assert!(report.passed(), "beta = {beta}: {report:?}");
        }
    }

    #[test]
    fn order_one_kappa_exceeds_three_beta_cubed() {
        // ∫(3u)^2 du = 6 while 3 * 1^3 = 3; 3u is the L2-minimal kernel with E[uK] = 1,
        // so no admissible kernel meets that certificate at beta = 1.
        let report = verify_moments(&build_kernel(1).unwrap(), 1e-10);
        assert!(report.moments_ok);
        assert!(report.kappa_beta_ok);
        assert!(!report.kappa_ok);
    }

    #[test]
    fn linear_solve_agrees_with_legendre_sum() {
        for beta in 1..=MAX_BETA {
            let solved = build_kernel(beta).unwrap();
            let closed = legendre_kernel_coeffs(beta).unwrap();
            assert_eq!(solved.coeffs().len(), closed.len());
            for (a, b) in solved.coeffs().iter().zip(&closed) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "beta={beta}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        for beta in 1..=MAX_BETA {
            assert_eq!(build_kernel(beta).unwrap(), build_kernel(beta).unwrap());
        }
    }

    #[test]
    fn quadrature_integrates_high_degree_monomials() {
        let (x, w) = gauss_legendre(QUADRATURE_NODES);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let m62: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(62)).sum();
        assert!((m62 - 2.0 / 63.0).abs() < 1e-14);
    }

    #[test]
    fn kappa_beta_uses_sign_changes() {
        // Reference by brute-force midpoint rule on a fine grid.
        let k = build_kernel(6).unwrap();
        let n = 2_000_000;
        let h = 2.0 / n as f64;
        let brute: f64 = (0..n)
            .map(|i| {
                let u = -1.0 + (i as f64 + 0.5) * h;
                u.abs().powi(6) * k.value(u).abs() * h
            })
            .sum();
        assert!((brute - k.kappa_beta()).abs() < 1e-6, "{brute} vs {}", k.kappa_beta());
    }
}
