//! Small vector helpers shared by the estimators and the optimizer loop.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    libm::sqrt(norm_sq(a))
}

/// `out = x + t * dir`
pub(crate) fn axpy_into(out: &mut [f64], x: &[f64], t: f64, dir: &[f64]) {
    for ((o, xi), di) in out.iter_mut().zip(x).zip(dir) {
        *o = xi + t * di;
    }
}
