//! Float helpers that `core` does not provide on its own.

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub(crate) fn powi(base: f64, exp: u32) -> f64 {
    libm::pow(base, exp as f64)
}

/// Smallest `n >= 0` such that `ratio^n * scale <= tol`, for `0 < ratio < 1`.
///
/// Starts from the closed form and then corrects for rounding so the returned
/// count is exactly the smallest one satisfying the inequality in floating
/// point.
pub(crate) fn geometric_steps(ratio: f64, scale: f64, tol: f64) -> usize {
    if scale <= tol {
        return 0;
    }
    let guess = ceil(ln(tol / scale) / ln(ratio)).max(0.0);
    let mut n = guess as usize;
    while powi(ratio, n as u32) * scale > tol {
        n += 1;
    }
    while n > 0 && powi(ratio, (n - 1) as u32) * scale <= tol {
        n -= 1;
    }
    n
}
