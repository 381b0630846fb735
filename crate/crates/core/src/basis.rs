//! Fourier basis on [0, 1], orthonormal in L2: the gram of the design at the
//! equi-spaced points i/n is n·I (up to rounding) for orders below Nyquist.

use alloc::vec::Vec;

const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// φ₁ ≡ 1, φ_{2k}(t) = √2 cos(2πkt), φ_{2k+1}(t) = √2 sin(2πkt).
/// `j` is 1-based.
pub fn fourier_value(j: usize, t: f64) -> f64 {
    debug_assert!(j >= 1);
    if j == 1 {
        return 1.0;
    }
    let k = (j / 2) as f64;
    let arg = TWO_PI * k * t;
    if j.is_multiple_of(2) {
        core::f64::consts::SQRT_2 * libm::cos(arg)
    } else {
        core::f64::consts::SQRT_2 * libm::sin(arg)
    }
}

/// Equi-spaced design points tᵢ = i/n, i = 1..n.
pub fn design_points(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / n as f64).collect()
}

/// Row-major n-by-order design matrix Φ at the equi-spaced points.
pub fn fourier_design(n: usize, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * order);
    for t in design_points(n) {
        for j in 1..=order {
            out.push(fourier_value(j, t));
        }
    }
    out
}

/// f(t) = Σ_j θ_j φ_j(t) for the leading coefficients.
pub fn fourier_sum(coeffs: &[f64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(idx, &c)| c * fourier_value(idx + 1, t))
        .sum()
}
