//! Green's function of `∂_τ − ½σ²∂_zz` on `z > 0` with the Robin condition
//! `∂_z Û + κ Û = 0` at `z = 0`.

use std::f64::consts::PI;

use crate::bs_lookback::{exp_times_cdf, std_normal_cdf};

/// Closed-form kernel `G(t, z, ξ)`: two Gaussian images plus the Robin correction
/// `2κ exp(κ(−z−ξ+σ²κt/2)) N((σ²κt − z − ξ)/(σ√t))`.
pub fn green_kernel(t: f64, z: f64, xi: f64, sigma: f64, kappa: f64) -> f64 {
    debug_assert!(t > 0.0);
    let var = sigma * sigma * t;
    let norm = 1.0 / (2.0 * PI * var).sqrt();
    let d = z - xi;
    let s = z + xi;
    let images = norm * ((-0.5 * d * d / var).exp() + (-0.5 * s * s / var).exp());
    images + robin_term(t, z, xi, sigma, kappa)
}

/// Third term of [`green_kernel`] on its own.
pub fn robin_term(t: f64, z: f64, xi: f64, sigma: f64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return 0.0;
    }
    let s = z + xi;
    let var = sigma * sigma * t;
    let exponent = kappa * (-s + 0.5 * sigma * sigma * kappa * t);
    let arg = (var * kappa - s) / var.sqrt();
    2.0 * kappa * exp_times_cdf(exponent, arg)
}

/// Green's function of the untransformed operator `∂_τ − ½σ²∂_zz + σ²κ∂_z` with a
/// zero-slope condition at `z = 0`: the transform factor `exp(−½σ²κ²t + κ(z−ξ))`
/// times [`green_kernel`].
///
/// Multiplied out, the Robin correction collapses to `2κ e^{−2κξ} N(·)`, which is
/// bounded, so no overflow guard is needed.
#[inline]
pub fn neumann_kernel(t: f64, z: f64, xi: f64, sigma: f64, kappa: f64) -> f64 {
    let var = sigma * sigma * t;
    let shift = -0.5 * var * kappa * kappa + kappa * (z - xi);
    let inv_two_var = 0.5 / var;
    let d = z - xi;
    let s = z + xi;
    let images = ((shift - d * d * inv_two_var).exp() + (shift - s * s * inv_two_var).exp())
        / (2.0 * PI * var).sqrt();
    if kappa == 0.0 {
        return images;
    }
    let arg = (var * kappa - s) / var.sqrt();
    images + 2.0 * kappa * (-2.0 * kappa * xi).exp() * std_normal_cdf(arg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ham::quadrature::GaussLegendre;

    #[test]
    fn zero_kappa_is_two_gaussians() {
        let (t, z, xi, sigma): (f64, f64, f64, f64) = (0.3, 0.4, 0.7, 0.25);
        let var = sigma * sigma * t;
        let expect = ((-(z - xi) * (z - xi) / (2.0 * var)).exp()
            + (-(z + xi) * (z + xi) / (2.0 * var)).exp())
            / (2.0 * PI * var).sqrt();
        assert_eq!(robin_term(t, z, xi, sigma, 0.0), 0.0);
        assert!((green_kernel(t, z, xi, sigma, 0.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn robin_condition_holds() {
        let (t, xi, sigma, kappa) = (0.5, 0.3, 0.2, 1.75);
        let h = 1e-5;
        let g = |z: f64| green_kernel(t, z, xi, sigma, kappa);
        let slope = (-3.0 * g(0.0) + 4.0 * g(h) - g(2.0 * h)) / (2.0 * h);
        let residual = slope + kappa * g(0.0);
        assert!(residual.abs() < 1e-7 * g(0.0).abs().max(1.0), "{residual}");
    }

    #[test]
    fn neumann_kernel_is_transformed_green_kernel() {
        for &(t, z, xi, sigma, kappa) in &[
            (0.5, 0.3, 0.2, 0.2, 1.75),
            (0.01, 1.0, 1.05, 0.4, 0.6875),
            (2.0, 0.0, 0.7, 0.15, 2.72),
        ] {
            let shift: f64 = -0.5 * sigma * sigma * kappa * kappa * t + kappa * (z - xi);
            let direct = shift.exp() * green_kernel(t, z, xi, sigma, kappa);
            let got = neumann_kernel(t, z, xi, sigma, kappa);
            assert!((got - direct).abs() <= 1e-13 * direct.abs(), "{got} vs {direct}");
        }
    }

    #[test]
    fn neumann_kernel_has_zero_slope() {
        let (t, xi, sigma, kappa) = (0.2, 0.15, 0.3, 0.9);
        let h = 1e-5;
        let k = |z: f64| neumann_kernel(t, z, xi, sigma, kappa);
        let slope = (-3.0 * k(0.0) + 4.0 * k(h) - k(2.0 * h)) / (2.0 * h);
        assert!(slope.abs() < 1e-7 * k(0.0), "{slope}");
    }

    #[test]
    fn short_time_mass_is_one() {
        let (t, z, sigma, kappa): (f64, f64, f64, f64) = (1e-4, 1.0, 0.2, 1.75);
        let w = sigma * t.sqrt();
        let gl = GaussLegendre::new(20);
        let mut mass = 0.0;
        for k in -40..40 {
            let a = z + 0.25 * w * k as f64;
            mass += gl.integrate(a, a + 0.25 * w, |xi| green_kernel(t, z, xi, sigma, kappa));
        }
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }

    #[test]
    fn large_exponent_does_not_overflow() {
        let v = robin_term(1.0, 0.0, 0.0, 1.0, 30.0);
        assert!(v.is_finite() && v > 0.0);
    }
}
