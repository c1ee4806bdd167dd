//! Standard normal CDF, log-CDF and quantile.
//!
//! The quantile is polished with one Halley step on top of the library
//! inverse so that it is reliable to ~1e-14 relative, comfortably inside
//! the 1e-10 budget the rate expansions need.

use statrs::distribution::{ContinuousCDF, Normal};

fn unit_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Phi(x), the standard normal CDF.
pub fn phi(x: f64) -> f64 {
    unit_normal().cdf(x)
}

/// Standard normal density.
pub fn dphi(x: f64) -> f64 {
    (-
        0.5 * x * x
    ).exp()
        / (2.0 * std::f64::consts::PI).sqrt()
}

/// ln Phi(x), valid deep into the lower tail.
///
/// Below x = -36 the CDF underflows, so the asymptotic expansion
/// ln Phi(x) = -x^2/2 - ln(sqrt(2 pi) |x|) + ln(1 - 1/x^2 + 3/x^4 - ...)
/// takes over.
pub fn ln_phi(x: f64) -> f64 {
    if x > -36.0 {
        phi(x).ln()
    } else {
        let x2 = x * x;
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        -0.5 * x2 - (x.abs() * (2.0 * std::f64::consts::PI).sqrt()).ln() + series.ln()
    }
}

/// Phi^{-1}(p) for p in (0, 1).
pub fn phi_inv(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1), got {p}");
    let mut x = unit_normal().inverse_cdf(p);
    // One Halley refinement against the high-accuracy CDF.
    for _ in 0..2 {
        let f = phi(x) - p;
        let d = dphi(x);
        if d <= 0.0 {
            break;
        }
        let u = f / d;
        let step = u / (1.0 + 0.5 * x * u);
        x -= step;
        if step.abs() < 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Phi^{-1}(eps) where eps is given as ln(eps); handles eps far below
/// double-precision range via the tail expansion of `ln_phi`.
pub fn phi_inv_ln(ln_p: f64) -> f64 {
    assert!(ln_p < 0.0);
    if ln_p > (-700.0f64).max(f64::MIN_POSITIVE.ln()) && ln_p.exp() > 1e-300 {
        let p = ln_p.exp();
        if p > 1e-15 {
            return phi_inv(p);
        }
    }
    // Solve ln_phi(x) = ln_p by Newton on the stable log-CDF.
    let mut x = -(-2.0 * ln_p).sqrt();
    for _ in 0..60 {
        let f = ln_phi(x) - ln_p;
        // d/dx ln Phi(x) = phi(x)/Phi(x); use the hazard asymptotics in the tail.
        let deriv = if x < -10.0 {
            -x * (1.0 - 1.0 / (x * x)).max(0.5)
        } else {
            dphi(x) / phi(x)
        };
        let step = f / deriv;
        x -= step;
        if step.abs() < 1e-13 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_reference_values() {
        // Reference values to 15 digits.
        assert!((phi_inv(0.975) - 1.959_963_984_540_054).abs() < 1e-10);
        assert!((phi_inv(0.5)).abs() < 1e-14);
        assert!((phi_inv(0.025) + 1.959_963_984_540_054).abs() < 1e-10);
        assert!((phi_inv(1e-9) + 5.997_807_015_008_54).abs() < 1e-9);
    }

    #[test]
    fn cdf_quantile_roundtrip() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.9999] {
            let x = phi_inv(p);
            assert!((phi(x) - p).abs() <= 1e-12 * p.max(1e-3), "p={p}");
        }
    }

    #[test]
    fn ln_phi_matches_direct_then_extends() {
        for &x in &[-5.0, -10.0, -20.0, -35.0] {
            assert!((ln_phi(x) - phi(x).ln()).abs() < 1e-9 * ln_phi(x).abs());
        }
        // Deep tail stays finite and ordered.
        let a = ln_phi(-40.0);
        let b = ln_phi(-50.0);
        assert!(a.is_finite() && b.is_finite() && b < a);
    }

    #[test]
    fn quantile_from_log_matches_linear_region() {
        for &p in &[1e-4f64, 1e-8, 1e-12] {
            let via_log = phi_inv_ln(p.ln());
            let direct = phi_inv(p);
            assert!((via_log - direct).abs() < 1e-8, "p={p}");
        }
        // Far beyond linear range: check ln_phi(x) reproduces the target.
        let target = -5000.0;
        let x = phi_inv_ln(target);
        assert!((ln_phi(x) - target).abs() < 1e-6 * target.abs());
    }
}
