//! Numerical building blocks: cancellation-free power differences and
//! double-exponential (tanh-sinh) quadrature for integrands with algebraic
//! endpoint singularities.

/// `b^s − a^s` for `0 ≤ a ≤ b`, accurate when `a` and `b` are close.
pub fn pow_diff(b: f64, a: f64, s: f64) -> f64 {
    debug_assert!(0.0 <= a && a <= b);
    if a == b {
        return 0.0;
    }
    if a == 0.0 {
        return if s > 0.0 { b.powf(s) } else { f64::INFINITY };
    }
    // b^s (1 − (a/b)^s) with (a/b) = 1 − (b − a)/b
    -b.powf(s) * (s * (-(b - a) / b).ln_1p()).exp_m1()
}

/// `∫_lo^hi u^γ du` for `0 ≤ lo ≤ hi ≤ ∞`; `+∞` when divergent.
pub fn power_integral(lo: f64, hi: f64, gamma: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let s = gamma + 1.0;
    if hi.is_infinite() {
        return if s < 0.0 && lo > 0.0 {
            lo.powf(s) / -s
        } else {
            f64::INFINITY
        };
    }
    if s == 0.0 {
        return if lo == 0.0 { f64::INFINITY } else { (hi / lo).ln() };
    }
    if s < 0.0 && lo == 0.0 {
        return f64::INFINITY;
    }
    pow_diff(hi, lo, s) / s
}

/// Result of a quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub abs_error: f64,
    pub converged: bool,
}

/// Tanh-sinh quadrature of `g` over a finite `[a, b]`.
///
/// `g` is called as `g(x, x − a, b − x)` with both distances computed
/// without cancellation, so integrands singular at an endpoint can be
/// evaluated accurately arbitrarily close to it.
pub fn tanh_sinh<G>(g: G, a: f64, b: f64, tol: f64) -> Quad
where
    G: Fn(f64, f64, f64) -> f64,
{
    if !(b > a) {
        return Quad {
            value: 0.0,
            abs_error: 0.0,
            converged: true,
        };
    }
    const MAX_LEVEL: u32 = 12;
    const TAU_MAX: f64 = 6.5;
    let half = 0.5 * (b - a);
    let hpi = std::f64::consts::FRAC_PI_2;

    let node = |tau: f64| -> f64 {
        // weight and complementary abscissae at ±tau
        let s = hpi * tau.sinh();
        let cosh_s = s.cosh();
        let w = hpi * tau.cosh() / (cosh_s * cosh_s);
        let one_minus = 2.0 / ((2.0 * s).exp() + 1.0); // 1 − tanh(s)
        let mut acc = 0.0;
        // +tau: x near b
        let db = half * one_minus;
        let da = half * (2.0 - one_minus);
        if db > 0.0 {
            let x = if db < da { b - db } else { a + da };
            let v = g(x, da, db);
            if v.is_finite() {
                acc += w * v;
            }
        }
        if tau != 0.0 {
            let (da, db) = (db, da);
            if da > 0.0 {
                let x = if da < db { a + da } else { b - db };
                let v = g(x, da, db);
                if v.is_finite() {
                    acc += w * v;
                }
            }
        }
        acc
    };

    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1;
    while (k as f64) * h <= TAU_MAX {
        sum += node(k as f64 * h);
        k += 1;
    }
    let mut estimate = half * h * sum;
    let mut err = f64::INFINITY;
    for level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1;
        while (k as f64) * h <= TAU_MAX {
            sum += node(k as f64 * h);
            k += 2;
        }
        let next = half * h * sum;
        err = (next - estimate).abs();
        estimate = next;
        if err <= tol.max(1e-15 * estimate.abs()) && level >= 3 {
            return Quad {
                value: estimate,
                abs_error: err,
                converged: true,
            };
        }
    }
    Quad {
        value: estimate,
        abs_error: err,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_diff_is_cancellation_free() {
        let b: f64 = 2f64.powi(200);
        let h: f64 = 2f64.powf(199.0 / 3.0);
        // b^α − (b − h)^α ≈ α b^{α−1} h for tiny h/b
        let alpha = 0.5;
        let exact_lead = alpha * b.powf(alpha - 1.0) * h;
        let got = pow_diff(b, b - h, alpha);
        // b − h rounds to b here, so compare only in the representable regime
        assert!(got == 0.0 || (got / exact_lead - 1.0).abs() < 1e-6);
        let h = 2f64.powi(-40);
        let got = pow_diff(1.0 + h, 1.0, 0.5);
        assert!((got / (0.5 * h) - 1.0).abs() < 1e-11, "{got}");
    }

    #[test]
    fn power_integral_closed_forms() {
        assert!((power_integral(0.0, 1.0, -0.5) - 2.0).abs() < 1e-15);
        assert_eq!(power_integral(0.0, 1.0, -1.0), f64::INFINITY);
        assert_eq!(power_integral(0.0, 1.0, -1.5), f64::INFINITY);
        assert!((power_integral(1.0, f64::INFINITY, -1.5) - 2.0).abs() < 1e-15);
        assert_eq!(power_integral(1.0, f64::INFINITY, -1.0), f64::INFINITY);
        assert!((power_integral(1.0, 4.0, -1.5) - 1.0).abs() < 1e-15);
        assert!((power_integral(1.0, std::f64::consts::E, -1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularities() {
        // ∫_0^1 x^{-0.9} dx = 10
        let q = tanh_sinh(|_, da, _| da.powf(-0.9), 0.0, 1.0, 1e-12);
        assert!(q.converged);
        assert!((q.value - 10.0).abs() < 1e-9, "{q:?}");
        // ∫_0^1 x^{-1/2}(1-x)^{-1/2} dx = π
        let q = tanh_sinh(|_, da, db| (da * db).powf(-0.5), 0.0, 1.0, 1e-12);
        assert!((q.value - std::f64::consts::PI).abs() < 1e-10, "{q:?}");
        // smooth
        let q = tanh_sinh(|x, _, _| x.exp(), 0.0, 1.0, 1e-13);
        assert!((q.value - (std::f64::consts::E - 1.0)).abs() < 1e-13);
    }
}
