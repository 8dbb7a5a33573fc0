//! Quantile functions for the chi-square and Beta distributions.
//!
//! Both are computed by inverting the regularized incomplete gamma/beta
//! functions with a bracketed Newton iteration.

use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// `p`-quantile of the chi-square distribution with `df` degrees of freedom.
pub fn chi_squared_quantile(p: f64, df: f64) -> f64 {
    assert!((0.0..1.0).contains(&p), "probability {p} outside [0, 1)");
    assert!(df > 0.0);
    if p == 0.0 {
        return 0.0;
    }
    let k = 0.5 * df;
    let log_norm = k * std::f64::consts::LN_2 + ln_gamma(k);
    let cdf = |x: f64| gamma_lr(k, 0.5 * x);
    let pdf = |x: f64| {
        if x <= 0.0 {
            return 0.0;
        }
        ((k - 1.0) * x.ln() - 0.5 * x - log_norm).exp()
    };
    let mut hi = df.max(1.0);
    while cdf(hi) < p {
        hi *= 2.0;
    }
    invert(p, cdf, pdf, 0.0, hi)
}

/// `p`-quantile of the Beta(`a`, `b`) distribution.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
    assert!(a > 0.0 && b > 0.0);
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let log_norm = ln_beta(a, b);
    let cdf = |x: f64| beta_reg(a, b, x);
    let pdf = |x: f64| {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        ((a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() - log_norm).exp()
    };
    invert(p, cdf, pdf, 0.0, 1.0)
}

/// Solves `cdf(x) = target` for an increasing `cdf` on `[lo, hi]`.
fn invert(target: f64, cdf: impl Fn(f64) -> f64, pdf: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..2000 {
        let err = cdf(x) - target;
        if err == 0.0 {
            return x;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let slope = pdf(x);
        let mut next = x - err / slope;
        if !(next.is_finite() && next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() {
            return next;
        }
        if next == lo || next == hi {
            return next;
        }
        x = next;
    }
    x
}
