//! Reference distributions used for Wald tests and rank transforms.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::erf::erfc;

/// Logistic function, evaluated without overflow for large |x|.
pub fn expit(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided p-value of a Wald statistic. `df = None` or an infinite df
/// selects the standard normal reference.
pub fn two_sided_p(stat: f64, df: Option<f64>) -> f64 {
    let a = stat.abs();
    if a.is_nan() {
        return f64::NAN;
    }
    match df {
        Some(nu) if nu.is_finite() => {
            // df is validated positive by the caller
            let t = StudentsT::new(0.0, 1.0, nu).expect("positive df");
            (2.0 * t.sf(a)).min(1.0)
        }
        _ => erfc(a / std::f64::consts::SQRT_2).min(1.0),
    }
}
