//! Special functions used by the analytical engine.
//!
//! Only the Gauss hypergeometric family `2F1(1, b; b + 1; z)` with
//! `0 < b < 1` and `z <= 0` is supported. This is the family behind the
//! interference kernel `Z(tau, alpha)`, where `b = 1 - 2/alpha`.
//!
//! Three summation routes are used depending on `x = -z`:
//!
//! * `x <= 0.5`: the defining power series.
//! * `0.5 < x <= 2`: the Pfaff transformation, which maps the argument to
//!   `w = x / (1 + x)` in `(1/3, 2/3]`.
//! * `x > 2`: the `1/z` connection formula. For this family one of the two
//!   connection terms collapses to a closed power of `x` and the other is
//!   again a member of the family, evaluated at `1/x < 0.5`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative size of a series term below which summation stops.
pub const SERIES_RELATIVE_TOLERANCE: f64 = 1e-15;

/// Hard cap on the number of series terms.
pub const SERIES_MAX_TERMS: usize = 10_000;

const DIRECT_LIMIT: f64 = 0.5;
const PFAFF_LIMIT: f64 = 2.0;

/// Result of a hypergeometric evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypergeometricEval {
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!(
            "log_gamma requires a positive finite argument, got {x}"
        )));
    }
    Ok(statrs::function::gamma::ln_gamma(x))
}

/// Summation route for the unit family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    Pfaff,
    Inversion,
}

impl Route {
    fn for_argument(x: f64) -> Route {
        if x <= DIRECT_LIMIT {
            Route::Direct
        } else if x <= PFAFF_LIMIT {
            Route::Pfaff
        } else {
            Route::Inversion
        }
    }
}

/// `2F1(a, b; c; z)` restricted to `a = 1`, `c = b + 1`, `0 < b < 1`, `z <= 0`.
pub fn gauss_2f1_unit_family(a: f64, b: f64, c: f64, z: f64) -> Result<HypergeometricEval> {
    if a != 1.0 {
        return Err(Error::Domain(format!(
            "only a = 1 is supported, got a = {a}"
        )));
    }
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!(
            "b must lie in (0, 1) (path-loss exponent above 2), got b = {b}"
        )));
    }
    if (c - (b + 1.0)).abs() > 1e-12 * c.abs().max(1.0) {
        return Err(Error::Domain(format!(
            "only c = b + 1 is supported, got b = {b}, c = {c}"
        )));
    }
    if !(z <= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "argument must be finite and non-positive, got z = {z}"
        )));
    }
    let eval = unit_family(b, -z, Route::for_argument(-z), SERIES_MAX_TERMS);
    if !eval.converged {
        return Err(Error::Numerical(format!(
            "hypergeometric series did not converge within {} terms (b = {b}, z = {z})",
            SERIES_MAX_TERMS
        )));
    }
    Ok(eval)
}

/// Evaluates `F(b; x) = 2F1(1, b; b + 1; -x)` for `x >= 0` along a chosen route.
///
/// Exposed so the routes can be cross-checked against each other; callers
/// should normally go through [`gauss_2f1_unit_family`].
pub fn unit_family(b: f64, x: f64, route: Route, max_terms: usize) -> HypergeometricEval {
    match route {
        Route::Direct => direct_series(b, x, max_terms),
        Route::Pfaff => pfaff_series(b, x, max_terms),
        Route::Inversion => {
            // F(b; x) = b/(b-1) * x^-1 * F(1-b; 1/x) + b*pi/sin(pi*b) * x^-b
            let inv = 1.0 / x;
            let inner_route = if inv <= DIRECT_LIMIT {
                Route::Direct
            } else {
                Route::Pfaff
            };
            let inner = unit_family(1.0 - b, inv, inner_route, max_terms);
            let reflected = b * PI / (PI * b).sin() * (-b * x.ln()).exp();
            HypergeometricEval {
                value: b / (b - 1.0) * inv * inner.value + reflected,
                terms_used: inner.terms_used,
                converged: inner.converged,
            }
        }
    }
}

// sum_k b/(b+k) (-x)^k
fn direct_series(b: f64, x: f64, max_terms: usize) -> HypergeometricEval {
    let mut sum = 1.0;
    let mut power = 1.0;
    for k in 1..max_terms {
        power *= -x;
        let term = b / (b + k as f64) * power;
        sum += term;
        if term.abs() < SERIES_RELATIVE_TOLERANCE * sum.abs() {
            return HypergeometricEval {
                value: sum,
                terms_used: k + 1,
                converged: true,
            };
        }
    }
    HypergeometricEval {
        value: sum,
        terms_used: max_terms,
        converged: x == 0.0,
    }
}

// (1+x)^-1 * 2F1(1, 1; b+1; w), w = x/(1+x)
fn pfaff_series(b: f64, x: f64, max_terms: usize) -> HypergeometricEval {
    let w = x / (1.0 + x);
    let c = b + 1.0;
    let mut sum = 1.0;
    let mut term = 1.0;
    let mut converged = x == 0.0;
    let mut used = max_terms;
    for k in 0..max_terms - 1 {
        let kf = k as f64;
        term *= (1.0 + kf) / (c + kf) * w;
        sum += term;
        if term.abs() < SERIES_RELATIVE_TOLERANCE * sum.abs() {
            converged = true;
            used = k + 2;
            break;
        }
    }
    HypergeometricEval {
        value: sum / (1.0 + x),
        terms_used: used,
        converged,
    }
}

/// Interference kernel `Z(tau, alpha) = 2 tau / (alpha - 2) * 2F1(1, 1 - 2/alpha; 2 - 2/alpha; -tau)`.
pub fn z_kernel(tau: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 2.0) {
        return Err(Error::Domain(format!(
            "path loss exponent must exceed 2, got {alpha}"
        )));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!(
            "SINR threshold must be finite and non-negative, got {tau}"
        )));
    }
    if tau == 0.0 {
        return Ok(0.0);
    }
    let b = 1.0 - 2.0 / alpha;
    if tau > PFAFF_LIMIT {
        // Closed rearrangement of the connection formula avoids the cancelling
        // prefactor: Z = (2 pi / alpha) / sin(2 pi / alpha) * tau^(2/alpha) - F(2/alpha; 1/tau).
        let delta = 2.0 / alpha;
        let inner = unit_family(delta, 1.0 / tau, Route::Direct, SERIES_MAX_TERMS);
        if !inner.converged {
            return Err(Error::Numerical(format!(
                "interference kernel series did not converge (tau = {tau}, alpha = {alpha})"
            )));
        }
        let lead = PI * delta / (PI * delta).sin() * (delta * tau.ln()).exp();
        return Ok(lead - inner.value);
    }
    let f = gauss_2f1_unit_family(1.0, b, b + 1.0, -tau)?;
    Ok(2.0 * tau / (alpha - 2.0) * f.value)
}
