//! Analytical coverage probability and ergodic rate.
//!
//! The serving distance `r` is integrated in the variable
//! `u = pi * (sum_j lambda_j C_j^2) * r^2`, under which the serving-distance
//! density becomes `exp(-u) du` for every tier. The coverage integrand is then
//!
//! ```text
//! exp(-tau sigma^2 / P_i * (u / (pi S_i))^(alpha/2) - (1 + rho Z(tau, alpha)) u)
//! ```
//!
//! with `S_i` the deployed weighted density and `rho` the ratio of active to
//! deployed weighted density. Interference uses the active densities while
//! the serving-distance law uses the deployed ones.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::model::{NetworkParams, TierDerived};
use crate::specfun::z_kernel;

pub use crate::quadrature::QuadratureSpec;
use crate::quadrature::integrate;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Coverage of a UE given that it is served by tier `i`.
    pub per_tier_conditional: Vec<f64>,
    /// `A_i` times the conditional coverage.
    pub per_tier_weighted: Vec<f64>,
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Average ergodic rate of a UE served by tier `i`, bps/Hz.
    pub per_tier_rate: Vec<f64>,
    /// `sum_i A_i R_i`, bps/Hz.
    pub mean_ue_rate: f64,
    /// `lambda~_i R_i`, bps/Hz/km².
    pub per_tier_area_rate: Vec<f64>,
    /// `sum_i lambda~_i R_i`, bps/Hz/km².
    pub area_rate_density: f64,
    /// Upper limit used for the spectral-efficiency integral.
    pub t_max: f64,
    /// Set when the integrand bound at `t_max` still exceeds the absolute tolerance.
    pub truncated: bool,
}

/// Which fully-loaded quantity to compute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineMode {
    Coverage { tau: f64 },
    Rate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineReport {
    Coverage(CoverageReport),
    Rate(RateReport),
}

fn check_inputs(params: &NetworkParams, derived: &[TierDerived], quad: &QuadratureSpec) -> Result<()> {
    params.validate()?;
    quad.validate()?;
    if derived.len() != params.num_tiers() {
        return Err(Error::InvalidParams(format!(
            "{} derived entries for {} tiers",
            derived.len(),
            params.num_tiers()
        )));
    }
    Ok(())
}

/// Per-tier integrand pieces shared by coverage and rate.
struct TierKernel {
    /// Active over deployed weighted density.
    load_ratio: f64,
    /// `sigma^2 / P_i * (1 / (pi S_i))^(alpha/2)`; zero when noise-free.
    noise_scale: f64,
    half_alpha: f64,
}

impl TierKernel {
    fn new(params: &NetworkParams, derived: &[TierDerived], i: usize) -> TierKernel {
        let deployed = params.weighted_density(i);
        let active = params.weighted_sum(i, derived.iter().map(|d| d.active_density));
        let half_alpha = params.alpha / 2.0;
        TierKernel {
            load_ratio: active / deployed,
            noise_scale: params.noise_power / params.tiers[i].tx_power
                * (PI * deployed).powf(-half_alpha),
            half_alpha,
        }
    }

    fn coverage(&self, tau: f64, alpha: f64, quad: &QuadratureSpec) -> Result<f64> {
        let decay = 1.0 + self.load_ratio * z_kernel(tau, alpha)?;
        if self.noise_scale == 0.0 || tau == 0.0 {
            return self.integrate_exponential(decay, 0.0, quad);
        }
        self.integrate_exponential(decay, tau * self.noise_scale, quad)
    }

    // int_0^inf exp(-noise * u^(alpha/2) - decay * u) du
    fn integrate_exponential(&self, decay: f64, noise: f64, quad: &QuadratureSpec) -> Result<f64> {
        let upper = -quad.absolute_tolerance.ln() / decay;
        let half_alpha = self.half_alpha;
        let value = integrate(
            |u| (-noise * u.powf(half_alpha) - decay * u).exp(),
            0.0,
            upper,
            quad,
        )?
        .value;
        Ok(value.clamp(0.0, 1.0))
    }

    fn rate(&self, alpha: f64, quad: &QuadratureSpec) -> Result<(f64, bool)> {
        let t_max = quad.rate_t_max;
        let mut failure = None;
        let value = integrate(
            |t| {
                let tau = t.exp2() - 1.0;
                let inner = if self.noise_scale == 0.0 {
                    z_kernel(tau, alpha).map(|z| 1.0 / (1.0 + self.load_ratio * z))
                } else {
                    self.coverage(tau, alpha, quad)
                };
                inner.unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    0.0
                })
            },
            0.0,
            t_max,
            quad,
        )?
        .value;
        if let Some(e) = failure {
            return Err(e);
        }
        let bound = 1.0 / (1.0 + self.load_ratio * z_kernel(t_max.exp2() - 1.0, alpha)?);
        Ok((value, bound > quad.absolute_tolerance))
    }
}

/// Coverage probability of a UE served by tier `i` at linear SINR threshold `tau`.
pub fn coverage_tier(
    params: &NetworkParams,
    derived: &[TierDerived],
    i: usize,
    tau: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_inputs(params, derived, quad)?;
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::Domain(format!(
            "SINR threshold must be finite and non-negative, got {tau}"
        )));
    }
    TierKernel::new(params, derived, i).coverage(tau, params.alpha, quad)
}

pub fn coverage_overall(
    params: &NetworkParams,
    derived: &[TierDerived],
    tau: f64,
    quad: &QuadratureSpec,
) -> Result<CoverageReport> {
    let per_tier_conditional = (0..params.num_tiers())
        .map(|i| coverage_tier(params, derived, i, tau, quad))
        .collect::<Result<Vec<_>>>()?;
    let per_tier_weighted: Vec<f64> = per_tier_conditional
        .iter()
        .zip(derived)
        .map(|(c, d)| c * d.association_prob)
        .collect();
    let overall = per_tier_weighted.iter().sum();
    Ok(CoverageReport {
        per_tier_conditional,
        per_tier_weighted,
        overall,
    })
}

/// Average ergodic rate (bps/Hz) of a UE served by tier `i`, with the
/// truncation flag of the outer integral.
pub fn rate_tier_with_flag(
    params: &NetworkParams,
    derived: &[TierDerived],
    i: usize,
    quad: &QuadratureSpec,
) -> Result<(f64, bool)> {
    check_inputs(params, derived, quad)?;
    TierKernel::new(params, derived, i).rate(params.alpha, quad)
}

pub fn rate_tier(
    params: &NetworkParams,
    derived: &[TierDerived],
    i: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    rate_tier_with_flag(params, derived, i, quad).map(|(r, _)| r)
}

pub fn rate_overall(
    params: &NetworkParams,
    derived: &[TierDerived],
    quad: &QuadratureSpec,
) -> Result<RateReport> {
    let mut per_tier_rate = Vec::with_capacity(params.num_tiers());
    let mut truncated = false;
    for i in 0..params.num_tiers() {
        let (r, t) = rate_tier_with_flag(params, derived, i, quad)?;
        per_tier_rate.push(r);
        truncated |= t;
    }
    let mean_ue_rate = per_tier_rate
        .iter()
        .zip(derived)
        .map(|(r, d)| r * d.association_prob)
        .sum();
    let per_tier_area_rate: Vec<f64> = per_tier_rate
        .iter()
        .zip(derived)
        .map(|(r, d)| r * d.active_density)
        .collect();
    let area_rate_density = per_tier_area_rate.iter().sum();
    Ok(RateReport {
        per_tier_rate,
        mean_ue_rate,
        per_tier_area_rate,
        area_rate_density,
        t_max: quad.rate_t_max,
        truncated,
    })
}

/// The same quantities with idle mode disabled, every BS transmitting.
pub fn fully_loaded_baseline(
    params: &NetworkParams,
    mode: BaselineMode,
    quad: &QuadratureSpec,
) -> Result<BaselineReport> {
    let derived = params.fully_loaded();
    match mode {
        BaselineMode::Coverage { tau } => {
            coverage_overall(params, &derived, tau, quad).map(BaselineReport::Coverage)
        }
        BaselineMode::Rate => rate_overall(params, &derived, quad).map(BaselineReport::Rate),
    }
}

/// Rate from coverage: `R = (1 / ln 2) * int_0^tau_max P_cov(tau) / (1 + tau) dtau`.
///
/// This is an independent route to the ergodic rate through the coverage
/// integral, used for cross-checking; `tau_max = 2^t_max - 1`.
pub fn rate_from_coverage(
    params: &NetworkParams,
    derived: &[TierDerived],
    i: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    check_inputs(params, derived, quad)?;
    let kernel = TierKernel::new(params, derived, i);
    let tau_max = quad.rate_t_max.exp2() - 1.0;
    // tau = e^s - 1 spreads the slowly decaying tail over a finite range
    let s_max = tau_max.ln_1p();
    let mut failure = None;
    let value = integrate(
        |s| {
            let tau = s.exp_m1();
            kernel
                .coverage(tau, params.alpha, quad)
                .unwrap_or_else(|e| {
                    failure.get_or_insert(e);
                    0.0
                })
        },
        0.0,
        s_max,
        quad,
    )?
    .value;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(value / LN_2)
}
