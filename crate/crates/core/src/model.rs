//! Scenario parameters and the per-tier load model.
//!
//! All powers are linear (milliwatts), distances in kilometres and
//! densities per square kilometre. Path loss is `r^-alpha` with `r` in km and
//! no reference-distance constant, so a non-zero noise power is only
//! meaningful relative to that convention.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::specfun::log_gamma;

/// Default shape `q` and rate constant `b` of the gamma cell-area fit.
pub const DEFAULT_LOAD_SHAPE: f64 = 3.5;

/// Tail bound at which the idle-probability series stops.
pub const IDLE_SERIES_TAIL: f64 = 1e-12;

const IDLE_SERIES_MAX_TERMS: usize = 1_000_000;

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// One base-station tier.
#[derive(Debug, Clone, PartialEq)]
pub struct TierParams {
    pub label: String,
    /// Transmit power in mW.
    pub tx_power: f64,
    /// Deployment density in BSs per km².
    pub density: f64,
}

impl TierParams {
    pub fn new(label: impl Into<String>, tx_power: f64, density: f64) -> TierParams {
        TierParams {
            label: label.into(),
            tx_power,
            density,
        }
    }

    pub fn from_dbm(label: impl Into<String>, power_dbm: f64, density: f64) -> TierParams {
        TierParams::new(label, dbm_to_mw(power_dbm), density)
    }
}

/// A complete network scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub tiers: Vec<TierParams>,
    /// Path-loss exponent, must exceed 2.
    pub alpha: f64,
    /// UEs per km².
    pub ue_density: f64,
    /// Noise power in mW; zero means interference limited.
    pub noise_power: f64,
    /// Shape `q` of the gamma cell-area distribution.
    pub shape_q: f64,
    /// Rate constant `b` of the gamma cell-area distribution.
    pub rate_b: f64,
}

/// Quantities derived for one tier from the load model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierDerived {
    pub association_prob: f64,
    pub idle_prob: f64,
    /// Density of BSs with at least one attached UE, per km².
    pub active_density: f64,
}

/// Truncated-series evaluation with the number of terms summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
}

impl NetworkParams {
    /// Interference-limited scenario with the default load-model constants.
    pub fn new(tiers: Vec<TierParams>, alpha: f64, ue_density: f64) -> Result<NetworkParams> {
        let params = NetworkParams {
            tiers,
            alpha,
            ue_density,
            noise_power: 0.0,
            shape_q: DEFAULT_LOAD_SHAPE,
            rate_b: DEFAULT_LOAD_SHAPE,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_noise(mut self, noise_power: f64) -> Result<NetworkParams> {
        self.noise_power = noise_power;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tiers.is_empty() {
            return Err(Error::InvalidParams("at least one tier is required".into()));
        }
        for t in &self.tiers {
            if !(t.tx_power > 0.0 && t.tx_power.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "tier {}: transmit power must be positive, got {}",
                    t.label, t.tx_power
                )));
            }
            if !(t.density > 0.0 && t.density.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "tier {}: density must be positive, got {}",
                    t.label, t.density
                )));
            }
        }
        if !(self.alpha > 2.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "path-loss exponent must exceed 2, got {}",
                self.alpha
            )));
        }
        if !(self.ue_density > 0.0 && self.ue_density.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "UE density must be positive, got {}",
                self.ue_density
            )));
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "noise power must be non-negative, got {}",
                self.noise_power
            )));
        }
        if !(self.shape_q > 0.0 && self.rate_b > 0.0) {
            return Err(Error::InvalidParams(
                "load-model constants q and b must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn num_tiers(&self) -> usize {
        self.tiers.len()
    }

    /// `C_j = (P_j / P_i)^(1/alpha)`, the distance scale of tier `j` seen from tier `i`.
    ///
    /// Panics if either index is out of range.
    pub fn power_ratio(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        (self.tiers[j].tx_power / self.tiers[i].tx_power).powf(1.0 / self.alpha)
    }

    /// `sum_j lambda_j C_j^2` relative to tier `i`: the density of the
    /// process of competing servers after rescaling distances to tier `i`.
    pub fn weighted_density(&self, i: usize) -> f64 {
        (0..self.num_tiers())
            .map(|j| self.tiers[j].density * self.power_ratio(i, j).powi(2))
            .sum()
    }

    /// `sum_j w_j C_j^2` relative to tier `i` for arbitrary per-tier weights.
    pub fn weighted_sum(&self, i: usize, weights: impl IntoIterator<Item = f64>) -> f64 {
        weights
            .into_iter()
            .enumerate()
            .map(|(j, w)| w * self.power_ratio(i, j).powi(2))
            .sum()
    }

    /// Probability that the typical UE is served by tier `i` under
    /// maximum average received power association.
    pub fn association_probability(&self, i: usize) -> f64 {
        self.tiers[i].density / self.weighted_density(i)
    }

    /// Gamma density of the Voronoi cell area of tier `i`, shape `q` and rate `b lambda_i`.
    pub fn cell_size_pdf(&self, i: usize, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!(
                "cell area must be positive, got {x}"
            )));
        }
        let rate = self.rate_b * self.tiers[i].density;
        let q = self.shape_q;
        let ln = q * rate.ln() + (q - 1.0) * x.ln() - rate * x - ln_gamma(q);
        Ok(ln.exp())
    }

    /// Probability that a tier-`i` cell contains exactly `n` UEs (negative binomial).
    pub fn ue_count_pmf(&self, i: usize, n: u64) -> f64 {
        self.ln_ue_count_pmf(i, n).exp()
    }

    fn ln_ue_count_pmf(&self, i: usize, n: u64) -> f64 {
        let q = self.shape_q;
        let cell_rate = self.rate_b * self.tiers[i].density;
        let total = self.ue_density + cell_rate;
        let nf = n as f64;
        let mut ln = ln_gamma(nf + q) - ln_gamma(nf + 1.0) - ln_gamma(q)
            + q * (cell_rate / total).ln();
        if n > 0 {
            ln += nf * (self.ue_density / total).ln();
        }
        ln
    }

    /// Probability that a tier-`i` BS has no attached UE, from the
    /// probability generating function of the cell load:
    /// `[b lambda_i / (b lambda_i + lambda_u A_i)]^q`.
    pub fn idle_probability(&self, i: usize) -> f64 {
        let cell_rate = self.rate_b * self.tiers[i].density;
        let a = self.association_probability(i);
        (cell_rate / (cell_rate + self.ue_density * a)).powf(self.shape_q)
    }

    /// The same quantity as [`idle_probability`](Self::idle_probability),
    /// summed term by term: `sum_n P[N_i = n] (1 - A_i)^n`. Each of the `n`
    /// UEs in the cell is attached to the BS independently with probability `A_i`.
    pub fn idle_probability_series(&self, i: usize) -> SeriesSum {
        let miss = 1.0 - self.association_probability(i);
        let q = self.shape_q;
        let p = self.ue_density / (self.ue_density + self.rate_b * self.tiers[i].density);
        let mut sum = 0.0;
        for n in 0..IDLE_SERIES_MAX_TERMS as u64 {
            let term = if n == 0 {
                self.ue_count_pmf(i, 0)
            } else if miss <= 0.0 {
                0.0
            } else {
                (self.ln_ue_count_pmf(i, n) + n as f64 * miss.ln()).exp()
            };
            sum += term;
            // geometric bound on the remaining terms
            let nf = n as f64;
            let growth = if q >= 1.0 { (nf + q) / (nf + 1.0) } else { 1.0 };
            let ratio = growth * p * miss;
            if ratio < 1.0 && term * ratio / (1.0 - ratio) < IDLE_SERIES_TAIL {
                return SeriesSum {
                    value: sum,
                    terms: n as usize + 1,
                };
            }
        }
        SeriesSum {
            value: sum,
            terms: IDLE_SERIES_MAX_TERMS,
        }
    }

    /// Density of active tier-`i` BSs, `lambda_i (1 - P_off)`.
    pub fn active_density(&self, i: usize) -> f64 {
        self.tiers[i].density * (1.0 - self.idle_probability(i))
    }

    /// Density of the distance from the typical UE to its tier-`i` server,
    /// given that it is served by tier `i`.
    pub fn serving_distance_pdf(&self, i: usize, r: f64) -> f64 {
        if r < 0.0 {
            return 0.0;
        }
        let s = self.weighted_density(i);
        2.0 * PI * self.tiers[i].density * r / self.association_probability(i)
            * (-PI * s * r * r).exp()
    }

    pub fn serving_distance_cdf(&self, i: usize, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        -(-PI * self.weighted_density(i) * r * r).exp_m1()
    }

    pub fn derive_tier(&self, i: usize) -> TierDerived {
        let idle = self.idle_probability(i);
        TierDerived {
            association_prob: self.association_probability(i),
            idle_prob: idle,
            active_density: self.tiers[i].density * (1.0 - idle),
        }
    }

    /// Per-tier derived quantities with idle mode enabled.
    pub fn derive_tiers(&self) -> Vec<TierDerived> {
        (0..self.num_tiers()).map(|i| self.derive_tier(i)).collect()
    }

    /// Per-tier derived quantities with every BS transmitting.
    pub fn fully_loaded(&self) -> Vec<TierDerived> {
        (0..self.num_tiers())
            .map(|i| TierDerived {
                association_prob: self.association_probability(i),
                idle_prob: 0.0,
                active_density: self.tiers[i].density,
            })
            .collect()
    }
}

fn ln_gamma(x: f64) -> f64 {
    log_gamma(x).expect("load-model gamma arguments are positive")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadratureSpec};
    use approx::assert_relative_eq;
    use statrs::distribution::{Continuous, Gamma};

    fn two_tier(lambda2: f64) -> NetworkParams {
        NetworkParams::new(
            vec![
                TierParams::from_dbm("tier1", 30.0, 100.0),
                TierParams::from_dbm("tier2", 24.0, lambda2),
            ],
            3.75,
            300.0,
        )
        .unwrap()
    }

    fn single(lambda: f64, ue: f64) -> NetworkParams {
        NetworkParams::new(vec![TierParams::new("t", 1.0, lambda)], 3.75, ue).unwrap()
    }

    #[test]
    fn power_ratios() {
        let p = two_tier(200.0);
        assert_eq!(p.power_ratio(0, 0), 1.0);
        let expected = (dbm_to_mw(24.0) / 1000.0).powf(1.0 / 3.75);
        assert_relative_eq!(p.power_ratio(0, 1), expected, max_relative = 1e-14);
        assert!((p.power_ratio(0, 1) - 0.69183).abs() < 1e-5);
        let macro_pico = NetworkParams::new(
            vec![
                TierParams::from_dbm("m", 46.0, 10.0),
                TierParams::from_dbm("p", 24.0, 10.0),
            ],
            3.75,
            300.0,
        )
        .unwrap();
        assert!((macro_pico.power_ratio(0, 1) - 0.259_020_020_453_132_4).abs() < 1e-13);
        let equal = NetworkParams::new(
            vec![TierParams::new("a", 5.0, 1.0), TierParams::new("b", 5.0, 2.0)],
            4.0,
            1.0,
        )
        .unwrap();
        assert_eq!(equal.power_ratio(0, 1), 1.0);
    }

    #[test]
    fn association_examples() {
        assert_eq!(single(50.0, 300.0).association_probability(0), 1.0);
        let sym = NetworkParams::new(
            vec![TierParams::new("a", 1.0, 7.0), TierParams::new("b", 1.0, 7.0)],
            4.0,
            10.0,
        )
        .unwrap();
        assert_eq!(sym.association_probability(0), 0.5);
        assert_eq!(sym.association_probability(1), 0.5);
        let p = two_tier(200.0);
        let c = p.power_ratio(0, 1);
        let expected = 100.0 / (100.0 + 200.0 * c * c);
        assert_relative_eq!(p.association_probability(0), expected, max_relative = 1e-14);
        assert!((p.association_probability(0) - 0.510_918_276_397_286_8).abs() < 1e-13);
    }

    #[test]
    fn cell_size_pdf_matches_gamma() {
        let p = single(100.0, 300.0);
        let oracle = Gamma::new(3.5, 350.0).unwrap();
        for &x in &[1e-4, 0.003, 0.01, 0.02, 0.05] {
            assert_relative_eq!(p.cell_size_pdf(0, x).unwrap(), oracle.pdf(x), max_relative = 1e-12);
        }
        assert!((p.cell_size_pdf(0, 0.01).unwrap() - 72.883_842_365_720_37).abs() < 1e-10);
        assert!(p.cell_size_pdf(0, 0.0).is_err());
        assert!(p.cell_size_pdf(0, -1.0).is_err());

        let spec = QuadratureSpec { absolute_tolerance: 1e-13, relative_tolerance: 1e-12, ..Default::default() };
        let mass = integrate(|x| p.cell_size_pdf(0, x).unwrap_or(0.0), 0.0, 0.2, &spec).unwrap();
        assert!((mass.value - 1.0).abs() < 1e-9);
        let mean = integrate(|x| x * p.cell_size_pdf(0, x).unwrap_or(0.0), 0.0, 0.2, &spec).unwrap();
        assert!((mean.value - 0.01).abs() < 1e-9);
    }

    fn mixture_oracle(p: &NetworkParams, n: u64) -> f64 {
        let shape = p.shape_q;
        let rate = p.rate_b * p.tiers[0].density;
        let gamma = Gamma::new(shape, rate).unwrap();
        let lu = p.ue_density;
        let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
        let spec = QuadratureSpec { absolute_tolerance: 1e-14, relative_tolerance: 1e-11, ..Default::default() };
        integrate(
            |x| {
                if x <= 0.0 {
                    return 0.0;
                }
                (n as f64 * (lu * x).ln() - lu * x - ln_fact).exp() * gamma.pdf(x)
            },
            0.0,
            0.5,
            &spec,
        )
        .unwrap()
        .value
    }

    #[test]
    fn ue_count_pmf_matches_mixture_integral() {
        let p = single(100.0, 300.0);
        assert!((p.ue_count_pmf(0, 0) - 0.114_562_216_339_068_1).abs() < 1e-13);
        assert_relative_eq!(p.ue_count_pmf(0, 0), (350.0f64 / 650.0).powf(3.5), max_relative = 1e-13);
        for n in [0u64, 1, 5, 20] {
            let oracle = mixture_oracle(&p, n);
            assert!((p.ue_count_pmf(0, n) - oracle).abs() < 1e-8, "n = {n}");
        }
    }

    #[test]
    fn ue_count_pmf_normalised_with_expected_mean() {
        let p = single(100.0, 300.0);
        let (mut total, mut mean) = (0.0, 0.0);
        for n in 0..2000u64 {
            let v = p.ue_count_pmf(0, n);
            total += v;
            mean += n as f64 * v;
        }
        assert!(total >= 1.0 - 1e-12 && total <= 1.0 + 1e-12);
        assert!((mean - 3.0).abs() < 1e-9);
        // large n stays finite in log space
        assert!(p.ue_count_pmf(0, 5000).is_finite());
    }

    #[test]
    fn idle_probability_examples() {
        let full = single(100.0, 300.0);
        assert_relative_eq!(full.idle_probability(0), full.ue_count_pmf(0, 0), max_relative = 1e-13);
        assert!((full.idle_probability(0) - 0.114_562_216_339_068_1).abs() < 1e-13);
        let series = full.idle_probability_series(0);
        assert_eq!(series.terms, 1);
        assert!((series.value - full.idle_probability(0)).abs() < 1e-15);

        // two equal-power equal-density tiers give A = 0.5
        let half = NetworkParams::new(
            vec![TierParams::new("a", 1.0, 100.0), TierParams::new("b", 1.0, 100.0)],
            3.75,
            300.0,
        )
        .unwrap();
        assert_eq!(half.association_probability(0), 0.5);
        assert_relative_eq!(half.idle_probability(0), 0.7f64.powf(3.5), max_relative = 1e-13);
        assert!((half.idle_probability(0) - 0.286_974_389_101_187_9).abs() < 1e-13);
        assert!((half.idle_probability_series(0).value - 0.7f64.powf(3.5)).abs() < 1e-12);
        assert!((half.active_density(0) - 71.302_561_089_881_21).abs() < 1e-10);
    }

    #[test]
    fn active_density_examples() {
        let p = single(100.0, 300.0);
        let expected = 100.0 * (1.0 - (1.0f64 + 300.0 / 350.0).powf(-3.5));
        assert_relative_eq!(p.active_density(0), expected, max_relative = 1e-13);
        assert!((p.active_density(0) - 88.543_778_366_093_19).abs() < 1e-10);
        let fl = p.fully_loaded();
        assert_eq!(fl[0].active_density, 100.0);
        assert_eq!(fl[0].idle_prob, 0.0);
    }

    #[test]
    fn serving_distance_pdf_normalised() {
        let spec = QuadratureSpec { absolute_tolerance: 1e-13, relative_tolerance: 1e-12, ..Default::default() };
        for p in [single(100.0, 300.0), two_tier(300.0)] {
            for i in 0..p.num_tiers() {
                let m = integrate(|r| p.serving_distance_pdf(i, r), 0.0, 1.0, &spec).unwrap();
                assert!((m.value - 1.0).abs() < 1e-9);
                let half = integrate(|r| p.serving_distance_pdf(i, r), 0.0, 0.03, &spec).unwrap();
                assert!((half.value - p.serving_distance_cdf(i, 0.03)).abs() < 1e-10);
            }
        }
        let p = single(40.0, 300.0);
        for &r in &[0.01, 0.05, 0.1] {
            let rayleigh = 2.0 * PI * 40.0 * r * (-PI * 40.0 * r * r).exp();
            assert_relative_eq!(p.serving_distance_pdf(0, r), rayleigh, max_relative = 1e-13);
        }
    }

    #[test]
    fn rejects_invalid_params() {
        let t = || vec![TierParams::new("a", 1.0, 1.0)];
        assert!(NetworkParams::new(vec![], 3.0, 1.0).is_err());
        assert!(NetworkParams::new(t(), 2.0, 1.0).is_err());
        assert!(NetworkParams::new(t(), 3.0, 0.0).is_err());
        assert!(NetworkParams::new(vec![TierParams::new("a", 0.0, 1.0)], 3.0, 1.0).is_err());
        assert!(NetworkParams::new(vec![TierParams::new("a", 1.0, -1.0)], 3.0, 1.0).is_err());
        assert!(NetworkParams::new(t(), 3.0, 1.0).unwrap().with_noise(-1.0).is_err());
    }
}
