//! Monte Carlo simulator for the multi-tier network.
//!
//! Each trial samples every BS tier and the UEs as independent Poisson point
//! processes on a square window, attaches every UE to the BS with the largest
//! average received power `P_j d^-alpha`, and switches off BSs without UEs.
//! Probe UEs drawn from the (interior) UEs then see Rayleigh-faded signal and
//! interference from the active BSs only.
//!
//! Trials are independent given their random streams and run on the ambient
//! rayon pool; per-trial results are collected in trial order before any
//! reduction, so estimates are bit-identical for any worker count.

pub mod geometry;
pub mod rng;

use std::io::{self, Write};

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::NetworkParams;

pub use geometry::{Boundary, Point, SpatialGrid, Window};
pub use rng::{stream, StreamRole};

/// Distances below this (km) are clamped to avoid infinite received power.
pub const MIN_DISTANCE_KM: f64 = 1e-9;

/// Cap on `log2(1 + SINR)`, matching the analytical rate integral.
pub const RATE_CAP: f64 = 40.0;

const MAX_RESAMPLE_ATTEMPTS: u8 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Side of the square window in km.
    pub window_side: f64,
    pub trials: usize,
    /// Fading realisations per probe UE.
    pub fading_draws_per_trial: usize,
    /// Probe UEs per trial. Probes of one trial share geometry, so per-trial
    /// means are the independent samples for overall estimates.
    pub probes_per_trial: usize,
    pub seed: u64,
    pub boundary: Boundary,
    /// Rayleigh fading on every link; when false all channel gains are 1.
    pub rayleigh_fading: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            window_side: 4.0,
            trials: 200,
            fading_draws_per_trial: 20,
            probes_per_trial: 1,
            seed: 1,
            boundary: Boundary::Torus,
            rayleigh_fading: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_side > 0.0 && self.window_side.is_finite()) {
            return Err(Error::InvalidParams("window side must be positive".into()));
        }
        if self.trials < 1 || self.fading_draws_per_trial < 1 || self.probes_per_trial < 1 {
            return Err(Error::InvalidParams(
                "trials, fading draws and probes per trial must be at least 1".into(),
            ));
        }
        if let Boundary::GuardZone { width } = self.boundary {
            if !(width >= 0.0 && 2.0 * width < self.window_side) {
                return Err(Error::InvalidParams(format!(
                    "guard width {width} leaves no interior in a {} km window",
                    self.window_side
                )));
            }
        }
        Ok(())
    }

    pub fn window(&self) -> Window {
        Window {
            side: self.window_side,
            boundary: self.boundary,
        }
    }

    /// Warnings for windows too small to hold enough points.
    pub fn warnings(&self, params: &NetworkParams) -> Vec<String> {
        let area = self.window_side * self.window_side;
        let mut out = Vec::new();
        for t in &params.tiers {
            if t.density * area < 50.0 {
                out.push(format!(
                    "tier {}: expected {:.1} BSs in the window (< 50)",
                    t.label,
                    t.density * area
                ));
            }
        }
        if params.ue_density * area < 100.0 {
            out.push(format!(
                "expected {:.1} UEs in the window (< 100)",
                params.ue_density * area
            ));
        }
        out
    }
}

/// Sample mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub mean: f64,
    pub half_width_95: f64,
    pub samples: usize,
}

impl EstimateWithCI {
    pub fn from_samples(xs: &[f64]) -> EstimateWithCI {
        let n = xs.len();
        if n == 0 {
            return EstimateWithCI {
                mean: f64::NAN,
                half_width_95: f64::NAN,
                samples: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let half_width_95 = if n < 2 {
            f64::INFINITY
        } else {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        };
        EstimateWithCI {
            mean,
            half_width_95,
            samples: n,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.half_width_95
    }
}

/// BS and UE positions before association.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentDraft {
    pub bs_positions: Vec<Vec<Point>>,
    pub ue_positions: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Serving {
    pub tier: usize,
    pub index: usize,
}

/// One sampled and associated realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub window: Window,
    pub bs_positions: Vec<Vec<Point>>,
    pub ue_positions: Vec<Point>,
    pub association: Vec<Serving>,
    /// Distance (km) from each UE to its serving BS.
    pub serving_distance: Vec<f64>,
    pub active_mask: Vec<Vec<bool>>,
}

impl Deployment {
    pub fn active_count(&self, tier: usize) -> usize {
        self.active_mask[tier].iter().filter(|&&a| a).count()
    }

    /// Writes one line per point: `tier x y active_flag` for BSs (tier
    /// numbered from 1) and `ue x y serving_tier serving_index` for UEs.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (t, (points, mask)) in self.bs_positions.iter().zip(&self.active_mask).enumerate() {
            for (p, &active) in points.iter().zip(mask) {
                writeln!(out, "{} {} {} {}", t + 1, p.x, p.y, u8::from(active))?;
            }
        }
        for (p, s) in self.ue_positions.iter().zip(&self.association) {
            writeln!(out, "ue {} {} {} {}", p.x, p.y, s.tier + 1, s.index)?;
        }
        Ok(())
    }
}

/// Homogeneous Poisson point process of `density` points per km² on a
/// `window_side` x `window_side` square.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, window_side: f64, rng: &mut R) -> Vec<Point> {
    let mean = density * window_side * window_side;
    if !(mean > 0.0) {
        return Vec::new();
    }
    let count = Poisson::new(mean)
        .expect("positive finite Poisson mean")
        .sample(rng) as usize;
    (0..count)
        .map(|_| {
            Point::new(
                rng.random::<f64>() * window_side,
                rng.random::<f64>() * window_side,
            )
        })
        .collect()
}

/// Maximum average received power association and idle-mode activation.
pub fn associate(draft: DeploymentDraft, params: &NetworkParams, window: Window) -> Result<Deployment> {
    if draft.bs_positions.len() != params.num_tiers() {
        return Err(Error::InvalidParams(format!(
            "{} BS tiers in the deployment, {} in the parameters",
            draft.bs_positions.len(),
            params.num_tiers()
        )));
    }
    if draft.bs_positions.iter().all(|t| t.is_empty()) {
        return Err(Error::Config("no base stations in any tier".into()));
    }
    let grids: Vec<SpatialGrid> = draft
        .bs_positions
        .iter()
        .map(|pts| SpatialGrid::new(window, pts))
        .collect();
    // maximising P d^-alpha == minimising d^2 P^(-2/alpha)
    let weights: Vec<f64> = params
        .tiers
        .iter()
        .map(|t| t.tx_power.powf(-2.0 / params.alpha))
        .collect();
    let min_d2 = MIN_DISTANCE_KM * MIN_DISTANCE_KM;
    let mut association = Vec::with_capacity(draft.ue_positions.len());
    let mut serving_distance = Vec::with_capacity(draft.ue_positions.len());
    let mut active_mask: Vec<Vec<bool>> = draft
        .bs_positions
        .iter()
        .map(|t| vec![false; t.len()])
        .collect();
    for &ue in &draft.ue_positions {
        let mut best: Option<(Serving, f64, f64)> = None;
        for (tier, grid) in grids.iter().enumerate() {
            if let Some((index, d2)) = grid.nearest(ue) {
                let d2 = d2.max(min_d2);
                let key = d2 * weights[tier];
                if best.is_none_or(|(_, k, _)| key < k) {
                    best = Some((Serving { tier, index }, key, d2));
                }
            }
        }
        let (serving, _, d2) = best.expect("at least one BS exists");
        active_mask[serving.tier][serving.index] = true;
        association.push(serving);
        serving_distance.push(d2.sqrt());
    }
    Ok(Deployment {
        window,
        bs_positions: draft.bs_positions,
        ue_positions: draft.ue_positions,
        association,
        serving_distance,
        active_mask,
    })
}

/// Which BSs interfere with a probe UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterferenceMask {
    /// Only BSs with at least one attached UE transmit.
    ActiveOnly,
    /// Every BS transmits (fully loaded).
    All,
}

/// Mean received powers at one probe UE.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub serving_tier: usize,
    pub serving_gain: f64,
    pub interferer_gains: Vec<f64>,
}

impl LinkBudget {
    pub fn new(dep: &Deployment, params: &NetworkParams, ue: usize, mask: InterferenceMask) -> LinkBudget {
        let serving = dep.association[ue];
        let half_alpha = params.alpha / 2.0;
        let min_d2 = MIN_DISTANCE_KM * MIN_DISTANCE_KM;
        let at = dep.ue_positions[ue];
        let gain = |tier: usize, p: Point| {
            let d2 = dep.window.distance2(at, p).max(min_d2);
            params.tiers[tier].tx_power * d2.powf(-half_alpha)
        };
        let mut interferer_gains = Vec::new();
        for (tier, points) in dep.bs_positions.iter().enumerate() {
            for (index, &p) in points.iter().enumerate() {
                if tier == serving.tier && index == serving.index {
                    continue;
                }
                if mask == InterferenceMask::ActiveOnly && !dep.active_mask[tier][index] {
                    continue;
                }
                interferer_gains.push(gain(tier, p));
            }
        }
        LinkBudget {
            serving_tier: serving.tier,
            serving_gain: gain(serving.tier, dep.bs_positions[serving.tier][serving.index]),
            interferer_gains,
        }
    }

    /// One SINR realisation.
    pub fn sample_sinr<R: Rng + ?Sized>(&self, noise_power: f64, fading: bool, rng: &mut R) -> f64 {
        if !fading {
            let interference: f64 = self.interferer_gains.iter().sum();
            return self.serving_gain / (interference + noise_power);
        }
        let h0: f64 = Exp1.sample(rng);
        let interference: f64 = self
            .interferer_gains
            .iter()
            .map(|g| {
                let h: f64 = Exp1.sample(rng);
                g * h
            })
            .sum();
        self.serving_gain * h0 / (interference + noise_power)
    }
}

/// One SINR sample (linear) for UE `typical_ue`, interference from active BSs only.
pub fn measure_sinr<R: Rng + ?Sized>(
    dep: &Deployment,
    params: &NetworkParams,
    typical_ue: usize,
    rng: &mut R,
) -> f64 {
    LinkBudget::new(dep, params, typical_ue, InterferenceMask::ActiveOnly).sample_sinr(
        params.noise_power,
        true,
        rng,
    )
}

/// SINR of `typical_ue` with idle mode and with every BS transmitting,
/// computed from the same fading draws: `(idle_mode, fully_loaded)`.
pub fn measure_sinr_coupled<R: Rng + ?Sized>(
    dep: &Deployment,
    params: &NetworkParams,
    typical_ue: usize,
    rng: &mut R,
) -> (f64, f64) {
    let serving = dep.association[typical_ue];
    let at = dep.ue_positions[typical_ue];
    let half_alpha = params.alpha / 2.0;
    let min_d2 = MIN_DISTANCE_KM * MIN_DISTANCE_KM;
    let mut signal = 0.0;
    let (mut active, mut all) = (0.0, 0.0);
    for (tier, points) in dep.bs_positions.iter().enumerate() {
        for (index, &p) in points.iter().enumerate() {
            let h: f64 = Exp1.sample(rng);
            let d2 = dep.window.distance2(at, p).max(min_d2);
            let rx = params.tiers[tier].tx_power * d2.powf(-half_alpha) * h;
            if tier == serving.tier && index == serving.index {
                signal = rx;
            } else {
                all += rx;
                if dep.active_mask[tier][index] {
                    active += rx;
                }
            }
        }
    }
    (
        signal / (active + params.noise_power),
        signal / (all + params.noise_power),
    )
}

fn log2_rate(sinr: f64) -> f64 {
    sinr.ln_1p().min(RATE_CAP * std::f64::consts::LN_2) / std::f64::consts::LN_2
}

/// Samples and associates the deployment of one trial. Attempts whose
/// window holds no BS or no measurable UE are redrawn from fresh streams;
/// the number of redraws is returned alongside.
pub fn sample_deployment(params: &NetworkParams, config: &SimConfig, trial: u64) -> Result<(Deployment, u8)> {
    let window = config.window();
    for attempt in 0..MAX_RESAMPLE_ATTEMPTS {
        let bs_positions: Vec<Vec<Point>> = params
            .tiers
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut rng = stream(config.seed, trial, attempt, StreamRole::Tier(i));
                sample_ppp(t.density, config.window_side, &mut rng)
            })
            .collect();
        let mut rng = stream(config.seed, trial, attempt, StreamRole::Users);
        let ue_positions = sample_ppp(params.ue_density, config.window_side, &mut rng);
        let measurable = ue_positions.iter().any(|&p| window.is_interior(p));
        if !measurable || bs_positions.iter().all(|t| t.is_empty()) {
            continue;
        }
        let dep = associate(
            DeploymentDraft {
                bs_positions,
                ue_positions,
            },
            params,
            window,
        )?;
        return Ok((dep, attempt));
    }
    Err(Error::Numerical(format!(
        "trial {trial}: no usable deployment after {MAX_RESAMPLE_ATTEMPTS} attempts"
    )))
}

fn check(params: &NetworkParams, config: &SimConfig) -> Result<()> {
    params.validate()?;
    config.validate()
}

fn run_trials<T, F>(params: &NetworkParams, config: &SimConfig, per_trial: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(u64, &Deployment) -> T + Sync,
{
    check(params, config)?;
    let results: Vec<Result<(T, u8)>> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let (dep, attempts) = sample_deployment(params, config, trial)?;
            Ok((per_trial(trial, &dep), attempts))
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    let mut resampled = 0usize;
    for r in results {
        let (value, attempts) = r?;
        resampled += attempts as usize;
        out.push(value);
    }
    Ok((out, resampled))
}

/// Per-tier fraction of BSs without attached UEs.
#[derive(Debug, Clone, PartialEq)]
pub struct IdleEstimate {
    pub per_tier: Vec<EstimateWithCI>,
    /// Active BSs per km², per tier.
    pub active_density: Vec<EstimateWithCI>,
    pub resampled_trials: usize,
}

pub fn estimate_idle_fraction(params: &NetworkParams, config: &SimConfig) -> Result<IdleEstimate> {
    let window = config.window();
    let (trials, resampled) = run_trials(params, config, |_, dep| interior_idle_counts(dep, window))?;
    Ok(summarize_idle(&trials, params.num_tiers(), interior_area(config), resampled))
}

fn interior_area(config: &SimConfig) -> f64 {
    match config.boundary {
        Boundary::Torus => config.window_side * config.window_side,
        Boundary::GuardZone { width } => (config.window_side - 2.0 * width).powi(2),
    }
}

// (BSs, idle BSs) in the measurable region, per tier
fn interior_idle_counts(dep: &Deployment, window: Window) -> Vec<(usize, usize)> {
    dep.bs_positions
        .iter()
        .zip(&dep.active_mask)
        .map(|(points, mask)| {
            let (mut total, mut idle) = (0usize, 0usize);
            for (p, &active) in points.iter().zip(mask) {
                if window.is_interior(*p) {
                    total += 1;
                    idle += usize::from(!active);
                }
            }
            (total, idle)
        })
        .collect()
}

fn summarize_idle(trials: &[Vec<(usize, usize)>], tiers: usize, area: f64, resampled: usize) -> IdleEstimate {
    let mut per_tier = Vec::new();
    let mut active_density = Vec::new();
    for t in 0..tiers {
        let fractions: Vec<f64> = trials
            .iter()
            .filter(|c| c[t].0 > 0)
            .map(|c| c[t].1 as f64 / c[t].0 as f64)
            .collect();
        let densities: Vec<f64> = trials
            .iter()
            .map(|c| (c[t].0 - c[t].1) as f64 / area)
            .collect();
        per_tier.push(EstimateWithCI::from_samples(&fractions));
        active_density.push(EstimateWithCI::from_samples(&densities));
    }
    IdleEstimate {
        per_tier,
        active_density,
        resampled_trials: resampled,
    }
}

/// Fraction of UEs served by each tier.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationEstimate {
    /// Per-trial fractions are the samples.
    pub per_tier: Vec<EstimateWithCI>,
    /// Total number of UEs counted over all trials.
    pub ue_samples: usize,
}

pub fn estimate_association(params: &NetworkParams, config: &SimConfig) -> Result<AssociationEstimate> {
    let window = config.window();
    let (trials, _) = run_trials(params, config, |_, dep| {
        let mut counts = vec![0usize; params.num_tiers()];
        let mut total = 0usize;
        for (p, s) in dep.ue_positions.iter().zip(&dep.association) {
            if window.is_interior(*p) {
                counts[s.tier] += 1;
                total += 1;
            }
        }
        (counts, total)
    })?;
    let per_tier = (0..params.num_tiers())
        .map(|t| {
            let xs: Vec<f64> = trials
                .iter()
                .filter(|(_, total)| *total > 0)
                .map(|(c, total)| c[t] as f64 / *total as f64)
                .collect();
            EstimateWithCI::from_samples(&xs)
        })
        .collect();
    Ok(AssociationEstimate {
        per_tier,
        ue_samples: trials.iter().map(|(_, n)| n).sum(),
    })
}

/// Serving distances (km) of all measurable UEs, grouped by serving tier.
pub fn serving_distances(params: &NetworkParams, config: &SimConfig) -> Result<Vec<Vec<f64>>> {
    let window = config.window();
    let (trials, _) = run_trials(params, config, |_, dep| {
        let mut out = vec![Vec::new(); params.num_tiers()];
        for ((p, s), d) in dep.ue_positions.iter().zip(&dep.association).zip(&dep.serving_distance) {
            if window.is_interior(*p) {
                out[s.tier].push(*d);
            }
        }
        out
    })?;
    let mut merged = vec![Vec::new(); params.num_tiers()];
    for t in trials {
        for (m, d) in merged.iter_mut().zip(t) {
            m.extend(d);
        }
    }
    Ok(merged)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageEstimate {
    pub tau: f64,
    /// Coverage of probes served by each tier (probe-level samples).
    pub per_tier: Vec<EstimateWithCI>,
    /// Probability of being served by each tier and covered (per-trial samples).
    pub per_tier_joint: Vec<EstimateWithCI>,
    /// Per-trial mean coverage over all probes.
    pub overall: EstimateWithCI,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    /// Mean `log2(1 + SINR)` of probes served by each tier (probe-level samples).
    pub per_tier: Vec<EstimateWithCI>,
    /// Mean of `log2(1 + SINR)` times the indicator of tier `i` serving (per-trial samples).
    pub per_tier_joint: Vec<EstimateWithCI>,
    /// Per-trial mean rate over all probes.
    pub overall: EstimateWithCI,
    /// Empirical active density of each tier (per-trial samples).
    pub active_density: Vec<EstimateWithCI>,
    /// `sum_i lambda~_i R_i` from the estimates above; the half-width
    /// propagates the rate uncertainty only.
    pub area_rate_density: EstimateWithCI,
}

/// Coverage at several thresholds and the ergodic rate, all from the same
/// probes and fading draws.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkEstimate {
    pub coverage: Vec<CoverageEstimate>,
    pub rate: RateEstimate,
    /// Idle fractions of the same deployments.
    pub idle: IdleEstimate,
    pub resampled_trials: usize,
}

struct ProbeResult {
    tier: usize,
    covered: Vec<f64>,
    rate: f64,
}

struct TrialLinks {
    probes: Vec<ProbeResult>,
    idle: Vec<(usize, usize)>,
}

pub fn estimate_link_metrics(params: &NetworkParams, config: &SimConfig, taus: &[f64]) -> Result<LinkEstimate> {
    let window = config.window();
    let draws = config.fading_draws_per_trial;
    let (trials, resampled) = run_trials(params, config, |trial, dep| {
        let eligible: Vec<usize> = (0..dep.ue_positions.len())
            .filter(|&u| window.is_interior(dep.ue_positions[u]))
            .collect();
        let mut pick = stream(config.seed, trial, 0, StreamRole::Probes);
        let k = config.probes_per_trial.min(eligible.len());
        let chosen = index::sample(&mut pick, eligible.len(), k);
        let mut fading: ChaCha8Rng = stream(config.seed, trial, 0, StreamRole::Fading);
        let probes = chosen
            .iter()
            .map(|c| {
                let ue = eligible[c];
                let budget = LinkBudget::new(dep, params, ue, InterferenceMask::ActiveOnly);
                let mut covered = vec![0.0; taus.len()];
                let mut rate = 0.0;
                for _ in 0..draws {
                    let sinr = budget.sample_sinr(params.noise_power, config.rayleigh_fading, &mut fading);
                    for (c, &tau) in covered.iter_mut().zip(taus) {
                        if sinr > tau {
                            *c += 1.0;
                        }
                    }
                    rate += log2_rate(sinr);
                }
                covered.iter_mut().for_each(|c| *c /= draws as f64);
                ProbeResult {
                    tier: budget.serving_tier,
                    covered,
                    rate: rate / draws as f64,
                }
            })
            .collect();
        TrialLinks {
            probes,
            idle: interior_idle_counts(dep, window),
        }
    })?;

    let m = params.num_tiers();
    let per_tier_samples = |value: &dyn Fn(&ProbeResult) -> f64| -> Vec<EstimateWithCI> {
        (0..m)
            .map(|t| {
                let xs: Vec<f64> = trials
                    .iter()
                    .flat_map(|tr| tr.probes.iter())
                    .filter(|p| p.tier == t)
                    .map(value)
                    .collect();
                EstimateWithCI::from_samples(&xs)
            })
            .collect()
    };
    let trial_means = |value: &dyn Fn(&ProbeResult) -> f64| -> EstimateWithCI {
        let xs: Vec<f64> = trials
            .iter()
            .filter(|tr| !tr.probes.is_empty())
            .map(|tr| tr.probes.iter().map(value).sum::<f64>() / tr.probes.len() as f64)
            .collect();
        EstimateWithCI::from_samples(&xs)
    };
    let joint_means = |value: &dyn Fn(&ProbeResult) -> f64| -> Vec<EstimateWithCI> {
        (0..m)
            .map(|t| trial_means(&|p| if p.tier == t { value(p) } else { 0.0 }))
            .collect()
    };

    let coverage = taus
        .iter()
        .enumerate()
        .map(|(k, &tau)| CoverageEstimate {
            tau,
            per_tier: per_tier_samples(&|p| p.covered[k]),
            per_tier_joint: joint_means(&|p| p.covered[k]),
            overall: trial_means(&|p| p.covered[k]),
        })
        .collect();

    let idle_counts: Vec<Vec<(usize, usize)>> = trials.iter().map(|t| t.idle.clone()).collect();
    let idle = summarize_idle(&idle_counts, m, interior_area(config), resampled);
    let active_density = idle.active_density.clone();
    let per_tier_rate = per_tier_samples(&|p| p.rate);
    let mut area_mean = 0.0;
    let mut area_var = 0.0;
    for (r, a) in per_tier_rate.iter().zip(&active_density) {
        if r.samples > 0 {
            area_mean += a.mean * r.mean;
            area_var += (a.mean * r.half_width_95).powi(2);
        }
    }
    let rate = RateEstimate {
        overall: trial_means(&|p| p.rate),
        per_tier_joint: joint_means(&|p| p.rate),
        per_tier: per_tier_rate,
        active_density,
        area_rate_density: EstimateWithCI {
            mean: area_mean,
            half_width_95: area_var.sqrt(),
            samples: trials.iter().map(|t| t.probes.len()).sum(),
        },
    };
    Ok(LinkEstimate {
        coverage,
        rate,
        idle,
        resampled_trials: resampled,
    })
}

pub fn estimate_coverage(params: &NetworkParams, config: &SimConfig, tau: f64) -> Result<CoverageEstimate> {
    let mut est = estimate_link_metrics(params, config, &[tau])?;
    Ok(est.coverage.remove(0))
}

pub fn estimate_rate(params: &NetworkParams, config: &SimConfig) -> Result<RateEstimate> {
    Ok(estimate_link_metrics(params, config, &[])?.rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TierParams;
    use rand::SeedableRng;

    fn window(side: f64) -> Window {
        Window {
            side,
            boundary: Boundary::Torus,
        }
    }

    fn single(density: f64, ue: f64) -> NetworkParams {
        NetworkParams::new(vec![TierParams::new("t", 1.0, density)], 4.0, ue).unwrap()
    }

    #[test]
    fn zero_density_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ppp(0.0, 10.0, &mut rng).is_empty());
    }

    #[test]
    fn single_bs_serves_everyone() {
        let params = single(1.0, 1.0);
        let draft = DeploymentDraft {
            bs_positions: vec![vec![Point::new(1.0, 1.0)]],
            ue_positions: vec![Point::new(0.2, 0.3), Point::new(1.9, 1.5), Point::new(1.0, 1.0)],
        };
        let dep = associate(draft, &params, window(2.0)).unwrap();
        assert!(dep.association.iter().all(|s| *s == Serving { tier: 0, index: 0 }));
        assert_eq!(dep.active_mask, vec![vec![true]]);
        // coincident UE is clamped, not infinite
        assert_eq!(dep.serving_distance[2], MIN_DISTANCE_KM);
        let budget = LinkBudget::new(&dep, &params, 2, InterferenceMask::ActiveOnly);
        assert!(budget.serving_gain.is_finite());
    }

    #[test]
    fn no_bs_is_a_config_error() {
        let params = single(1.0, 1.0);
        let draft = DeploymentDraft {
            bs_positions: vec![vec![]],
            ue_positions: vec![Point::new(0.2, 0.3)],
        };
        assert!(matches!(associate(draft, &params, window(2.0)), Err(Error::Config(_))));
    }

    #[test]
    fn equal_powers_give_nearest_bs() {
        let params = NetworkParams::new(
            vec![TierParams::new("a", 2.0, 30.0), TierParams::new("b", 2.0, 60.0)],
            3.5,
            100.0,
        )
        .unwrap();
        let w = window(2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draft = DeploymentDraft {
            bs_positions: vec![sample_ppp(30.0, 2.0, &mut rng), sample_ppp(60.0, 2.0, &mut rng)],
            ue_positions: sample_ppp(100.0, 2.0, &mut rng),
        };
        let dep = associate(draft.clone(), &params, w).unwrap();
        for (u, &ue) in draft.ue_positions.iter().enumerate() {
            let mut best = (0, 0, f64::INFINITY);
            for (t, pts) in draft.bs_positions.iter().enumerate() {
                for (i, &p) in pts.iter().enumerate() {
                    let d = w.distance2(ue, p);
                    if d < best.2 {
                        best = (t, i, d);
                    }
                }
            }
            assert_eq!(dep.association[u], Serving { tier: best.0, index: best.1 });
        }
    }

    #[test]
    fn unfaded_rate_without_interferers_is_log2_one_plus_snr() {
        let params = single(1.0, 1.0).with_noise(2.0).unwrap();
        let draft = DeploymentDraft {
            bs_positions: vec![vec![Point::new(1.0, 1.0)]],
            ue_positions: vec![Point::new(1.5, 1.0)],
        };
        let dep = associate(draft, &params, window(4.0)).unwrap();
        let budget = LinkBudget::new(&dep, &params, 0, InterferenceMask::ActiveOnly);
        assert!(budget.interferer_gains.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let snr = budget.sample_sinr(2.0, false, &mut rng);
        let expected = 0.5f64.powf(-4.0) / 2.0;
        assert!((snr - expected).abs() < 1e-12);
        assert!((log2_rate(snr) - (1.0 + expected).log2()).abs() < 1e-12);
        assert_eq!(log2_rate(f64::INFINITY), RATE_CAP);
    }

    #[test]
    fn estimate_ci_arithmetic() {
        let e = EstimateWithCI::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.half_width_95 - 1.96 * sd / 2.0).abs() < 1e-12);
        assert!(EstimateWithCI::from_samples(&[]).mean.is_nan());
        assert_eq!(EstimateWithCI::from_samples(&[3.0]).half_width_95, f64::INFINITY);
    }

    #[test]
    fn dump_lines() {
        let params = single(1.0, 1.0);
        let draft = DeploymentDraft {
            bs_positions: vec![vec![Point::new(1.0, 1.0), Point::new(3.0, 3.0)]],
            ue_positions: vec![Point::new(1.25, 1.0)],
        };
        let dep = associate(draft, &params, window(4.0)).unwrap();
        let mut buf = Vec::new();
        dep.write_dump(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1 1 1 1\n1 3 3 0\nue 1.25 1 1 0\n");
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::default().validate().is_ok());
        assert!(SimConfig { trials: 0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { window_side: 0.0, ..SimConfig::default() }.validate().is_err());
        let guard = SimConfig {
            boundary: Boundary::GuardZone { width: 2.0 },
            ..SimConfig::default()
        };
        assert!(guard.validate().is_err());
        let tiny = SimConfig { window_side: 0.5, ..SimConfig::default() };
        assert_eq!(tiny.warnings(&single(10.0, 100.0)).len(), 2);
    }
}
