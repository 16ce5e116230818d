//! Parameter sweeps and their CSV tables.

use std::io::{Read, Write};

use hetnet_imc::analysis::{
    coverage_overall, fully_loaded_baseline, rate_overall, BaselineMode, BaselineReport, QuadratureSpec,
};
use hetnet_imc::model::{NetworkParams, TierDerived};
use hetnet_imc::sim::{estimate_idle_fraction, estimate_link_metrics, EstimateWithCI, SimConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Engine, Metric, ScenarioConfig};
use crate::error::CliError;

pub const CSV_HEADER: [&str; 7] = ["sweep_param", "value", "engine", "metric", "tier", "result", "ci95"];

/// Written in the `result` column when an engine failed at a sweep point.
pub const ERROR_SENTINEL: &str = "error";

pub const OVERALL: &str = "overall";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep_param: String,
    pub value: f64,
    pub engine: String,
    pub metric: String,
    pub tier: String,
    /// `None` when the engine failed.
    pub result: Option<f64>,
    /// Empty for the analytical engines.
    pub ci95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementCheck {
    pub value: f64,
    pub metric: String,
    pub tier: String,
    pub analysis: f64,
    pub sim: f64,
    pub sim_ci95: f64,
    pub bound: f64,
}

impl AgreementCheck {
    /// Signed gap `analysis - sim`.
    pub fn gap(&self) -> f64 {
        self.analysis - self.sim
    }

    pub fn holds(&self) -> bool {
        self.gap().abs() <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<Row>,
    /// One message per failed (sweep point, engine).
    pub failures: Vec<String>,
    pub agreement: Vec<AgreementCheck>,
}

type Est = (f64, Option<f64>);

fn exact(x: f64) -> Est {
    (x, None)
}

fn with_ci(e: &EstimateWithCI) -> Est {
    (e.mean, Some(e.half_width_95))
}

/// Everything one engine reports at one sweep point; vectors are per tier.
#[derive(Debug, Default)]
struct PointMetrics {
    idle: Vec<Est>,
    coverage: Vec<Est>,
    coverage_overall: Option<Est>,
    coverage_joint: Vec<Est>,
    rate: Vec<Est>,
    rate_overall: Option<Est>,
    rate_joint: Vec<Est>,
    ase: Vec<Est>,
    ase_overall: Option<Est>,
}

/// `(metric, tier)` keys in output order.
pub fn row_keys(metrics: &[Metric], labels: &[String]) -> Vec<(&'static str, String)> {
    let mut keys = Vec::new();
    let tiers = |keys: &mut Vec<(&'static str, String)>, m: &'static str, overall: bool| {
        keys.extend(labels.iter().map(|l| (m, l.clone())));
        if overall {
            keys.push((m, OVERALL.to_string()));
        }
    };
    for m in metrics {
        match m {
            Metric::Idle => tiers(&mut keys, "idle", false),
            Metric::Coverage => {
                tiers(&mut keys, "coverage", true);
                tiers(&mut keys, "coverage_joint", false);
            }
            Metric::Rate => {
                tiers(&mut keys, "rate", true);
                tiers(&mut keys, "rate_joint", false);
                tiers(&mut keys, "ase", true);
            }
        }
    }
    keys
}

impl PointMetrics {
    fn flatten(&self, metrics: &[Metric]) -> Vec<Est> {
        let mut out = Vec::new();
        for m in metrics {
            match m {
                Metric::Idle => out.extend(&self.idle),
                Metric::Coverage => {
                    out.extend(&self.coverage);
                    out.extend(self.coverage_overall);
                    out.extend(&self.coverage_joint);
                }
                Metric::Rate => {
                    out.extend(&self.rate);
                    out.extend(self.rate_overall);
                    out.extend(&self.rate_joint);
                    out.extend(&self.ase);
                    out.extend(self.ase_overall);
                }
            }
        }
        out
    }
}

fn analytic_metrics(
    params: &NetworkParams,
    derived: &[TierDerived],
    baseline: bool,
    metrics: &[Metric],
    tau: f64,
    quad: &QuadratureSpec,
) -> Result<PointMetrics, CliError> {
    let mut pm = PointMetrics::default();
    if metrics.contains(&Metric::Idle) {
        pm.idle = derived.iter().map(|d| exact(d.idle_prob)).collect();
    }
    if metrics.contains(&Metric::Coverage) {
        let c = if baseline {
            match fully_loaded_baseline(params, BaselineMode::Coverage { tau }, quad)? {
                BaselineReport::Coverage(c) => c,
                BaselineReport::Rate(_) => unreachable!("coverage mode yields coverage"),
            }
        } else {
            coverage_overall(params, derived, tau, quad)?
        };
        pm.coverage = c.per_tier_conditional.iter().copied().map(exact).collect();
        pm.coverage_overall = Some(exact(c.overall));
        pm.coverage_joint = c.per_tier_weighted.iter().copied().map(exact).collect();
    }
    if metrics.contains(&Metric::Rate) {
        let r = if baseline {
            match fully_loaded_baseline(params, BaselineMode::Rate, quad)? {
                BaselineReport::Rate(r) => r,
                BaselineReport::Coverage(_) => unreachable!("rate mode yields rate"),
            }
        } else {
            rate_overall(params, derived, quad)?
        };
        pm.rate = r.per_tier_rate.iter().copied().map(exact).collect();
        pm.rate_overall = Some(exact(r.mean_ue_rate));
        pm.rate_joint = r
            .per_tier_rate
            .iter()
            .zip(derived)
            .map(|(x, d)| exact(x * d.association_prob))
            .collect();
        pm.ase = r.per_tier_area_rate.iter().copied().map(exact).collect();
        pm.ase_overall = Some(exact(r.area_rate_density));
    }
    Ok(pm)
}

fn sim_metrics(params: &NetworkParams, sim: &SimConfig, metrics: &[Metric], tau: f64) -> Result<PointMetrics, CliError> {
    let mut pm = PointMetrics::default();
    let links = metrics.contains(&Metric::Coverage) || metrics.contains(&Metric::Rate);
    if !links {
        let idle = estimate_idle_fraction(params, sim)?;
        pm.idle = idle.per_tier.iter().map(with_ci).collect();
        return Ok(pm);
    }
    let est = estimate_link_metrics(params, sim, &[tau])?;
    pm.idle = est.idle.per_tier.iter().map(with_ci).collect();
    let c = &est.coverage[0];
    pm.coverage = c.per_tier.iter().map(with_ci).collect();
    pm.coverage_overall = Some(with_ci(&c.overall));
    pm.coverage_joint = c.per_tier_joint.iter().map(with_ci).collect();
    let r = &est.rate;
    pm.rate = r.per_tier.iter().map(with_ci).collect();
    pm.rate_overall = Some(with_ci(&r.overall));
    pm.rate_joint = r.per_tier_joint.iter().map(with_ci).collect();
    pm.ase = r
        .per_tier
        .iter()
        .zip(&r.active_density)
        .map(|(rate, a)| (rate.mean * a.mean, Some(rate.half_width_95 * a.mean)))
        .collect();
    pm.ase_overall = Some(with_ci(&r.area_rate_density));
    Ok(pm)
}

fn run_engine(config: &ScenarioConfig, params: &NetworkParams, engine: Engine) -> Result<PointMetrics, CliError> {
    let quad = QuadratureSpec::default();
    let tau = config.tau();
    match engine {
        Engine::Analysis => analytic_metrics(params, &params.derive_tiers(), false, &config.metrics, tau, &quad),
        Engine::Baseline => analytic_metrics(params, &params.fully_loaded(), true, &config.metrics, tau, &quad),
        Engine::Sim => sim_metrics(params, &config.sim, &config.metrics, tau),
    }
}

/// Runs every engine at every sweep point. Points are evaluated in
/// parallel; rows come out in sweep, engine, metric and tier order.
pub fn run_sweep(config: &ScenarioConfig) -> Result<SweepResult, CliError> {
    let values = config.sweep.values();
    let labels: Vec<String> = config.network.tiers.iter().map(|t| t.label.clone()).collect();
    let keys = row_keys(&config.metrics, &labels);
    let networks = values
        .iter()
        .map(|&v| config.network_at(v))
        .collect::<Result<Vec<_>, _>>()?;

    let points: Vec<Vec<Result<PointMetrics, CliError>>> = networks
        .par_iter()
        .map(|params| {
            config
                .engines
                .iter()
                .map(|&e| run_engine(config, params, e))
                .collect()
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut by_engine: Vec<Vec<Option<Vec<Est>>>> = Vec::new();
    for (&value, per_engine) in values.iter().zip(points) {
        let mut flat_per_engine = Vec::new();
        for (&engine, outcome) in config.engines.iter().zip(per_engine) {
            let flat = match outcome {
                Ok(pm) => Some(pm.flatten(&config.metrics)),
                Err(e) => {
                    failures.push(format!("{}={value} {}: {e}", config.sweep.parameter, engine.name()));
                    None
                }
            };
            for (k, (metric, tier)) in keys.iter().enumerate() {
                let est = flat.as_ref().map(|f| f[k]);
                rows.push(Row {
                    sweep_param: config.sweep.parameter.clone(),
                    value,
                    engine: engine.name().to_string(),
                    metric: metric.to_string(),
                    tier: tier.clone(),
                    result: est.map(|e| e.0),
                    ci95: est.and_then(|e| e.1),
                });
            }
            flat_per_engine.push(flat);
        }
        by_engine.push(flat_per_engine);
    }

    let agreement = agreement_checks(config, &values, &keys, &by_engine);
    Ok(SweepResult {
        rows,
        failures,
        agreement,
    })
}

fn agreement_checks(
    config: &ScenarioConfig,
    values: &[f64],
    keys: &[(&'static str, String)],
    by_engine: &[Vec<Option<Vec<Est>>>],
) -> Vec<AgreementCheck> {
    let find = |e: Engine| config.engines.iter().position(|&x| x == e);
    let (Some(a), Some(s)) = (find(Engine::Analysis), find(Engine::Sim)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (k, (&value, point)) in values.iter().zip(by_engine).enumerate() {
        let (Some(an), Some(sim)) = (&point[a], &point[s]) else {
            continue;
        };
        for (idx, (metric, tier)) in keys.iter().enumerate() {
            let bound = match (*metric, tier.as_str()) {
                ("idle", _) => config.agreement.idle,
                ("coverage", OVERALL) if k == 0 => config.agreement.coverage_first,
                ("coverage", OVERALL) => config.agreement.coverage,
                _ => continue,
            };
            out.push(AgreementCheck {
                value,
                metric: metric.to_string(),
                tier: tier.clone(),
                analysis: an[idx].0,
                sim: sim[idx].0,
                sim_ci95: sim[idx].1.unwrap_or(f64::NAN),
                bound,
            });
        }
    }
    out
}

/// `%.17g`-style rendering: 17 significant digits, trailing zeros removed.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRecord {
    sweep_param: String,
    value: String,
    engine: String,
    metric: String,
    tier: String,
    result: String,
    ci95: String,
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(CsvRecord {
            sweep_param: r.sweep_param.clone(),
            value: format_g17(r.value),
            engine: r.engine.clone(),
            metric: r.metric.clone(),
            tier: r.tier.clone(),
            result: r.result.map_or_else(|| ERROR_SENTINEL.to_string(), format_g17),
            ci95: r.ci95.map(format_g17).unwrap_or_default(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum CsvReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: bad number `{text}`")]
    Number { row: usize, text: String },
    #[error("unexpected header")]
    Header,
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Row>, CsvReadError> {
    let mut r = csv::ReaderBuilder::new().from_reader(input);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(CsvReadError::Header);
    }
    let mut rows = Vec::new();
    for (k, rec) in r.deserialize::<CsvRecord>().enumerate() {
        let rec = rec?;
        let num = |text: &str| -> Result<f64, CsvReadError> {
            text.parse().map_err(|_| CsvReadError::Number {
                row: k + 1,
                text: text.to_string(),
            })
        };
        rows.push(Row {
            value: num(&rec.value)?,
            result: if rec.result == ERROR_SENTINEL {
                None
            } else {
                Some(num(&rec.result)?)
            },
            ci95: if rec.ci95.is_empty() { None } else { Some(num(&rec.ci95)?) },
            sweep_param: rec.sweep_param,
            engine: rec.engine,
            metric: rec.metric,
            tier: rec.tier,
        });
    }
    Ok(rows)
}
