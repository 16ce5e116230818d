//! Scenario files.
//!
//! Line-based `key = value` pairs grouped under `[section]` headers. `#`
//! starts a comment. Sections: `[network]`, one `[tier]` per BS tier,
//! `[sweep]`, and the optional `[sim]`, `[agreement]` and `[output]`.
//!
//! ```text
//! [network]
//! alpha = 3.75
//! ue_density = 300
//!
//! [tier]
//! label = macro
//! power_dbm = 30
//! density = 100
//!
//! [sweep]
//! parameter = tier.macro.density
//! start = 100
//! stop = 500
//! steps = 5
//! ```

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use hetnet_imc::analysis::db_to_linear;
use hetnet_imc::model::{NetworkParams, TierParams, DEFAULT_LOAD_SHAPE};
use hetnet_imc::sim::{Boundary, SimConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engine {
    Analysis,
    Sim,
    Baseline,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analysis => "analysis",
            Engine::Sim => "sim",
            Engine::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Idle,
    Coverage,
    Rate,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Idle => "idle",
            Metric::Coverage => "coverage",
            Metric::Rate => "rate",
        }
    }
}

/// Scalar the sweep varies.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepTarget {
    UeDensity,
    Alpha,
    NoisePower,
    TierDensity(usize),
    TierPower(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// The parameter path as written, e.g. `tier.pico.density`.
    pub parameter: String,
    pub target: SweepTarget,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    /// Evenly spaced values from `start` to `stop` inclusive.
    pub fn values(&self) -> Vec<f64> {
        let span = self.stop - self.start;
        (0..self.steps)
            .map(|k| {
                if k + 1 == self.steps {
                    self.stop
                } else {
                    self.start + span * k as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

/// Largest accepted |analysis - sim| gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgreementBounds {
    pub idle: f64,
    pub coverage: f64,
    /// Coverage bound at the first sweep point.
    pub coverage_first: f64,
}

impl Default for AgreementBounds {
    fn default() -> Self {
        AgreementBounds {
            idle: 0.05,
            coverage: 0.02,
            coverage_first: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub network: NetworkParams,
    pub tier_power_dbm: Vec<f64>,
    pub sweep: Sweep,
    pub metrics: Vec<Metric>,
    pub engines: Vec<Engine>,
    pub tau_db: f64,
    pub sim: SimConfig,
    pub agreement: AgreementBounds,
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    pub fn tau(&self) -> f64 {
        db_to_linear(self.tau_db)
    }

    /// Network parameters with the swept quantity set to `value`.
    pub fn network_at(&self, value: f64) -> Result<NetworkParams, CliError> {
        let mut p = self.network.clone();
        match self.sweep.target {
            SweepTarget::UeDensity => p.ue_density = value,
            SweepTarget::Alpha => p.alpha = value,
            SweepTarget::NoisePower => p.noise_power = value,
            SweepTarget::TierDensity(i) => p.tiers[i].density = value,
            SweepTarget::TierPower(i) => p.tiers[i] = TierParams::from_dbm(p.tiers[i].label.clone(), value, p.tiers[i].density),
        }
        p.validate().map_err(|e| CliError::Config(format!("sweep value {value}: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Default)]
struct Section {
    name: String,
    line: usize,
    entries: HashMap<String, (usize, String)>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<(usize, String), ParseError> {
        self.take(key)
            .ok_or_else(|| err(self.line, format!("[{}] is missing required key `{key}`", self.name)))
    }

    fn real(&mut self, key: &str) -> Result<Option<(usize, f64)>, ParseError> {
        self.take(key).map(|(line, v)| parse_real(line, key, &v).map(|x| (line, x))).transpose()
    }

    fn required_real(&mut self, key: &str) -> Result<(usize, f64), ParseError> {
        let (line, v) = self.required(key)?;
        Ok((line, parse_real(line, key, &v)?))
    }

    fn count(&mut self, key: &str) -> Result<Option<(usize, usize)>, ParseError> {
        self.take(key)
            .map(|(line, v)| {
                v.parse::<usize>()
                    .map(|x| (line, x))
                    .map_err(|_| err(line, format!("`{key}` must be a non-negative integer, got `{v}`")))
            })
            .transpose()
    }

    fn finish(self) -> Result<(), ParseError> {
        let mut left: Vec<_> = self.entries.into_iter().collect();
        left.sort_by_key(|(_, (line, _))| *line);
        match left.first() {
            Some((key, (line, _))) => Err(err(*line, format!("unknown key `{key}` in [{}]", self.name))),
            None => Ok(()),
        }
    }
}

fn parse_real(line: usize, key: &str, v: &str) -> Result<f64, ParseError> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(err(line, format!("`{key}` must be a finite number, got `{v}`"))),
    }
}

fn positive(line: usize, key: &str, x: f64) -> Result<f64, ParseError> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(err(line, format!("`{key}` must be positive, got {x}")))
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>, ParseError> {
    const KNOWN: [&str; 6] = ["network", "tier", "sweep", "sim", "agreement", "output"];
    let mut sections: Vec<Section> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("malformed section header `{content}`")))?
                .trim();
            if !KNOWN.contains(&name) {
                return Err(err(line, format!("unknown section [{name}]")));
            }
            if name != "tier" && sections.iter().any(|s| s.name == name) {
                return Err(err(line, format!("duplicate section [{name}]")));
            }
            sections.push(Section {
                name: name.to_string(),
                line,
                entries: HashMap::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{content}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(err(line, "empty key"));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| err(line, format!("`{key}` appears before any section header")))?;
        if section
            .entries
            .insert(key.to_string(), (line, value.to_string()))
            .is_some()
        {
            return Err(err(line, format!("duplicate key `{key}` in [{}]", section.name)));
        }
    }
    Ok(sections)
}

fn parse_list<T>(line: usize, key: &str, value: &str, item: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ParseError>
where
    T: Ord + Copy,
{
    let mut out = Vec::new();
    for word in value.split(',').map(str::trim).filter(|w| !w.is_empty()) {
        let v = item(word).ok_or_else(|| err(line, format!("unknown entry `{word}` in `{key}`")))?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(err(line, format!("`{key}` must list at least one entry")));
    }
    out.sort();
    Ok(out)
}

pub fn parse_config(text: &str) -> Result<ScenarioConfig, ParseError> {
    let mut network: Option<Section> = None;
    let mut sweep: Option<Section> = None;
    let mut sim: Option<Section> = None;
    let mut agreement: Option<Section> = None;
    let mut output: Option<Section> = None;
    let mut tier_sections = Vec::new();
    for s in split_sections(text)? {
        match s.name.as_str() {
            "network" => network = Some(s),
            "tier" => tier_sections.push(s),
            "sweep" => sweep = Some(s),
            "sim" => sim = Some(s),
            "agreement" => agreement = Some(s),
            _ => output = Some(s),
        }
    }

    let mut net = network.ok_or_else(|| err(0, "missing [network] section"))?;
    let (alpha_line, alpha) = net.required_real("alpha")?;
    if alpha <= 2.0 {
        return Err(err(
            alpha_line,
            format!("alpha must exceed 2 for the interference kernel to exist, got {alpha}"),
        ));
    }
    let (line, ue) = net.required_real("ue_density")?;
    let ue_density = positive(line, "ue_density", ue)?;
    let noise_power = match net.real("noise_power_mw")? {
        Some((line, x)) if x < 0.0 => return Err(err(line, format!("`noise_power_mw` must be non-negative, got {x}"))),
        Some((_, x)) => x,
        None => 0.0,
    };
    let shape_q = match net.real("shape_q")? {
        Some((line, x)) => positive(line, "shape_q", x)?,
        None => DEFAULT_LOAD_SHAPE,
    };
    let rate_b = match net.real("rate_b")? {
        Some((line, x)) => positive(line, "rate_b", x)?,
        None => DEFAULT_LOAD_SHAPE,
    };
    net.finish()?;

    if tier_sections.is_empty() {
        return Err(err(0, "at least one [tier] section is required"));
    }
    let mut tiers = Vec::new();
    let mut tier_power_dbm = Vec::new();
    for mut t in tier_sections {
        let (line, label) = t.required("label")?;
        if label.is_empty() || label.contains(char::is_whitespace) || label.contains(',') || label.contains('.') {
            return Err(err(line, format!("tier label `{label}` must be a single word without `.` or `,`")));
        }
        if label == "overall" || tiers.iter().any(|x: &TierParams| x.label == label) {
            return Err(err(line, format!("tier label `{label}` is reserved or already used")));
        }
        let (_, dbm) = t.required_real("power_dbm")?;
        let (line, density) = t.required_real("density")?;
        let density = positive(line, "density", density)?;
        t.finish()?;
        tier_power_dbm.push(dbm);
        tiers.push(TierParams::from_dbm(label, dbm, density));
    }
    let network = NetworkParams {
        tiers,
        alpha,
        ue_density,
        noise_power,
        shape_q,
        rate_b,
    };
    network.validate().map_err(|e| err(0, e.to_string()))?;

    let mut sw = sweep.ok_or_else(|| err(0, "missing [sweep] section"))?;
    let (param_line, parameter) = sw.required("parameter")?;
    let target = parse_target(&parameter, &network).ok_or_else(|| err(param_line, format!("unknown sweep parameter `{parameter}`")))?;
    let (line, start) = sw.required_real("start")?;
    let start = positive(line, "start", start)?;
    let (line, stop) = sw.required_real("stop")?;
    let stop = positive(line, "stop", stop)?;
    let (steps_line, steps) = sw.count("steps")?.ok_or_else(|| err(sw.line, "[sweep] is missing required key `steps`"))?;
    if steps < 2 {
        return Err(err(steps_line, format!("`steps` must be at least 2, got {steps}")));
    }
    if matches!(target, SweepTarget::Alpha) && start.min(stop) <= 2.0 {
        return Err(err(param_line, "alpha sweep must stay above 2"));
    }
    let metrics = match sw.take("metrics") {
        Some((line, v)) => parse_list(line, "metrics", &v, |w| match w {
            "idle" => Some(Metric::Idle),
            "coverage" => Some(Metric::Coverage),
            "rate" => Some(Metric::Rate),
            _ => None,
        })?,
        None => vec![Metric::Idle, Metric::Coverage, Metric::Rate],
    };
    let engines = match sw.take("engines") {
        Some((line, v)) => parse_list(line, "engines", &v, |w| match w {
            "analysis" => Some(Engine::Analysis),
            "sim" => Some(Engine::Sim),
            "baseline" => Some(Engine::Baseline),
            _ => None,
        })?,
        None => vec![Engine::Analysis],
    };
    let tau_db = sw.real("tau_db")?.map_or(0.0, |(_, x)| x);
    sw.finish()?;

    let mut sim_config = SimConfig::default();
    if let Some(mut s) = sim {
        if let Some((line, x)) = s.real("window_side")? {
            sim_config.window_side = positive(line, "window_side", x)?;
        }
        if let Some((_, n)) = s.count("trials")? {
            sim_config.trials = n;
        }
        if let Some((_, n)) = s.count("fading_draws")? {
            sim_config.fading_draws_per_trial = n;
        }
        if let Some((_, n)) = s.count("probes_per_trial")? {
            sim_config.probes_per_trial = n;
        }
        if let Some((line, v)) = s.take("seed") {
            sim_config.seed = v
                .parse()
                .map_err(|_| err(line, format!("`seed` must be an unsigned 64-bit integer, got `{v}`")))?;
        }
        let width = s.real("guard_width")?;
        if let Some((line, v)) = s.take("boundary") {
            sim_config.boundary = match v.as_str() {
                "torus" => Boundary::Torus,
                "guard_zone" => Boundary::GuardZone {
                    width: width.map_or(0.0, |(_, w)| w),
                },
                _ => return Err(err(line, format!("unknown boundary `{v}` (torus or guard_zone)"))),
            };
        }
        if let Some((line, v)) = s.take("fading") {
            sim_config.rayleigh_fading = match v.as_str() {
                "rayleigh" => true,
                "none" => false,
                _ => return Err(err(line, format!("unknown fading `{v}` (rayleigh or none)"))),
            };
        }
        let line = s.line;
        s.finish()?;
        sim_config.validate().map_err(|e| err(line, e.to_string()))?;
    }

    let mut bounds = AgreementBounds::default();
    if let Some(mut a) = agreement {
        if let Some((line, x)) = a.real("idle")? {
            bounds.idle = positive(line, "idle", x)?;
        }
        if let Some((line, x)) = a.real("coverage")? {
            bounds.coverage = positive(line, "coverage", x)?;
            bounds.coverage_first = bounds.coverage;
        }
        if let Some((line, x)) = a.real("coverage_first")? {
            bounds.coverage_first = positive(line, "coverage_first", x)?;
        }
        a.finish()?;
    }

    let output = match output {
        Some(mut o) => {
            let path = o.take("path").map(|(_, p)| PathBuf::from(p));
            o.finish()?;
            path
        }
        None => None,
    };

    Ok(ScenarioConfig {
        network,
        tier_power_dbm,
        sweep: Sweep {
            parameter,
            target,
            start,
            stop,
            steps,
        },
        metrics,
        engines,
        tau_db,
        sim: sim_config,
        agreement: bounds,
        output,
    })
}

fn parse_target(path: &str, network: &NetworkParams) -> Option<SweepTarget> {
    let parts: Vec<&str> = path.split('.').collect();
    match parts.as_slice() {
        ["network", "ue_density"] => Some(SweepTarget::UeDensity),
        ["network", "alpha"] => Some(SweepTarget::Alpha),
        ["network", "noise_power_mw"] => Some(SweepTarget::NoisePower),
        ["tier", label, field] => {
            let i = network.tiers.iter().position(|t| t.label == *label)?;
            match *field {
                "density" => Some(SweepTarget::TierDensity(i)),
                "power_dbm" => Some(SweepTarget::TierPower(i)),
                _ => None,
            }
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[network]
alpha = 4
ue_density = 300

[tier]
label = small
power_dbm = 24
density = 100

[sweep]
parameter = network.ue_density
start = 100
stop = 300
steps = 3
";

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.network.shape_q, 3.5);
        assert_eq!(c.network.rate_b, 3.5);
        assert_eq!(c.network.noise_power, 0.0);
        assert_eq!(c.sim.boundary, Boundary::Torus);
        assert_eq!(c.engines, vec![Engine::Analysis]);
        assert_eq!(c.metrics, vec![Metric::Idle, Metric::Coverage, Metric::Rate]);
        assert!((c.network.tiers[0].tx_power - 10f64.powf(2.4)).abs() < 1e-9);
        assert_eq!(c.sweep.values(), vec![100.0, 200.0, 300.0]);
    }

    #[test]
    fn alpha_two_is_rejected_with_its_line() {
        let text = MINIMAL.replace("alpha = 4", "alpha = 2");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("exceed 2"));
    }

    #[test]
    fn errors_name_the_line() {
        let unknown = MINIMAL.replace("ue_density = 300", "ue_density = 300\ncolour = blue");
        assert_eq!(parse_config(&unknown).unwrap_err().line, 4);
        let bad_density = MINIMAL.replace("density = 100", "density = -1");
        assert_eq!(parse_config(&bad_density).unwrap_err().line, 8);
        let missing = MINIMAL.replace("steps = 3\n", "");
        assert_eq!(parse_config(&missing).unwrap_err().line, 10);
        let one_step = MINIMAL.replace("steps = 3", "steps = 1");
        assert_eq!(parse_config(&one_step).unwrap_err().line, 14);
        let sweep = MINIMAL.replace("network.ue_density", "tier.big.density");
        assert_eq!(parse_config(&sweep).unwrap_err().line, 11);
        assert!(parse_config("alpha = 3").is_err());
    }

    #[test]
    fn comments_and_sim_section() {
        let text = format!(
            "# scenario\n{MINIMAL}\n[sim]\ntrials = 7 # short run\nboundary = guard_zone\nguard_width = 0.5\nseed = 18446744073709551615\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.sim.trials, 7);
        assert_eq!(c.sim.boundary, Boundary::GuardZone { width: 0.5 });
        assert_eq!(c.sim.seed, u64::MAX);
    }

    #[test]
    fn sweep_applies_to_named_tier() {
        let text = MINIMAL.replace("network.ue_density", "tier.small.density");
        let c = parse_config(&text).unwrap();
        assert_eq!(c.network_at(250.0).unwrap().tiers[0].density, 250.0);
    }
}
