use std::path::PathBuf;
use std::process::Command;

use hetnet_imc_cli::config::Engine;
use hetnet_imc_cli::dump::dump_realization;
use hetnet_imc_cli::sweep::{format_g17, row_keys};
use hetnet_imc_cli::{load_config, parse_config, read_csv, run_sweep, write_csv, Row};
use proptest::prelude::*;

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hetnet-imc"))
}

const SMALL: &str = "\
[network]
alpha = 4
ue_density = 200

[tier]
label = big
power_dbm = 40
density = 5

[tier]
label = small
power_dbm = 24
density = 50

[sweep]
parameter = tier.small.density
start = 50
stop = 150
steps = 2
engines = analysis, sim, baseline

[sim]
window_side = 3
trials = 8
probes_per_trial = 4
";

#[test]
fn shipped_fig2_config_encodes_the_three_tier_scenario() {
    let c = load_config(&config_path("fig2.cfg")).unwrap();
    let dbm: Vec<f64> = c.tier_power_dbm.clone();
    assert_eq!(dbm, vec![46.0, 30.0, 24.0]);
    let densities: Vec<f64> = c.network.tiers.iter().map(|t| t.density).collect();
    assert_eq!(densities, vec![10.0, 100.0, 100.0]);
    assert_eq!((c.sweep.start, c.sweep.stop), (100.0, 500.0));
    assert_eq!(c.sweep.parameter, "tier.femto.density");
    assert_eq!(c.network.alpha, 3.75);
    assert_eq!(c.network.ue_density, 300.0);
    assert_eq!((c.network.shape_q, c.network.rate_b), (3.5, 3.5));
}

#[test]
fn shipped_two_tier_configs_agree() {
    for name in ["fig3.cfg", "fig4.cfg", "fig5.cfg"] {
        let c = load_config(&config_path(name)).unwrap();
        assert_eq!(c.tier_power_dbm, vec![30.0, 24.0], "{name}");
        assert_eq!(c.network.tiers[0].density, 100.0);
        assert_eq!(c.sweep.values(), vec![100.0, 200.0, 300.0, 400.0, 500.0]);
        assert_eq!(c.tau_db, 0.0);
        assert_eq!(c.network.alpha, 3.75);
    }
}

#[test]
fn two_steps_give_two_points_of_rows_without_gaps() {
    let c = parse_config(SMALL).unwrap();
    let result = run_sweep(&c).unwrap();
    let labels = vec!["big".to_string(), "small".to_string()];
    let keys = row_keys(&c.metrics, &labels);
    assert_eq!(result.rows.len(), 2 * 3 * keys.len());
    let mut k = 0;
    for value in [50.0, 150.0] {
        for engine in [Engine::Analysis, Engine::Sim, Engine::Baseline] {
            for (metric, tier) in &keys {
                let r = &result.rows[k];
                assert_eq!((r.value, r.engine.as_str(), r.metric.as_str(), r.tier.as_str()), (value, engine.name(), *metric, tier.as_str()));
                assert!(r.result.is_some());
                assert_eq!(r.ci95.is_some(), engine == Engine::Sim);
                k += 1;
            }
        }
    }
    assert!(result.failures.is_empty());
    // baseline never idles
    assert!(result.rows.iter().filter(|r| r.engine == "baseline" && r.metric == "idle").all(|r| r.result == Some(0.0)));
    assert!(!result.agreement.is_empty());
}

#[test]
fn csv_round_trip_of_a_sweep() {
    let c = parse_config(SMALL).unwrap();
    let result = run_sweep(&c).unwrap();
    let mut buf = Vec::new();
    write_csv(&result.rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("sweep_param,value,engine,metric,tier,result,ci95\n"));
    assert!(!text.contains('\r'));
    assert_eq!(read_csv(buf.as_slice()).unwrap(), result.rows);
}

#[test]
fn engine_failure_writes_sentinel_and_exit_code_two() {
    // essentially no UEs: every simulated window is empty
    let text = SMALL.replace("ue_density = 200", "ue_density = 1e-9").replace("engines = analysis, sim, baseline", "engines = analysis, sim\nmetrics = idle");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out.csv");
    let status = binary()
        .args(["analyze", "--quiet", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = binary().args(["simulate", "--quiet", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let rows = read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 2);
    assert!(rows.iter().all(|r| r.result.is_none()));
}

#[test]
fn exit_codes_for_bad_config_and_io() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, SMALL.replace("alpha = 4", "alpha = 2")).unwrap();
    let out = binary().args(["analyze", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let missing = dir.path().join("nope.cfg");
    let out = binary().args(["analyze", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    std::fs::write(&cfg, SMALL).unwrap();
    let out = binary()
        .args(["analyze", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("no/such/dir/out.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn dump_is_deterministic_and_consistent() {
    let c = parse_config(SMALL).unwrap();
    let (mut a, mut b, mut other) = (Vec::new(), Vec::new(), Vec::new());
    dump_realization(&c, 5, &mut a).unwrap();
    dump_realization(&c, 5, &mut b).unwrap();
    dump_realization(&c, 6, &mut other).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, other);
    let text = String::from_utf8(a).unwrap();
    let mut bs: Vec<Vec<(f64, f64, bool)>> = vec![Vec::new(); 2];
    let mut ues = Vec::new();
    for line in text.lines() {
        let f: Vec<&str> = line.split(' ').collect();
        if f[0] == "ue" {
            assert_eq!(f.len(), 5);
            ues.push((f[3].parse::<usize>().unwrap(), f[4].parse::<usize>().unwrap()));
        } else {
            assert_eq!(f.len(), 4);
            let tier: usize = f[0].parse().unwrap();
            bs[tier - 1].push((f[1].parse().unwrap(), f[2].parse().unwrap(), f[3] == "1"));
        }
    }
    assert!(!ues.is_empty());
    for (tier, index) in &ues {
        assert!(bs[tier - 1][*index].2, "serving BS must be active");
    }
    let active: usize = bs.iter().flatten().filter(|b| b.2).count();
    let distinct: std::collections::HashSet<_> = ues.iter().collect();
    assert_eq!(active, distinct.len());
}

#[test]
fn dump_subcommand_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    std::fs::write(&cfg, SMALL).unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = binary().args(["dump", "--seed", "9", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    assert_eq!(run("a.txt"), run("b.txt"));
}

fn row_strategy() -> impl Strategy<Value = Row> {
    (
        "[a-z_.]{1,12}",
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
        prop::sample::select(vec!["analysis", "sim", "baseline"]),
        prop::sample::select(vec!["idle", "coverage", "rate", "ase"]),
        "[a-z0-9]{1,8}",
        prop::option::of(any::<f64>().prop_filter("finite", |x| x.is_finite())),
        prop::option::of(0.0f64..1e3),
    )
        .prop_map(|(p, value, engine, metric, tier, result, ci95)| Row {
            sweep_param: p,
            value,
            engine: engine.to_string(),
            metric: metric.to_string(),
            tier,
            result,
            ci95,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn csv_round_trip(rows in prop::collection::vec(row_strategy(), 0..30)) {
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn g17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = format_g17(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }
}
