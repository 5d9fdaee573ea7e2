use std::fs;

use nsv_core::harness::csv::read_csv;
use nsv_core::harness::ini::parse_ini;
use nsv_core::harness::report::sha256_hex;
use nsv_core::harness::{
    cmd_chain, cmd_gevrey, cmd_scales, cmd_simulate, cmd_steady, parse_config, write_config,
};

const FORCED: &str = "\
[run]
seed = 7

[fluid]
nu = 0.1
alpha = 0.5

[lattice]
n = 16

[time]
dt = 0.01
t_end = 2.0
cadence = 0.02

[initial]
kind = random
amplitude = 0.5
decay = 1.0

[forcing]
kind = taylor_green
amplitude = 0.1

[chain]
m_max = 2

[gevrey]
relaxed = 1e4
snapshots = 3
";

fn value(text: &str, section: &str, key: &str) -> String {
    let doc = parse_ini(text).unwrap();
    doc.section(section).unwrap().get(key).unwrap().unwrap().value.clone()
}

#[test]
fn forced_run_through_every_command() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let config = parse_config(FORCED).unwrap();

    let sim = cmd_simulate(&config, &dir).unwrap();
    assert_eq!(sim.checkpoints, 101);
    assert_eq!(fs::read_dir(dir.join("checkpoints")).unwrap().count(), 101);
    assert!(sim.max_relative_residual < 1e-4, "{}", sim.max_relative_residual);
    let stored = fs::read_to_string(dir.join("config.ini")).unwrap();
    assert_eq!(parse_config(&stored).unwrap(), config);
    let manifest = fs::read_to_string(dir.join("manifest_simulate.txt")).unwrap();
    assert_eq!(value(&manifest, "manifest", "config_sha256"), sha256_hex(stored.as_bytes()));
    let energy = read_csv(&dir.join("energy.csv")).unwrap();
    assert_eq!(energy.rows.len(), 101);

    let chain = cmd_chain(&config, &dir).unwrap();
    assert_eq!(chain.samples, 101);
    assert_eq!(chain.report.levels.len(), 2);
    let rows = read_csv(&dir.join("chain.csv")).unwrap();
    assert_eq!(rows.rows.len(), 2 * 101);
    let first = fs::read(dir.join("chain.csv")).unwrap();
    assert_eq!(fs::read_dir(dir.join("chain/level2")).unwrap().count(), 101);
    cmd_chain(&config, &dir).unwrap();
    assert_eq!(fs::read(dir.join("chain.csv")).unwrap(), first);
    for l in &chain.report.levels {
        assert!(l.terminal_error.is_finite());
    }

    let g = cmd_gevrey(&config, &dir).unwrap();
    assert!(g.plan.lambda >= g.plan.lambda1);
    assert!(g.plan.outside_hypotheses());
    assert_eq!(g.profiles.len(), 3);
    let hat = read_csv(&dir.join("hat.csv")).unwrap();
    assert_eq!(hat.rows[0][hat.column_index("phi").unwrap()], 0.0);
    let out = g.hat.as_ref().unwrap();
    assert_eq!(out.max_low_leak, 0.0);
    let spectrum = read_csv(&dir.join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.rows.len() % 3, 0);

    let scales = cmd_scales(&config, &dir).unwrap();
    assert_eq!(scales, g.scales);
    let t = energy.column("t").unwrap();
    let ens = energy.column("enstrophy_norm").unwrap();
    let start = sim.t0.unwrap_or(f64::NEG_INFINITY);
    let window: Vec<f64> = t.iter().zip(&ens).filter(|(t, _)| **t >= start).map(|(_, e)| *e).collect();
    let eps = config.nu * window.iter().sum::<f64>() / window.len() as f64;
    assert!((scales.epsilon - eps).abs() <= 1e-14 * eps, "{} {eps}", scales.epsilon);

    let steady = cmd_steady(&config, &dir).unwrap();
    assert!(steady.solution.residual <= config.steady.options.tol);
    let res = read_csv(&dir.join("residuals.csv")).unwrap().column("residual").unwrap();
    assert_eq!(*res.last().unwrap(), steady.solution.residual);
    assert!(dir.join("u_ss.nsvf").exists());
}

#[test]
fn config_writer_is_a_fixed_point() {
    let config = parse_config(FORCED).unwrap();
    let text = write_config(&config);
    assert_eq!(write_config(&parse_config(&text).unwrap()), text);
}
