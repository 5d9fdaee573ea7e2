use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nsv_core::harness::csv::read_csv;
use nsv_core::harness::ini::parse_ini;

const FREE: &str = "\
[run]
seed = 3

[fluid]
nu = 0.1
alpha = 0.5

[lattice]
n = 16

[time]
dt = 0.01
t_end = 1.0
cadence = 0.02

[initial]
kind = random
amplitude = 1.0
decay = 1.0

[forcing]
kind = none

[chain]
m_max = 2
";

fn nsv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsv"))
        .args(args)
        .output()
        .expect("spawn nsv")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.ini");
    fs::write(&path, text).unwrap();
    path
}

fn run(command: &str, config: &Path, run_dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        command,
        "--config",
        config.to_str().unwrap(),
        "--run-dir",
        run_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    nsv(&args)
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn report_value(path: &Path, section: &str, key: &str) -> String {
    let doc = parse_ini(&fs::read_to_string(path).unwrap()).unwrap();
    doc.section(section)
        .unwrap_or_else(|| panic!("no [{section}] in {}", path.display()))
        .get(key)
        .unwrap()
        .unwrap_or_else(|| panic!("no {key} in [{section}]"))
        .value
        .clone()
}

#[test]
fn unforced_run_decays_and_the_pipeline_is_trivial() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), FREE);
    let dir = tmp.path().join("out");

    ok(&run("simulate", &config, &dir, &[]));
    let energy = read_csv(&dir.join("energy.csv")).unwrap();
    let e = energy.column("E").unwrap();
    assert!(e.len() > 10);
    assert!(e.windows(2).all(|w| w[1] <= w[0]), "{e:?}");
    assert!(e.last().unwrap() < &e[0]);

    ok(&run("chain", &config, &dir, &[]));
    let chain = read_csv(&dir.join("chain.csv")).unwrap();
    for b in chain.column("bound_M").unwrap() {
        assert_eq!(b, 0.0);
    }

    ok(&run("gevrey", &config, &dir, &[]));
    let plan = dir.join("plan.txt");
    assert_eq!(report_value(&plan, "plan", "hypotheses"), "satisfied");
    assert_eq!(
        report_value(&plan, "plan", "lambda"),
        report_value(&plan, "plan", "lambda1")
    );
    // h is driven by B(u, u), which decays with u.
    let phi = read_csv(&dir.join("hat.csv")).unwrap().column("phi").unwrap();
    assert!(phi.iter().all(|p| p.is_finite() && *p < 1e-9), "{phi:?}");

    ok(&run("scales", &config, &dir, &[]));
    assert!(dir.join("scales.txt").exists());
}

#[test]
fn rest_state_stays_at_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let text = FREE.replace("kind = random\namplitude = 1.0\ndecay = 1.0", "kind = zero");
    let config = write_config(tmp.path(), &text);
    let dir = tmp.path().join("out");
    for command in ["simulate", "chain", "gevrey"] {
        ok(&run(command, &config, &dir, &[]));
    }
    let e = read_csv(&dir.join("energy.csv")).unwrap().column("E").unwrap();
    assert!(e.iter().all(|x| *x == 0.0));
    let phi = read_csv(&dir.join("hat.csv")).unwrap().column("phi").unwrap();
    assert!(!phi.is_empty());
    assert!(phi.iter().all(|p| *p == 0.0), "{phi:?}");
}

#[test]
fn runs_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), FREE);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(&run("simulate", &config, &a, &[]));
    ok(&run("simulate", &config, &b, &[]));
    for name in ["energy.csv", "t0.txt", "config.ini"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let ckpts = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d.join("checkpoints"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        v.sort();
        v
    };
    let (ca, cb) = (ckpts(&a), ckpts(&b));
    assert_eq!(ca.len(), cb.len());
    for (x, y) in ca.iter().zip(&cb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }

    let c = tmp.path().join("c");
    ok(&run("simulate", &config, &c, &["--seed", "4"]));
    assert_ne!(
        fs::read(a.join("energy.csv")).unwrap(),
        fs::read(c.join("energy.csv")).unwrap()
    );
}

#[test]
fn zero_dt_is_a_config_error_with_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), &FREE.replace("dt = 0.01", "dt = 0"));
    let dir = tmp.path().join("out");
    let out = run("simulate", &config, &dir, &[]);
    assert_eq!(out.status.code(), Some(5));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 12"), "{err}");
    assert!(!dir.exists());
}

#[test]
fn missing_config_flag_is_a_config_error() {
    let out = nsv(&["simulate"]);
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn chain_without_checkpoints_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), FREE);
    let dir = tmp.path().join("empty");
    fs::create_dir(&dir).unwrap();
    let out = run("chain", &config, &dir, &[]);
    assert_eq!(out.status.code(), Some(8));
    assert_eq!(fs::read_dir(&dir).unwrap().count(), 0);

    let out = run("gevrey", &config, &dir, &[]);
    assert_eq!(out.status.code(), Some(8));
}

#[test]
fn unwritable_run_dir_is_an_io_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), FREE);
    let blocker = tmp.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let out = run("simulate", &config, &blocker.join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn steady_without_forcing_has_infinite_radius() {
    let tmp = tempfile::tempdir().unwrap();
    let text = FREE.replace("n = 16", "n = 8");
    let config = write_config(tmp.path(), &text);
    let dir = tmp.path().join("out");
    ok(&run("steady", &config, &dir, &[]));
    let steady = dir.join("steady.txt");
    assert_eq!(report_value(&steady, "blow_up", "tau_b_infinite"), "true");
    assert!(dir.join("u_ss.nsvf").exists());
}

#[test]
fn steady_iteration_cap_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let text = FREE
        .replace("nu = 0.1", "nu = 0.05")
        .replace("kind = none", "kind = random_band\nkf = 2.5\namplitude = 5.0")
        + "\n[steady]\nmax_iter = 2\ntol = 1e-14\n";
    let config = write_config(tmp.path(), &text);
    let out = run("steady", &config, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn relaxed_split_is_labelled() {
    let tmp = tempfile::tempdir().unwrap();
    let text = FREE.replace("kind = none", "kind = taylor_green\namplitude = 0.5");
    let config = write_config(tmp.path(), &text);
    let dir = tmp.path().join("out");
    ok(&run("simulate", &config, &dir, &[]));
    ok(&run("chain", &config, &dir, &[]));
    let out = run("gevrey", &config, &dir, &["--relaxed-lambda", "1000"]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("outside theorem hypotheses"));
    assert_eq!(
        report_value(&dir.join("plan.txt"), "plan", "hypotheses"),
        "outside theorem hypotheses"
    );
}
