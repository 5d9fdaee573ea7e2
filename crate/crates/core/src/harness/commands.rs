use std::fs;
use std::path::{Path, PathBuf};

use super::config::{write_config, ExperimentConfig, ForcingSpec, InitialSpec};
use super::csv::{read_csv, CsvWriter};
use super::ini::parse_ini;
use super::report::{manifest, Report};
use crate::chain::{
    chain_report, compute_bounds, replay_chain_with, BoundsTable, ChainLevel, ChainReport,
};
use crate::error::{NsvError, Result};
use crate::gevrey::{
    evaluate_plan, evolve_hat_v, fit_decay_rate, gevrey_norm, length_scales, mode_split,
    select_lambda, shell_spectrum, GevreyProfile, GevreySplitPlan, HatVOutput, HatVParams,
    LengthScales, ScaleInputs,
};
use crate::integrator::{energy_budget, run_simulation, Forcing, ABSORBING_WINDOW};
use crate::nonlinear::{estimate_inequality_constants, ConstantSource, Constants};
use crate::spectral::checkpoint::{read_checkpoint, read_checkpoint_header, write_checkpoint, Checkpoint};
use crate::spectral::{random_divfree_field, SpectralField, WaveLattice};
use crate::steady::{steady_report, SigmaChoice, SteadyStateReport};

pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const LEVEL2_DIR: &str = "chain/level2";

pub fn checkpoint_name(index: usize) -> String {
    format!("ckpt_{index:06}.nsvf")
}

pub fn build_forcing(config: &ExperimentConfig, lattice: &WaveLattice) -> Result<Forcing> {
    let forcing = match &config.forcing {
        ForcingSpec::None => Ok(Forcing::zero(lattice)),
        ForcingSpec::TaylorGreen { amplitude } => Forcing::taylor_green(lattice, *amplitude),
        ForcingSpec::RandomBand { kf, amplitude } => {
            Forcing::random_band(lattice, *kf, *amplitude, config.seed.wrapping_add(1))
        }
        ForcingSpec::Modes(modes) => Forcing::from_modes(lattice, modes),
    };
    forcing.map_err(|e| NsvError::Config(format!("forcing: {e}")))
}

pub fn build_initial(config: &ExperimentConfig, lattice: &WaveLattice) -> Result<SpectralField> {
    match &config.initial {
        InitialSpec::Zero => Ok(SpectralField::zeros(lattice)),
        InitialSpec::Random {
            amplitude,
            decay,
            power,
        } => {
            let (decay, power) = (*decay, *power);
            let u = random_divfree_field(lattice, config.seed, move |k| {
                k.powf(power) * (-decay * k).exp()
            });
            let norm = u.sobolev_norm(0.0);
            Ok(if norm > 0.0 { u.scaled(amplitude / norm) } else { u })
        }
        InitialSpec::Checkpoint(path) => {
            let ckpt = read_checkpoint(path)?;
            if !ckpt.field.lattice().same_as(lattice) {
                return Err(NsvError::Config(format!(
                    "initial checkpoint {} has N = {}, L = {}; config asks for N = {}, L = {}",
                    path.display(),
                    ckpt.field.lattice().n(),
                    ckpt.field.lattice().length(),
                    lattice.n(),
                    lattice.length()
                )));
            }
            Ok(ckpt.field.dealiased())
        }
    }
}

/// Measured constants with configured overrides, or the configured set.
pub fn resolve_constants(config: &ExperimentConfig, lattice: &WaveLattice) -> Result<Constants> {
    let k = &config.constants;
    let mut c = match k.source {
        ConstantSource::Empirical => {
            let report = estimate_inequality_constants(
                lattice,
                k.samples,
                config.seed,
                config.m_max.max(2),
                config.gevrey.tau0,
            )?;
            Constants::from_ratios(&report.training, k.safety)
        }
        ConstantSource::Manual => Constants {
            source: ConstantSource::Manual,
            ..Constants::unit()
        },
    };
    if let Some(v) = k.c {
        c.c = v;
    }
    if let Some(v) = k.c1 {
        c.c1 = v;
    }
    if let Some(v) = k.c2 {
        c.c2 = v;
    }
    if let Some(v) = k.cm {
        c.cm = v;
    }
    if let Some(v) = k.gevrey_c1 {
        c.gevrey_c1 = v;
        c.c4 = Constants::derived_c4(v);
        c.c5 = Constants::derived_c5(v);
    }
    if let Some(v) = k.c4 {
        c.c4 = v;
    }
    if let Some(v) = k.c5 {
        c.c5 = v;
    }
    if let Some(v) = k.c6 {
        c.c6 = v;
    }
    Ok(c)
}

fn constants_section(r: &mut Report, c: &Constants) {
    r.section("constants")
        .text("source", c.source.as_str())
        .num("c", c.c)
        .num("c1", c.c1)
        .num("c2", c.c2)
        .num("cm", c.cm)
        .num("gevrey_c1", c.gevrey_c1)
        .num("c4", c.c4)
        .num("c5", c.c5)
        .num("c6", c.c6);
}

fn write_manifest(
    run_dir: &Path,
    command: &str,
    config: &ExperimentConfig,
    mut inputs: Vec<(&str, String)>,
) -> Result<()> {
    inputs.insert(0, ("run_dir", run_dir.display().to_string()));
    if let InitialSpec::Checkpoint(p) = &config.initial {
        inputs.push(("initial_checkpoint", p.display().to_string()));
    }
    manifest(command, &write_config(config), &inputs).write(&run_dir.join(format!("manifest_{command}.txt")))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| {
        NsvError::Io(std::io::Error::new(
            e.kind(),
            format!("cannot create {}: {e}", path.display()),
        ))
    })
}

/// Sorted `ckpt_*.nsvf` files under `dir`.
pub fn list_checkpoints(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir)
        .map_err(|_| NsvError::Missing(format!("checkpoint directory {}", dir.display())))?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e?.path();
        let name = p.file_name().and_then(|s| s.to_str()).unwrap_or("");
        if name.starts_with("ckpt_") && name.ends_with(".nsvf") {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(NsvError::Missing(format!("no checkpoints in {}", dir.display())));
    }
    Ok(paths)
}

/// Checkpoints read on demand and linearly interpolated; at most two fields
/// are held in memory.
pub struct LazyTrajectory {
    times: Vec<f64>,
    paths: Vec<PathBuf>,
    cache: Vec<(usize, SpectralField)>,
}

impl LazyTrajectory {
    pub fn open(dir: &Path) -> Result<Self> {
        let paths = list_checkpoints(dir)?;
        let times = paths
            .iter()
            .map(|p| read_checkpoint_header(p).map(|h| h.time))
            .collect::<Result<Vec<f64>>>()?;
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NsvError::Checkpoint(format!(
                "checkpoint times in {} do not increase",
                dir.display()
            )));
        }
        Ok(Self {
            times,
            paths,
            cache: Vec::new(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn paths(&self) -> &[PathBuf] {
        &self.paths
    }

    pub fn load(&mut self, k: usize) -> Result<SpectralField> {
        if let Some((_, f)) = self.cache.iter().find(|(i, _)| *i == k) {
            return Ok(f.clone());
        }
        let f = read_checkpoint(&self.paths[k])?.field;
        if self.cache.len() == 2 {
            self.cache.remove(0);
        }
        self.cache.push((k, f.clone()));
        Ok(f)
    }

    pub fn at(&mut self, t: f64) -> Result<SpectralField> {
        let n = self.times.len();
        let (lo, hi) = (self.times[0], self.times[n - 1]);
        let slack = 1e-9 * (hi - lo).abs().max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(NsvError::InvalidInput(format!(
                "time {t} outside the stored span [{lo}, {hi}]"
            )));
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.load(0);
        }
        if k == n {
            return self.load(n - 1);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        if s == 0.0 {
            return self.load(k - 1);
        }
        let a = self.load(k - 1)?;
        let b = self.load(k)?;
        Ok(a.scaled(1.0 - s).axpy(s, &b))
    }
}

/// Values recorded by `simulate` in `t0.txt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunInfo {
    pub t0: Option<f64>,
    pub m1: Option<f64>,
    pub dt: f64,
}

fn report_value(doc: &super::ini::IniDocument, section: &str, key: &str) -> Result<Option<f64>> {
    let e = doc
        .section(section)
        .and_then(|s| s.get(key).ok().flatten())
        .ok_or_else(|| NsvError::Missing(format!("[{section}] {key} in t0.txt")))?;
    if e.value == "none" {
        return Ok(None);
    }
    e.value
        .parse()
        .map(Some)
        .map_err(|_| NsvError::Missing(format!("[{section}] {key} = {:?} in t0.txt", e.value)))
}

pub fn read_run_info(run_dir: &Path) -> Result<RunInfo> {
    let path = run_dir.join("t0.txt");
    let text = fs::read_to_string(&path).map_err(|_| NsvError::Missing(path.display().to_string()))?;
    let doc = parse_ini(&text)?;
    Ok(RunInfo {
        t0: report_value(&doc, "absorbing", "t0")?,
        m1: report_value(&doc, "absorbing", "m1")?,
        dt: report_value(&doc, "run", "dt")?
            .ok_or_else(|| NsvError::Missing("[run] dt in t0.txt".into()))?,
    })
}

#[derive(Clone, Debug)]
pub struct SimulateSummary {
    pub dt: f64,
    pub steps: usize,
    pub checkpoints: usize,
    pub t0: Option<f64>,
    pub m1: Option<f64>,
    pub max_relative_residual: f64,
}

/// Integrates the configured run into `run_dir`:
/// `checkpoints/ckpt_NNNNNN.nsvf`, `energy.csv`, `t0.txt`, `config.ini` and
/// `manifest_simulate.txt`. A blow-up leaves `blowup.txt` next to the
/// checkpoints written so far.
pub fn cmd_simulate(config: &ExperimentConfig, run_dir: &Path) -> Result<SimulateSummary> {
    config.validate()?;
    config.check_files()?;
    let params = config.sim_params();
    let lattice = params.lattice()?;
    let forcing = build_forcing(config, &lattice)?;
    let u0 = build_initial(config, &lattice)?;

    let ckpt_dir = run_dir.join(CHECKPOINT_DIR);
    create_dir(&ckpt_dir)?;
    for stale in list_checkpoints(&ckpt_dir).unwrap_or_default() {
        fs::remove_file(stale)?;
    }
    let _ = fs::remove_file(run_dir.join("blowup.txt"));
    fs::write(run_dir.join("config.ini"), write_config(config))?;
    write_manifest(run_dir, "simulate", config, vec![])?;

    let mut written = 0usize;
    let fluid = config.fluid();
    let result = run_simulation(&params, &forcing, u0, |t, u| {
        write_checkpoint(
            &ckpt_dir.join(checkpoint_name(written)),
            &Checkpoint {
                field: u.clone(),
                nu: fluid.nu,
                alpha: fluid.alpha,
                time: t,
            },
        )?;
        written += 1;
        Ok(())
    });
    let record = match result {
        Ok(r) => r,
        Err(NsvError::BlowUp { t, last_valid_t }) => {
            let mut r = Report::new();
            r.section("blowup")
                .num("t", t)
                .num("last_valid_t", last_valid_t)
                .text(
                    "last_checkpoint",
                    written
                        .checked_sub(1)
                        .map_or_else(|| "none".to_string(), checkpoint_name),
                );
            r.write(&run_dir.join("blowup.txt"))?;
            return Err(NsvError::BlowUp { t, last_valid_t });
        }
        Err(e) => return Err(e),
    };

    let budget = energy_budget(&record.budget, record.t0)?;
    let mut csv = CsvWriter::create(
        &run_dir.join("energy.csv"),
        &["t", "E", "enstrophy_norm", "dissipation", "injection", "residual"],
    )?;
    for row in budget.rows.iter().step_by(record.steps_per_output) {
        let s = row.sample;
        csv.row(&[s.t, s.energy, s.enstrophy, s.dissipation, s.injection, row.residual])?;
    }
    csv.finish()?;

    let mut r = Report::new();
    r.section("absorbing")
        .opt("t0", record.t0)
        .opt("m1", record.m1)
        .text("window", ABSORBING_WINDOW)
        .flag("detected", record.t0.is_some());
    r.section("budget")
        .num("window_start", budget.window_start)
        .num("epsilon", budget.epsilon)
        .num("epsilon_sup", budget.epsilon_sup)
        .num("max_residual", budget.max_residual)
        .num("max_relative_residual", budget.max_relative_residual);
    r.section("run")
        .num("dt", record.dt)
        .text("steps", record.steps)
        .text("steps_per_output", record.steps_per_output)
        .text("checkpoints", written);
    r.write(&run_dir.join("t0.txt"))?;

    Ok(SimulateSummary {
        dt: record.dt,
        steps: record.steps,
        checkpoints: written,
        t0: record.t0,
        m1: record.m1,
        max_relative_residual: budget.max_relative_residual,
    })
}

fn check_run_matches(config: &ExperimentConfig, lattice: &WaveLattice, first: &Path) -> Result<()> {
    let h = read_checkpoint_header(first)?;
    if h.n as usize != lattice.n() || h.length != lattice.length() || h.nu != config.nu || h.alpha != config.alpha {
        return Err(NsvError::Config(format!(
            "run was made with N = {}, L = {}, nu = {}, alpha = {}; config has N = {}, L = {}, nu = {}, alpha = {}",
            h.n, h.length, h.nu, h.alpha, lattice.n(), lattice.length(), config.nu, config.alpha
        )));
    }
    Ok(())
}

fn bounds_report(bounds: &BoundsTable, constants: &Constants) -> Report {
    let mut r = Report::new();
    r.section("bounds")
        .num("lambda1", bounds.lambda1)
        .num("d0", bounds.d0)
        .num("m1", bounds.m1)
        .num("m3_2", bounds.m32)
        .num("m2", bounds.m2);
    for (m, b) in &bounds.higher {
        r.num(&format!("m{m}"), *b);
    }
    r.text("source", bounds.source.as_str());
    constants_section(&mut r, constants);
    r
}

#[derive(Clone, Debug)]
pub struct ChainSummary {
    pub bounds: BoundsTable,
    pub report: ChainReport,
    pub samples: usize,
}

fn running_sup(xs: &[f64]) -> Vec<f64> {
    let mut m = 0.0f64;
    xs.iter()
        .map(|&x| {
            m = m.max(x);
            m
        })
        .collect()
}

fn write_chain_outputs(
    run_dir: &Path,
    levels: &[ChainLevel],
    report: &ChainReport,
    bounds: &BoundsTable,
    constants: &Constants,
) -> Result<()> {
    bounds_report(bounds, constants).write(&run_dir.join("bounds.txt"))?;
    let mut csv = CsvWriter::create(
        &run_dir.join("chain.csv"),
        &["level", "t", "error_V_norm", "bound_M", "sup_norm_measured"],
    )?;
    for level in levels {
        let sup = running_sup(&level.level_norms);
        for i in 0..level.times.len() {
            csv.row(&[
                level.index as f64,
                level.times[i],
                level.errors[i],
                level.bound.unwrap_or(f64::NAN),
                sup[i],
            ])?;
        }
    }
    csv.finish()?;

    let mut r = Report::new();
    r.section("chain")
        .opt("t0", report.t0)
        .text("levels", report.levels.len())
        .flag("terminal_errors_non_increasing", report.errors_non_increasing(0.0));
    for (lr, level) in report.levels.iter().zip(levels) {
        r.section(&format!("level_{}", lr.index))
            .num("norm_order", level.norm_order())
            .num("terminal_error", lr.terminal_error)
            .num("terminal_relative_error", lr.terminal_relative_error)
            .opt("decay_rate", lr.decay_rate)
            .flag("trending_down", lr.trending_down)
            .opt("sup_norm_after_t0", lr.sup_norm)
            .opt("bound", lr.bound)
            .text(
                "within_bound",
                lr.within_bound.map_or_else(|| "unknown".to_string(), |b| b.to_string()),
            );
        if let Some(c) = level.cadence {
            r.num("cadence", c.cadence)
                .num("interp_relative_error", c.relative_error)
                .num("required_cadence", c.required);
        }
        r.text("warnings", lr.warnings.len());
    }
    r.write(&run_dir.join("chain_report.txt"))
}

/// Rebuilds the chain from the checkpoints of a finished run.
///
/// Nothing is written unless every level passes the cadence check; level-2
/// states go to `chain/level2/`.
pub fn cmd_chain(config: &ExperimentConfig, run_dir: &Path) -> Result<ChainSummary> {
    config.validate()?;
    let paths = list_checkpoints(&run_dir.join(CHECKPOINT_DIR))?;
    let lattice = config.sim_params().lattice()?;
    check_run_matches(config, &lattice, &paths[0])?;
    let fluid = config.fluid();
    let forcing = build_forcing(config, &lattice)?;
    let constants = resolve_constants(config, &lattice)?;
    let bounds = compute_bounds(&fluid, forcing.field(), &constants, config.m_max)?;
    let t0 = read_run_info(run_dir).ok().and_then(|i| i.t0);

    let tmp = run_dir.join("chain.tmp");
    let _ = fs::remove_dir_all(&tmp);
    let keep_level2 = config.m_max >= 2;
    if keep_level2 {
        create_dir(&tmp.join("level2"))?;
    }
    let mut stored = 0usize;
    let samples = paths
        .iter()
        .map(|p| read_checkpoint(p).map(|c| (c.time, c.field)));
    let replayed = replay_chain_with(
        samples,
        &fluid,
        forcing.field(),
        config.m_max,
        Some(&bounds),
        config.interp_tol,
        |level, t, v| {
            if level == 2 {
                write_checkpoint(
                    &tmp.join("level2").join(checkpoint_name(stored)),
                    &Checkpoint {
                        field: v.clone(),
                        nu: fluid.nu,
                        alpha: fluid.alpha,
                        time: t,
                    },
                )?;
                stored += 1;
            }
            Ok(())
        },
    );
    let levels = match replayed {
        Ok(l) => l,
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
    };
    let failing = levels
        .iter()
        .filter_map(|l| l.cadence)
        .filter(|c| !c.ok)
        .min_by(|a, b| a.required.total_cmp(&b.required));
    if let Some(c) = failing {
        let _ = fs::remove_dir_all(&tmp);
        return Err(NsvError::CadenceInsufficient {
            cadence: c.cadence,
            required: c.required,
        });
    }

    let report = chain_report(&levels, t0);
    let chain_dir = run_dir.join("chain");
    let _ = fs::remove_dir_all(&chain_dir);
    if keep_level2 {
        create_dir(&chain_dir)?;
        fs::rename(tmp.join("level2"), run_dir.join(LEVEL2_DIR))?;
    }
    let _ = fs::remove_dir_all(&tmp);
    write_chain_outputs(run_dir, &levels, &report, &bounds, &constants)?;
    write_manifest(
        run_dir,
        "chain",
        config,
        vec![("checkpoints", paths.len().to_string())],
    )?;
    Ok(ChainSummary {
        bounds,
        report,
        samples: paths.len(),
    })
}

fn condition_lines(r: &mut Report, name: &str, c: &crate::gevrey::ConditionEval) {
    r.num(&format!("{name}_lhs"), c.lhs)
        .num(&format!("{name}_rhs"), c.rhs)
        .num(&format!("{name}_margin"), c.margin())
        .flag(&format!("{name}_satisfied"), c.satisfied);
}

pub const OUTSIDE_HYPOTHESES: &str = "outside theorem hypotheses";

fn plan_report(plan: &GevreySplitPlan, t0: Option<f64>) -> Report {
    let mut r = Report::new();
    r.section("plan")
        .text("status", "ok")
        .text(
            "hypotheses",
            if plan.outside_hypotheses() {
                OUTSIDE_HYPOTHESES
            } else {
                "satisfied"
            },
        )
        .opt("relaxed", plan.relaxed)
        .num("lambda", plan.lambda)
        .text("level", plan.level.map_or_else(|| "none".to_string(), |l| l.to_string()))
        .num("tau", plan.tau)
        .num("tau0", plan.tau0)
        .num("d2", plan.d2)
        .num("lambda1", plan.lambda1)
        .num("m1", plan.m1)
        .num("m2", plan.m2)
        .num("fhat_norm", plan.fhat_norm)
        .flag("above_inverse_alpha_sq", plan.above_inverse_alpha_sq)
        .flag("forcing_below_split", plan.forcing_below_split)
        .opt("t0", t0);
    r.section("conditions");
    condition_lines(&mut r, "i", &plan.cond_i);
    condition_lines(&mut r, "ii", &plan.cond_ii);
    condition_lines(&mut r, "iii", &plan.cond_iii);
    r.section("constants")
        .text("source", plan.source.as_str())
        .num("gevrey_c1", plan.gevrey_c1)
        .num("c4", plan.c4)
        .num("c5", plan.c5)
        .num("c", plan.c);
    r
}

#[derive(Clone, Debug)]
pub struct GevreySummary {
    pub plan: GevreySplitPlan,
    pub hat: Option<HatVOutput>,
    pub profiles: Vec<GevreyProfile>,
    pub scales: LengthScales,
}

/// Plan, high-mode evolution from `t0`, spectrum fits of the last snapshots
/// and the length-scale report. Needs the output of `chain`.
pub fn cmd_gevrey(config: &ExperimentConfig, run_dir: &Path) -> Result<GevreySummary> {
    config.validate()?;
    let mut u_traj = LazyTrajectory::open(&run_dir.join(CHECKPOINT_DIR))?;
    let mut v2_traj = LazyTrajectory::open(&run_dir.join(LEVEL2_DIR)).map_err(|_| {
        NsvError::Missing(format!(
            "chain level 2 under {}; run `chain` with m_max >= 2 first",
            run_dir.display()
        ))
    })?;
    let info = read_run_info(run_dir)?;
    let lattice = config.sim_params().lattice()?;
    check_run_matches(config, &lattice, &u_traj.paths()[0])?;
    let fluid = config.fluid();
    let forcing = build_forcing(config, &lattice)?;
    let constants = resolve_constants(config, &lattice)?;
    let bounds = compute_bounds(&fluid, forcing.field(), &constants, config.m_max.max(2))?;
    let options = config.gevrey.plan_options();
    write_manifest(
        run_dir,
        "gevrey",
        config,
        vec![("checkpoints", u_traj.times().len().to_string())],
    )?;

    let plan = match select_lambda(&fluid, &bounds, forcing.field(), &constants, options) {
        Ok(p) => p,
        Err(NsvError::InsufficientResolution {
            required_lambda,
            lattice_max,
        }) => {
            let at_max =
                evaluate_plan(&fluid, &bounds, forcing.field(), &constants, options, lattice_max)?;
            let mut r = Report::new();
            r.section("plan")
                .text("status", "insufficient resolution")
                .num("required_lambda", required_lambda)
                .num("lattice_max", lattice_max)
                .opt("relaxed", options.relaxed);
            r.section("conditions_at_lattice_max");
            condition_lines(&mut r, "i", &at_max.cond_i);
            condition_lines(&mut r, "ii", &at_max.cond_ii);
            condition_lines(&mut r, "iii", &at_max.cond_iii);
            r.write(&run_dir.join("plan.txt"))?;
            return Err(NsvError::InsufficientResolution {
                required_lambda,
                lattice_max,
            });
        }
        Err(e) => return Err(e),
    };
    plan_report(&plan, info.t0).write(&run_dir.join("plan.txt"))?;

    let times = u_traj.times().to_vec();
    let t_last = *times.last().expect("non-empty trajectory");
    let start = info.t0.unwrap_or(times[0]).max(v2_traj.times()[0]);
    let horizon = t_last.min(*v2_traj.times().last().expect("non-empty")) - start;
    let mut hat_csv = CsvWriter::create(&run_dir.join("hat.csv"), &["t", "phi", "q_error"])?;
    let hat = if horizon > 0.0 {
        let params = HatVParams {
            fluid,
            t0: start,
            horizon,
            dt: config.gevrey.hat_dt.unwrap_or(info.dt),
            cadence: config.cadence,
        };
        let mut q_err = Vec::new();
        let out = evolve_hat_v(
            |t| v2_traj.at(t),
            forcing.field(),
            &plan,
            &params,
            |t, h| {
                let (_, qu) = mode_split(&u_traj.at(t)?, plan.lambda);
                q_err.push((&qu - h).sobolev_norm(1.0));
                Ok(())
            },
        )?;
        for ((t, phi), q) in out.times.iter().zip(&out.phi).zip(&q_err) {
            hat_csv.row(&[*t, *phi, *q])?;
        }
        Some(out)
    } else {
        None
    };
    hat_csv.finish()?;

    let n = times.len();
    let first = n.saturating_sub(config.gevrey.snapshots);
    let mut spectrum_csv = CsvWriter::create(&run_dir.join("spectrum.csv"), &["t", "k", "E_k"])?;
    let mut profile_csv = CsvWriter::create(
        &run_dir.join("profile.csv"),
        &["t", "tau_star", "r2", "k_lo", "k_hi"],
    )?;
    let mut profiles = Vec::new();
    for (k, &t) in times.iter().enumerate().skip(first) {
        let u = u_traj.load(k)?;
        let spectrum = shell_spectrum(&u, t);
        for (shell, e) in spectrum.energy.iter().enumerate() {
            spectrum_csv.row(&[t, shell as f64, *e])?;
        }
        let profile = fit_decay_rate(&spectrum, &config.gevrey.fit);
        let profile = match profile.tau_star {
            Some(tau) if tau > 0.0 => profile.with_norms(&u, tau),
            _ => profile,
        };
        profile_csv.row(&[
            t,
            profile.tau_star.unwrap_or(f64::NAN),
            profile.r2,
            profile.k_lo as f64,
            profile.k_hi as f64,
        ])?;
        profiles.push(profile);
    }
    spectrum_csv.finish()?;
    profile_csv.finish()?;

    if let Some(out) = &hat {
        let mut r = Report::new();
        r.section("hat")
            .num("t0", start)
            .num("horizon", horizon)
            .num("sup_phi", out.sup_phi)
            .num("ceiling", out.coefficients.ceiling)
            .num("a", out.coefficients.a)
            .num("b", out.coefficients.b)
            .num("c", out.coefficients.c)
            .flag("coefficient_condition", out.coefficients.coefficient_condition)
            .flag("flagged", out.flagged)
            .num("max_low_leak", out.max_low_leak)
            .num("final_gevrey_norm", gevrey_norm(&out.final_state, 1.0, plan.tau));
        r.write(&run_dir.join("hat.txt"))?;
    }
    let scales = cmd_scales_inner(config, run_dir, &info)?;
    Ok(GevreySummary {
        plan,
        hat,
        profiles,
        scales,
    })
}

fn cmd_scales_inner(config: &ExperimentConfig, run_dir: &Path, info: &RunInfo) -> Result<LengthScales> {
    let table = read_csv(&run_dir.join("energy.csv"))?;
    let t = table.column("t")?;
    let ens = table.column("enstrophy_norm")?;
    let start = info.t0.unwrap_or(f64::NEG_INFINITY);
    let window: Vec<f64> = t
        .iter()
        .zip(&ens)
        .filter(|(t, _)| **t >= start)
        .map(|(_, e)| *e)
        .collect();
    if window.is_empty() {
        return Err(NsvError::Missing("energy samples after t0".into()));
    }
    let epsilon = config.nu * window.iter().sum::<f64>() / window.len() as f64;
    let epsilon_sup = config.nu * window.iter().copied().fold(0.0, f64::max);
    let lambda1 = config.sim_params().lattice()?.lambda1();
    let scales = length_scales(&ScaleInputs {
        nu: config.nu,
        alpha: config.alpha,
        length: config.length,
        epsilon,
        epsilon_sup,
        m1: info.m1,
        lambda1,
    });
    let mut r = Report::new();
    r.section("inputs")
        .num("nu", config.nu)
        .num("alpha", config.alpha)
        .num("length", config.length)
        .opt("window_start", info.t0)
        .text("samples", window.len());
    r.section("scales")
        .num("epsilon", scales.epsilon)
        .num("epsilon_sup", scales.epsilon_sup)
        .opt("epsilon_sup_bound", scales.epsilon_sup_bound)
        .num("ell_k", scales.ell_k)
        .num("lam1", scales.lam1)
        .num("lam2", scales.lam2)
        .num("lam3", scales.lam3)
        .num("lam4", scales.lam4)
        .num("ell_nsv", scales.ell_nsv)
        .opt("ell_nsv_from_bound", scales.ell_nsv_from_bound)
        .opt("m2_scaling", scales.m2_scaling);
    r.write(&run_dir.join("scales.txt"))?;
    Ok(scales)
}

/// Length-scale report from `energy.csv` and `t0.txt`.
pub fn cmd_scales(config: &ExperimentConfig, run_dir: &Path) -> Result<LengthScales> {
    config.validate()?;
    let info = read_run_info(run_dir)?;
    let scales = cmd_scales_inner(config, run_dir, &info)?;
    write_manifest(run_dir, "scales", config, vec![])?;
    Ok(scales)
}

/// Stationary solution, its blow-up time and the measured tail:
/// `steady.txt`, `u_ss.nsvf`, `residuals.csv`. Non-convergence writes the
/// files for the last iterate and then fails.
pub fn cmd_steady(config: &ExperimentConfig, run_dir: &Path) -> Result<SteadyStateReport> {
    config.validate()?;
    let lattice = config.sim_params().lattice()?;
    let forcing = build_forcing(config, &lattice)?;
    create_dir(run_dir)?;
    write_manifest(run_dir, "steady", config, vec![])?;
    let s = &config.steady;
    let report = steady_report(
        &forcing,
        config.nu,
        &s.options,
        &config.bound_options(),
        &config.gevrey.fit,
    )?;
    let sol = &report.solution;

    let mut csv = CsvWriter::create(&run_dir.join("residuals.csv"), &["iteration", "residual"])?;
    for (i, r) in sol.history.iter().enumerate() {
        csv.row(&[i as f64, *r])?;
    }
    csv.finish()?;
    write_checkpoint(
        &run_dir.join("u_ss.nsvf"),
        &Checkpoint {
            field: sol.u.clone(),
            nu: config.nu,
            alpha: config.alpha,
            time: 0.0,
        },
    )?;

    let check = &report.check;
    let mut r = Report::new();
    r.section("solution")
        .flag("converged", sol.converged)
        .text("iterations", sol.iterations)
        .num("residual", sol.residual)
        .num("tol", s.options.tol)
        .num("first_step", sol.first_step)
        .num("u_norm_v", sol.u.sobolev_norm(1.0));
    r.section("blow_up")
        .num("n_f", report.n_f)
        .text(
            "sigma_choice",
            match s.sigma {
                SigmaChoice::Fixed(_) => "fixed",
                SigmaChoice::SelfConsistent => "self_consistent",
            },
        )
        .num("sigma", report.sigma)
        .num("c", report.c)
        .text("c_source", if report.c_measured { "empirical" } else { "configured" })
        .num("tau_b", report.blow_up.tau_b)
        .num("tau_b_sigma_zero", report.tau_b_sigma_zero)
        .flag("tau_b_infinite", report.blow_up.is_infinite())
        .num("scaling_form", report.blow_up.scaling_form);
    r.section("comparison")
        .opt("tau_star", check.profile.tau_star)
        .num("r2", check.profile.r2)
        .text("k_lo", check.profile.k_lo)
        .text("k_hi", check.profile.k_hi)
        .num("safety", check.safety)
        .text(
            "tau_star_vs_tau_b",
            match check.passes {
                Some(true) => "tau_star >= tau_b",
                Some(false) => "tau_star < tau_b",
                None => "inconclusive",
            },
        )
        .num("ln_norm_2_half_tau_b", check.ln_norm_half_tau_b);
    r.write(&run_dir.join("steady.txt"))?;

    if !sol.converged {
        return Err(NsvError::NotConverged {
            iterations: sol.iterations,
            residual: sol.residual,
        });
    }
    Ok(report)
}
