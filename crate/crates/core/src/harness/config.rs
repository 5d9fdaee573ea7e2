//! Experiment configuration.
//!
//! ```text
//! [run]        seed, output_dir
//! [fluid]      nu, alpha
//! [lattice]    n, length
//! [time]       dt (or `auto`), t_end, cadence
//! [initial]    kind = zero | random | checkpoint; amplitude, decay, power, path
//! [forcing]    kind = none | taylor_green | random_band | modes; amplitude, kf,
//!              mode = jx jy jz ux_re ux_im uy_re uy_im uz_re uz_im (repeatable)
//! [chain]      m_max, interp_tol
//! [constants]  source = empirical | manual; c, c1, c2, cm, gevrey_c1, c4, c5, c6;
//!              samples, safety
//! [gevrey]     tau0, relaxed, fit_lower, fit_upper, fit_min_shells, hat_dt, snapshots
//! [steady]     tol, max_iter, theta, sigma (or `self_consistent`), c, safety
//! ```
//!
//! Every section except `[fluid]`, `[lattice]` and `[time]` may be omitted.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::ini::{parse_ini, Entry, IniDocument, Section};
use crate::chain::INTERP_TOL;
use crate::error::{NsvError, Result};
use crate::gevrey::{FitPolicy, PlanOptions};
use crate::integrator::{FluidParams, SimParams};
use crate::nonlinear::ConstantSource;
use crate::spectral::{Vec3c, Wavevector};
use crate::steady::{BoundOptions, SigmaChoice, SteadyOptions};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Zero,
    /// `|u_j| ~ |j|^power e^{-decay |j|}`, rescaled to `|u|_0 = amplitude`.
    Random {
        amplitude: f64,
        decay: f64,
        power: f64,
    },
    Checkpoint(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSpec {
    None,
    TaylorGreen { amplitude: f64 },
    RandomBand { kf: f64, amplitude: f64 },
    Modes(Vec<(Wavevector, Vec3c)>),
}

/// Overrides are applied on top of measured constants; with
/// `source = manual` the five primary constants are required.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantsSpec {
    pub source: ConstantSource,
    pub c: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub cm: Option<f64>,
    pub gevrey_c1: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub c6: Option<f64>,
    pub samples: usize,
    pub safety: f64,
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        Self {
            source: ConstantSource::Empirical,
            c: None,
            c1: None,
            c2: None,
            cm: None,
            gevrey_c1: None,
            c4: None,
            c5: None,
            c6: None,
            samples: 40,
            safety: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GevreySpec {
    pub tau0: f64,
    pub relaxed: Option<f64>,
    pub fit: FitPolicy,
    /// Step for the high-mode evolution; the run's step when `None`.
    pub hat_dt: Option<f64>,
    /// Number of trailing checkpoints whose spectra are fitted.
    pub snapshots: usize,
}

impl Default for GevreySpec {
    fn default() -> Self {
        Self {
            tau0: PlanOptions::default().tau0,
            relaxed: None,
            fit: FitPolicy::default(),
            hat_dt: None,
            snapshots: 5,
        }
    }
}

impl GevreySpec {
    pub fn plan_options(&self) -> PlanOptions {
        PlanOptions {
            tau0: self.tau0,
            relaxed: self.relaxed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadySpec {
    pub options: SteadyOptions,
    pub sigma: SigmaChoice,
    /// Constant of `tau_B`; measured when absent.
    pub c: Option<f64>,
    pub safety: f64,
}

impl Default for SteadySpec {
    fn default() -> Self {
        Self {
            options: SteadyOptions::default(),
            sigma: SigmaChoice::SelfConsistent,
            c: None,
            safety: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub nu: f64,
    pub alpha: f64,
    pub n: usize,
    pub length: f64,
    pub dt: Option<f64>,
    pub t_end: f64,
    pub cadence: f64,
    pub initial: InitialSpec,
    pub forcing: ForcingSpec,
    pub m_max: usize,
    pub interp_tol: f64,
    pub constants: ConstantsSpec,
    pub gevrey: GevreySpec,
    pub steady: SteadySpec,
}

impl ExperimentConfig {
    /// Defaults for everything but the physical parameters.
    pub fn new(nu: f64, alpha: f64, n: usize, t_end: f64, cadence: f64) -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("run"),
            nu,
            alpha,
            n,
            length: 2.0 * PI,
            dt: None,
            t_end,
            cadence,
            initial: InitialSpec::Zero,
            forcing: ForcingSpec::None,
            m_max: 2,
            interp_tol: INTERP_TOL,
            constants: ConstantsSpec::default(),
            gevrey: GevreySpec::default(),
            steady: SteadySpec::default(),
        }
    }

    /// `tau_B` settings: `[steady] c`, else `[constants] c` under a manual
    /// source, else measured with the `[constants]` sample count and safety.
    pub fn bound_options(&self) -> BoundOptions {
        let manual = (self.constants.source == ConstantSource::Manual)
            .then_some(self.constants.c)
            .flatten();
        BoundOptions {
            sigma: self.steady.sigma,
            c: self.steady.c.or(manual),
            samples: self.constants.samples,
            seed: self.seed,
            c_safety: self.constants.safety,
            safety: self.steady.safety,
        }
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            fluid: FluidParams {
                nu: self.nu,
                alpha: self.alpha,
            },
            length: self.length,
            n: self.n,
            dt: self.dt,
            t_end: self.t_end,
            cadence: self.cadence,
            seed: self.seed,
        }
    }

    pub fn fluid(&self) -> FluidParams {
        FluidParams {
            nu: self.nu,
            alpha: self.alpha,
        }
    }

    /// Range checks that need no file access.
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(NsvError::Config(msg));
        self.sim_params().validate().map_err(|e| match e {
            NsvError::Config(m) => NsvError::Config(m),
            other => NsvError::Config(other.to_string()),
        })?;
        if self.m_max == 0 {
            return cfg("chain m_max must be >= 1".into());
        }
        if !(self.interp_tol > 0.0) {
            return cfg(format!("interp_tol must be positive, got {}", self.interp_tol));
        }
        match &self.initial {
            InitialSpec::Random {
                amplitude, decay, ..
            } if !(*amplitude >= 0.0 && *decay >= 0.0) => {
                return cfg("initial amplitude and decay must be >= 0".into());
            }
            _ => {}
        }
        match &self.forcing {
            ForcingSpec::TaylorGreen { amplitude } | ForcingSpec::RandomBand { amplitude, .. }
                if !amplitude.is_finite() =>
            {
                return cfg("forcing amplitude must be finite".into());
            }
            ForcingSpec::Modes(m) if m.is_empty() => {
                return cfg("kind = modes needs at least one `mode` line".into());
            }
            _ => {}
        }
        let k = &self.constants;
        if k.samples == 0 || !(k.safety >= 1.0) {
            return cfg("constants need samples >= 1 and safety >= 1".into());
        }
        if k.source == ConstantSource::Manual {
            for (name, v) in [
                ("c", k.c),
                ("c1", k.c1),
                ("c2", k.c2),
                ("cm", k.cm),
                ("gevrey_c1", k.gevrey_c1),
            ] {
                if v.is_none() {
                    return cfg(format!("source = manual requires constant {name}"));
                }
            }
        }
        for v in [k.c, k.c1, k.c2, k.cm, k.gevrey_c1, k.c4, k.c5, k.c6].into_iter().flatten() {
            if !(v > 0.0 && v.is_finite()) {
                return cfg(format!("constants must be positive and finite, got {v}"));
            }
        }
        let g = &self.gevrey;
        if !(g.tau0 > 0.0) {
            return cfg(format!("tau0 must be positive, got {}", g.tau0));
        }
        if let Some(r) = g.relaxed {
            if !(r > 0.0 && r.is_finite()) {
                return cfg(format!("relaxed factor must be positive, got {r}"));
            }
        }
        if !(g.fit.lower > 0.0 && g.fit.lower < g.fit.upper && g.fit.upper <= 1.0) {
            return cfg("fit window needs 0 < fit_lower < fit_upper <= 1".into());
        }
        if g.fit.min_shells < 3 || g.snapshots == 0 {
            return cfg("need fit_min_shells >= 3 and snapshots >= 1".into());
        }
        if let Some(h) = g.hat_dt {
            if !(h > 0.0) {
                return cfg(format!("hat_dt must be positive, got {h}"));
            }
        }
        let s = &self.steady;
        if !(s.options.tol > 0.0 && s.options.max_iter >= 1) {
            return cfg("steady needs tol > 0 and max_iter >= 1".into());
        }
        if !(s.options.theta > 0.0 && s.options.theta <= 1.0) {
            return cfg(format!("steady theta must lie in (0, 1], got {}", s.options.theta));
        }
        if let SigmaChoice::Fixed(sigma) = s.sigma {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return cfg(format!("steady sigma must be >= 0, got {sigma}"));
            }
        }
        if !(s.safety > 0.0 && s.c.map_or(true, |c| c > 0.0)) {
            return cfg("steady needs safety > 0 and c > 0".into());
        }
        Ok(())
    }

    /// Referenced files must exist.
    pub fn check_files(&self) -> Result<()> {
        if let InitialSpec::Checkpoint(p) = &self.initial {
            if !p.is_file() {
                return Err(NsvError::Config(format!(
                    "initial checkpoint {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

fn parse_value<T: std::str::FromStr>(e: &Entry, what: &str) -> Result<T> {
    e.value.parse().map_err(|_| NsvError::ConfigLine {
        line: e.line,
        msg: format!("{}: expected {what}, got {:?}", e.key, e.value),
    })
}

struct Reader<'a> {
    section: Option<&'a Section>,
}

impl<'a> Reader<'a> {
    fn new(doc: &'a IniDocument, name: &str, known: &[&str]) -> Result<Self> {
        let section = doc.section(name);
        if let Some(s) = section {
            s.check_keys(known)?;
        }
        Ok(Self { section })
    }

    fn entry(&self, key: &str) -> Result<Option<&'a Entry>> {
        match self.section {
            Some(s) => s.get(key),
            None => Ok(None),
        }
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>> {
        self.entry(key)?.map(|e| parse_value(e, "a number")).transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&self, section: &str, key: &str) -> Result<f64> {
        self.f64_opt(key)?
            .ok_or_else(|| NsvError::Config(format!("[{section}] {key} is required")))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self
            .entry(key)?
            .map(|e| parse_value(e, "a non-negative integer"))
            .transpose()?
            .unwrap_or(default))
    }

    fn str_opt(&self, key: &str) -> Result<Option<&'a Entry>> {
        self.entry(key)
    }
}

fn unknown_value(e: &Entry, allowed: &str) -> NsvError {
    NsvError::ConfigLine {
        line: e.line,
        msg: format!("{}: expected one of {allowed}, got {:?}", e.key, e.value),
    }
}

fn parse_mode(e: &Entry) -> Result<(Wavevector, Vec3c)> {
    let parts: Vec<&str> = e.value.split_whitespace().collect();
    let bad = |msg: &str| NsvError::ConfigLine {
        line: e.line,
        msg: format!("mode: {msg}"),
    };
    if parts.len() != 9 {
        return Err(bad("expected 3 integers and 6 numbers"));
    }
    let mut j = [0i64; 3];
    for (k, p) in parts[..3].iter().enumerate() {
        j[k] = p.parse().map_err(|_| bad("wavevector components must be integers"))?;
    }
    let mut x = [0.0f64; 6];
    for (k, p) in parts[3..].iter().enumerate() {
        x[k] = p.parse().map_err(|_| bad("amplitudes must be numbers"))?;
    }
    Ok((
        j,
        [
            Complex64::new(x[0], x[1]),
            Complex64::new(x[2], x[3]),
            Complex64::new(x[4], x[5]),
        ],
    ))
}

/// Parses configuration text; problems tied to a line carry its number.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let doc = parse_ini(text)?;
    const SECTIONS: [&str; 10] = [
        "run", "fluid", "lattice", "time", "initial", "forcing", "chain", "constants", "gevrey",
        "steady",
    ];
    if let Some(s) = doc.sections.iter().find(|s| !SECTIONS.contains(&s.name.as_str())) {
        return Err(NsvError::ConfigLine {
            line: s.line,
            msg: format!("unknown section [{}]", s.name),
        });
    }
    let run = Reader::new(&doc, "run", &["seed", "output_dir"])?;
    let fluid = Reader::new(&doc, "fluid", &["nu", "alpha"])?;
    let lattice = Reader::new(&doc, "lattice", &["n", "length"])?;
    let time = Reader::new(&doc, "time", &["dt", "t_end", "cadence"])?;
    let initial = Reader::new(&doc, "initial", &["kind", "amplitude", "decay", "power", "path"])?;
    let forcing = Reader::new(&doc, "forcing", &["kind", "amplitude", "kf", "mode"])?;
    let chain = Reader::new(&doc, "chain", &["m_max", "interp_tol"])?;
    let constants = Reader::new(
        &doc,
        "constants",
        &[
            "source", "c", "c1", "c2", "cm", "gevrey_c1", "c4", "c5", "c6", "samples", "safety",
        ],
    )?;
    let gevrey = Reader::new(
        &doc,
        "gevrey",
        &[
            "tau0",
            "relaxed",
            "fit_lower",
            "fit_upper",
            "fit_min_shells",
            "hat_dt",
            "snapshots",
        ],
    )?;
    let steady = Reader::new(&doc, "steady", &["tol", "max_iter", "theta", "sigma", "c", "safety"])?;

    let seed = run
        .entry("seed")?
        .map(|e| parse_value(e, "an unsigned integer"))
        .transpose()?
        .unwrap_or(0);
    let output_dir = run
        .str_opt("output_dir")?
        .map(|e| PathBuf::from(&e.value))
        .unwrap_or_else(|| PathBuf::from("run"));

    let n = match lattice.entry("n")? {
        Some(e) => parse_value(e, "an integer")?,
        None => return Err(NsvError::Config("[lattice] n is required".into())),
    };
    let dt = match time.entry("dt")? {
        Some(e) if e.value == "auto" => None,
        Some(e) => {
            let dt: f64 = parse_value(e, "a number or `auto`")?;
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(NsvError::ConfigLine {
                    line: e.line,
                    msg: format!("dt must be positive, got {dt}"),
                });
            }
            Some(dt)
        }
        None => None,
    };

    let initial_spec = match initial.str_opt("kind")? {
        None => InitialSpec::Zero,
        Some(e) => match e.value.as_str() {
            "zero" => InitialSpec::Zero,
            "random" => InitialSpec::Random {
                amplitude: initial.f64_or("amplitude", 1.0)?,
                decay: initial.f64_or("decay", 0.5)?,
                power: initial.f64_or("power", 1.0)?,
            },
            "checkpoint" => match initial.str_opt("path")? {
                Some(p) => InitialSpec::Checkpoint(PathBuf::from(&p.value)),
                None => {
                    return Err(NsvError::ConfigLine {
                        line: e.line,
                        msg: "kind = checkpoint needs a path".into(),
                    })
                }
            },
            _ => return Err(unknown_value(e, "zero, random, checkpoint")),
        },
    };

    let forcing_spec = match forcing.str_opt("kind")? {
        None => ForcingSpec::None,
        Some(e) => match e.value.as_str() {
            "none" => ForcingSpec::None,
            "taylor_green" => ForcingSpec::TaylorGreen {
                amplitude: forcing.f64_or("amplitude", 1.0)?,
            },
            "random_band" => ForcingSpec::RandomBand {
                kf: forcing.f64_or("kf", 2.0)?,
                amplitude: forcing.f64_or("amplitude", 1.0)?,
            },
            "modes" => {
                let modes = forcing
                    .section
                    .map(|s| s.all("mode").map(parse_mode).collect::<Result<Vec<_>>>())
                    .transpose()?
                    .unwrap_or_default();
                if modes.is_empty() {
                    return Err(NsvError::ConfigLine {
                        line: e.line,
                        msg: "kind = modes needs at least one `mode` line".into(),
                    });
                }
                ForcingSpec::Modes(modes)
            }
            _ => return Err(unknown_value(e, "none, taylor_green, random_band, modes")),
        },
    };
    if !matches!(forcing_spec, ForcingSpec::Modes(_)) {
        if let Some(e) = forcing.section.and_then(|s| s.all("mode").next()) {
            return Err(NsvError::ConfigLine {
                line: e.line,
                msg: "`mode` lines need kind = modes".into(),
            });
        }
    }

    let source = match constants.str_opt("source")? {
        None => ConstantSource::Empirical,
        Some(e) => match e.value.as_str() {
            "empirical" => ConstantSource::Empirical,
            "manual" => ConstantSource::Manual,
            _ => return Err(unknown_value(e, "empirical, manual")),
        },
    };
    let defaults = ConstantsSpec::default();
    let constants_spec = ConstantsSpec {
        source,
        c: constants.f64_opt("c")?,
        c1: constants.f64_opt("c1")?,
        c2: constants.f64_opt("c2")?,
        cm: constants.f64_opt("cm")?,
        gevrey_c1: constants.f64_opt("gevrey_c1")?,
        c4: constants.f64_opt("c4")?,
        c5: constants.f64_opt("c5")?,
        c6: constants.f64_opt("c6")?,
        samples: constants.usize_or("samples", defaults.samples)?,
        safety: constants.f64_or("safety", defaults.safety)?,
    };

    let gd = GevreySpec::default();
    let gevrey_spec = GevreySpec {
        tau0: gevrey.f64_or("tau0", gd.tau0)?,
        relaxed: gevrey.f64_opt("relaxed")?,
        fit: FitPolicy {
            lower: gevrey.f64_or("fit_lower", gd.fit.lower)?,
            upper: gevrey.f64_or("fit_upper", gd.fit.upper)?,
            min_shells: gevrey.usize_or("fit_min_shells", gd.fit.min_shells)?,
        },
        hat_dt: gevrey.f64_opt("hat_dt")?,
        snapshots: gevrey.usize_or("snapshots", gd.snapshots)?,
    };

    let sd = SteadySpec::default();
    let steady_spec = SteadySpec {
        options: SteadyOptions {
            tol: steady.f64_or("tol", sd.options.tol)?,
            max_iter: steady.usize_or("max_iter", sd.options.max_iter)?,
            theta: steady.f64_or("theta", sd.options.theta)?,
        },
        sigma: match steady.str_opt("sigma")? {
            None => sd.sigma,
            Some(e) if e.value == "self_consistent" => SigmaChoice::SelfConsistent,
            Some(e) => SigmaChoice::Fixed(parse_value(e, "a number or `self_consistent`")?),
        },
        c: steady.f64_opt("c")?,
        safety: steady.f64_or("safety", sd.safety)?,
    };

    let config = ExperimentConfig {
        seed,
        output_dir,
        nu: fluid.f64_req("fluid", "nu")?,
        alpha: fluid.f64_req("fluid", "alpha")?,
        n,
        length: lattice.f64_or("length", 2.0 * PI)?,
        dt,
        t_end: time.f64_req("time", "t_end")?,
        cadence: time.f64_req("time", "cadence")?,
        initial: initial_spec,
        forcing: forcing_spec,
        m_max: chain.usize_or("m_max", 2)?,
        interp_tol: chain.f64_or("interp_tol", INTERP_TOL)?,
        constants: constants_spec,
        gevrey: gevrey_spec,
        steady: steady_spec,
    };
    config.validate()?;
    Ok(config)
}

/// Reads, parses and checks referenced files.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        NsvError::Config(format!("cannot read config {}: {e}", path.display()))
    })?;
    let config = parse_config(&text)?;
    config.check_files()?;
    Ok(config)
}

/// Canonical text form; [`parse_config`] reads it back to an equal value.
pub fn write_config(c: &ExperimentConfig) -> String {
    let mut s = String::new();
    let kv = |s: &mut String, k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    let f = |x: f64| format!("{x:?}");

    s.push_str("[run]\n");
    kv(&mut s, "seed", c.seed.to_string());
    kv(&mut s, "output_dir", c.output_dir.display().to_string());

    s.push_str("\n[fluid]\n");
    kv(&mut s, "nu", f(c.nu));
    kv(&mut s, "alpha", f(c.alpha));

    s.push_str("\n[lattice]\n");
    kv(&mut s, "n", c.n.to_string());
    kv(&mut s, "length", f(c.length));

    s.push_str("\n[time]\n");
    kv(&mut s, "dt", c.dt.map_or_else(|| "auto".to_string(), f));
    kv(&mut s, "t_end", f(c.t_end));
    kv(&mut s, "cadence", f(c.cadence));

    s.push_str("\n[initial]\n");
    match &c.initial {
        InitialSpec::Zero => kv(&mut s, "kind", "zero".into()),
        InitialSpec::Random {
            amplitude,
            decay,
            power,
        } => {
            kv(&mut s, "kind", "random".into());
            kv(&mut s, "amplitude", f(*amplitude));
            kv(&mut s, "decay", f(*decay));
            kv(&mut s, "power", f(*power));
        }
        InitialSpec::Checkpoint(p) => {
            kv(&mut s, "kind", "checkpoint".into());
            kv(&mut s, "path", p.display().to_string());
        }
    }

    s.push_str("\n[forcing]\n");
    match &c.forcing {
        ForcingSpec::None => kv(&mut s, "kind", "none".into()),
        ForcingSpec::TaylorGreen { amplitude } => {
            kv(&mut s, "kind", "taylor_green".into());
            kv(&mut s, "amplitude", f(*amplitude));
        }
        ForcingSpec::RandomBand { kf, amplitude } => {
            kv(&mut s, "kind", "random_band".into());
            kv(&mut s, "kf", f(*kf));
            kv(&mut s, "amplitude", f(*amplitude));
        }
        ForcingSpec::Modes(modes) => {
            kv(&mut s, "kind", "modes".into());
            for (j, u) in modes {
                let mut line = format!("{} {} {}", j[0], j[1], j[2]);
                for z in u {
                    let _ = write!(line, " {:?} {:?}", z.re, z.im);
                }
                kv(&mut s, "mode", line);
            }
        }
    }

    s.push_str("\n[chain]\n");
    kv(&mut s, "m_max", c.m_max.to_string());
    kv(&mut s, "interp_tol", f(c.interp_tol));

    s.push_str("\n[constants]\n");
    let k = &c.constants;
    kv(&mut s, "source", k.source.as_str().into());
    for (name, v) in [
        ("c", k.c),
        ("c1", k.c1),
        ("c2", k.c2),
        ("cm", k.cm),
        ("gevrey_c1", k.gevrey_c1),
        ("c4", k.c4),
        ("c5", k.c5),
        ("c6", k.c6),
    ] {
        if let Some(v) = v {
            kv(&mut s, name, f(v));
        }
    }
    kv(&mut s, "samples", k.samples.to_string());
    kv(&mut s, "safety", f(k.safety));

    s.push_str("\n[gevrey]\n");
    let g = &c.gevrey;
    kv(&mut s, "tau0", f(g.tau0));
    if let Some(r) = g.relaxed {
        kv(&mut s, "relaxed", f(r));
    }
    kv(&mut s, "fit_lower", f(g.fit.lower));
    kv(&mut s, "fit_upper", f(g.fit.upper));
    kv(&mut s, "fit_min_shells", g.fit.min_shells.to_string());
    if let Some(h) = g.hat_dt {
        kv(&mut s, "hat_dt", f(h));
    }
    kv(&mut s, "snapshots", g.snapshots.to_string());

    s.push_str("\n[steady]\n");
    let st = &c.steady;
    kv(&mut s, "tol", f(st.options.tol));
    kv(&mut s, "max_iter", st.options.max_iter.to_string());
    kv(&mut s, "theta", f(st.options.theta));
    match st.sigma {
        SigmaChoice::Fixed(v) => kv(&mut s, "sigma", f(v)),
        SigmaChoice::SelfConsistent => kv(&mut s, "sigma", "self_consistent".into()),
    }
    if let Some(v) = st.c {
        kv(&mut s, "c", f(v));
    }
    kv(&mut s, "safety", f(st.safety));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[fluid]\nnu = 0.1\nalpha = 0.5\n[lattice]\nn = 16\n[time]\nt_end = 1\ncadence = 0.1\n";

    #[test]
    fn minimal_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.n, 16);
        assert_eq!(c.length, 2.0 * PI);
        assert_eq!(c.dt, None);
        assert_eq!(c.initial, InitialSpec::Zero);
        assert_eq!(c.forcing, ForcingSpec::None);
        assert_eq!(c.m_max, 2);
        assert_eq!(c.constants.source, ConstantSource::Empirical);
    }

    #[test]
    fn round_trip_full() {
        let text = format!(
            "{MINIMAL}[run]\nseed = 7\noutput_dir = out/a\n[initial]\nkind = random\namplitude = 0.3\n\
             [forcing]\nkind = modes\nmode = 1 0 0 0 0 0.1 -0.2 0 0\nmode = 0 1 1 0.3 0 0 0 0 0\n\
             [constants]\nsource = manual\nc = 1\nc1 = 2\nc2 = 3\ncm = 4\ngevrey_c1 = 0.1\n\
             [gevrey]\nrelaxed = 1e6\nhat_dt = 0.001\n[steady]\nsigma = 0.25\n"
        );
        let c = parse_config(&text).unwrap();
        let again = parse_config(&write_config(&c)).unwrap();
        assert_eq!(c, again);
        assert_eq!(write_config(&c), write_config(&again));
    }

    #[test]
    fn dt_zero_rejected_with_line() {
        let text = MINIMAL.replace("t_end = 1", "dt = 0\nt_end = 1");
        assert!(matches!(parse_config(&text), Err(NsvError::ConfigLine { line: 7, .. })));
    }

    #[test]
    fn bad_lines_report_position() {
        let text = format!("{MINIMAL}[chain]\nm_max = two\n");
        assert!(matches!(parse_config(&text), Err(NsvError::ConfigLine { line: 10, .. })));
        let text = format!("{MINIMAL}[chain]\ndepth = 2\n");
        assert!(matches!(parse_config(&text), Err(NsvError::ConfigLine { line: 10, .. })));
        let text = format!("{MINIMAL}[extra]\n");
        assert!(matches!(parse_config(&text), Err(NsvError::ConfigLine { line: 9, .. })));
    }

    #[test]
    fn manual_constants_must_be_complete() {
        let text = format!("{MINIMAL}[constants]\nsource = manual\nc = 1\n");
        assert!(matches!(parse_config(&text), Err(NsvError::Config(_))));
    }

    #[test]
    fn missing_checkpoint_file() {
        let text = format!("{MINIMAL}[initial]\nkind = checkpoint\npath = /nonexistent/x.nsvf\n");
        let c = parse_config(&text).unwrap();
        assert!(matches!(c.check_files(), Err(NsvError::Config(_))));
    }
}
