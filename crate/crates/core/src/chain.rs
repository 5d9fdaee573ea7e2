//! Asymptotic approximations `v, v^(2), ..., v^(m)` of an NSV trajectory.
//!
//! Level 1 solves `v_t + nu A v + alpha^2 A v_t = f - B(u, u)`, level `n`
//! replaces `u` by level `n - 1`; every level starts from zero. Two drivers
//! exist: [`run_chain`] evolves `u` and all levels as one system (so that
//! `u = v + w` holds to round-off), while [`replay_chain`] rebuilds the levels
//! from stored samples of `u`, interpolating right-hand sides linearly in time.

use crate::error::{NsvError, Result};
use crate::fit::linear_fit;
use crate::integrator::{
    advance_linear, homogeneous_decay, lawson_rk4, resolve_dt, voight_scaled, Exponentials,
    FluidParams, Forcing, SimParams, ABSORBING_WINDOW,
};
use crate::integrator::detect_absorbing_time;
use crate::nonlinear::{bilinear, ConstantSource, Constants};
use crate::spectral::SpectralField;

/// Default relative tolerance on the linear-interpolation error of replayed
/// right-hand sides.
pub const INTERP_TOL: f64 = 1e-3;

/// `M1 = 2 |f|_{-1} / (alpha nu sqrt(d0))`.
pub fn m1_bound(fluid: &FluidParams, forcing: &SpectralField, lambda1: f64) -> Result<f64> {
    Ok(2.0 * forcing.sobolev_norm(-1.0) / bound_denominator(fluid, lambda1)?)
}

fn bound_denominator(fluid: &FluidParams, lambda1: f64) -> Result<f64> {
    if !(fluid.alpha > 0.0) {
        return Err(NsvError::InvalidInput(
            "the absorbing-ball bounds carry a factor 1/alpha and need alpha > 0".into(),
        ));
    }
    Ok(fluid.alpha * fluid.nu * fluid.d0(lambda1).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsTable {
    pub lambda1: f64,
    pub d0: f64,
    pub m1: f64,
    pub m32: f64,
    pub m2: f64,
    /// `(m, M_m)` for `m = 3..=m_max`.
    pub higher: Vec<(usize, f64)>,
    pub c1: f64,
    pub c2: f64,
    pub cm: f64,
    pub source: ConstantSource,
}

impl BoundsTable {
    /// Bound on the level's own norm: `M_{3/2}` for `v`, `M_m` for `v^(m)`.
    pub fn level_bound(&self, level: usize) -> Option<f64> {
        match level {
            0 => Some(self.m1),
            1 => Some(self.m32),
            2 => Some(self.m2),
            m => self.higher.iter().find(|(k, _)| *k == m).map(|&(_, b)| b),
        }
    }

    pub fn all_finite_nonnegative(&self) -> bool {
        let mut v = vec![self.d0, self.m1, self.m32, self.m2];
        v.extend(self.higher.iter().map(|&(_, b)| b));
        v.iter().all(|x| x.is_finite() && *x >= 0.0)
    }
}

/// Sobolev order in which level `m` is bounded (`0` is `u` itself in `V`).
pub fn level_norm_order(level: usize) -> f64 {
    match level {
        0 => 1.0,
        1 => 1.5,
        m => m as f64,
    }
}

pub fn compute_bounds(
    fluid: &FluidParams,
    forcing: &SpectralField,
    constants: &Constants,
    m_max: usize,
) -> Result<BoundsTable> {
    let lambda1 = forcing.lattice().lambda1();
    let den = bound_denominator(fluid, lambda1)?;
    let m1 = m1_bound(fluid, forcing, lambda1)?;
    let m32 = (forcing.sobolev_norm(-0.5) + constants.c1 * lambda1.powf(-0.75) * m1 * m1) / den;
    let m2 = (forcing.sobolev_norm(0.0) + constants.c2 * lambda1.powf(-0.75) * m1 * m32) / den;
    let mut higher = Vec::new();
    let mut prev = m2;
    for m in 3..=m_max {
        let mm = (forcing.sobolev_norm(m as f64 - 2.0)
            + constants.cm * lambda1.powf(-0.875) * m1.powf(0.25) * m2.powf(0.75) * prev)
            / den;
        higher.push((m, mm));
        prev = mm;
    }
    Ok(BoundsTable {
        lambda1,
        d0: fluid.d0(lambda1),
        m1,
        m32,
        m2,
        higher,
        c1: constants.c1,
        c2: constants.c2,
        cm: constants.cm,
        source: constants.source,
    })
}

/// Estimated error of linear interpolation between samples of a right-hand side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CadenceCheck {
    pub cadence: f64,
    /// `max |g_{k+1} - 2 g_k + g_{k-1}| / (8 max |g|)`.
    pub relative_error: f64,
    /// Largest cadence meeting the tolerance.
    pub required: f64,
    pub ok: bool,
}

/// Exact piecewise-linear integration of one linear Voight equation fed
/// sample by sample.
struct LevelStream {
    fluid: FluidParams,
    z: SpectralField,
    last: Option<(f64, SpectralField)>,
    before_last: Option<SpectralField>,
    cadence: f64,
    max_second_diff: f64,
    max_rhs: f64,
}

impl LevelStream {
    fn new(fluid: FluidParams, zero: SpectralField) -> Self {
        Self {
            fluid,
            z: zero,
            last: None,
            before_last: None,
            cadence: 0.0,
            max_second_diff: 0.0,
            max_rhs: 0.0,
        }
    }

    fn push(&mut self, t: f64, g: SpectralField) -> Result<&SpectralField> {
        self.max_rhs = self.max_rhs.max(g.sobolev_norm(0.0));
        if let Some((t_prev, g_prev)) = self.last.take() {
            let h = t - t_prev;
            if !(h > 0.0) {
                return Err(NsvError::InvalidInput(format!(
                    "sample times must increase, got {t_prev} then {t}"
                )));
            }
            self.cadence = self.cadence.max(h);
            if let Some(g2) = &self.before_last {
                let d2 = (&(&g - &g_prev) - &(&g_prev - g2)).sobolev_norm(0.0);
                self.max_second_diff = self.max_second_diff.max(d2);
            }
            self.z = advance_linear(&self.fluid, &self.z, &g_prev, &g, h);
            self.before_last = Some(g_prev);
        }
        self.last = Some((t, g));
        Ok(&self.z)
    }

    fn cadence_check(&self, tol: f64) -> Option<CadenceCheck> {
        if self.before_last.is_none() || self.max_rhs == 0.0 {
            return None;
        }
        let rel = self.max_second_diff / (8.0 * self.max_rhs);
        let ok = rel <= tol;
        // the second difference scales with the square of the cadence
        let required = if ok { self.cadence } else { self.cadence * (tol / rel).sqrt() };
        Some(CadenceCheck {
            cadence: self.cadence,
            relative_error: rel,
            required,
            ok,
        })
    }
}

/// One approximation level along a trajectory.
#[derive(Clone, Debug)]
pub struct ChainLevel {
    /// `0` is the reference solution `u`, `1` is `v`, `m >= 2` is `v^(m)`.
    pub index: usize,
    pub times: Vec<f64>,
    /// `||u - v^(m)||` at each sample.
    pub errors: Vec<f64>,
    /// `||u||` at each sample.
    pub reference_norms: Vec<f64>,
    /// `|v^(m)|_s` with `s = level_norm_order(index)`.
    pub level_norms: Vec<f64>,
    pub bound: Option<f64>,
    /// Stored fields; empty unless requested.
    pub states: Vec<SpectralField>,
    pub cadence: Option<CadenceCheck>,
    pub warnings: Vec<String>,
}

impl ChainLevel {
    /// Level 0: the reference trajectory itself.
    pub fn reference(times: Vec<f64>, states: Vec<SpectralField>) -> Result<Self> {
        if states.is_empty() || states.len() != times.len() {
            return Err(NsvError::Missing("reference trajectory".into()));
        }
        let norms: Vec<f64> = states.iter().map(|u| u.sobolev_norm(1.0)).collect();
        Ok(Self {
            index: 0,
            errors: vec![0.0; times.len()],
            reference_norms: norms.clone(),
            level_norms: norms,
            times,
            bound: None,
            states,
            cadence: None,
            warnings: Vec::new(),
        })
    }

    fn empty(index: usize, bound: Option<f64>) -> Self {
        Self {
            index,
            times: Vec::new(),
            errors: Vec::new(),
            reference_norms: Vec::new(),
            level_norms: Vec::new(),
            bound,
            states: Vec::new(),
            cadence: None,
            warnings: Vec::new(),
        }
    }

    fn record(&mut self, t: f64, u: &SpectralField, level: &SpectralField, keep: bool) {
        self.times.push(t);
        self.errors.push((u - level).sobolev_norm(1.0));
        self.reference_norms.push(u.sobolev_norm(1.0));
        self.level_norms.push(level.sobolev_norm(level_norm_order(self.index)));
        if keep {
            self.states.push(level.clone());
        }
    }

    pub fn norm_order(&self) -> f64 {
        level_norm_order(self.index)
    }

    pub fn terminal_error(&self) -> Option<f64> {
        self.errors.last().copied()
    }

    /// `||u - v^(m)|| / ||u||` at the last sample.
    pub fn terminal_relative_error(&self) -> Option<f64> {
        let e = self.errors.last()?;
        let n = self.reference_norms.last()?;
        Some(if *n > 0.0 { e / n } else { *e })
    }

    /// `sup |v^(m)|_s` over samples with `t >= t0`.
    pub fn sup_norm_after(&self, t0: f64) -> Option<f64> {
        self.times
            .iter()
            .zip(&self.level_norms)
            .filter(|(t, _)| **t >= t0)
            .map(|(_, n)| *n)
            .reduce(f64::max)
    }

    fn note_cadence(&mut self, check: Option<CadenceCheck>) {
        if let Some(c) = check {
            if !c.ok {
                self.warnings.push(format!(
                    "cadence {:.6e} too coarse for linear interpolation (relative error {:.3e}); need <= {:.6e}",
                    c.cadence, c.relative_error, c.required
                ));
            }
        }
        self.cadence = check;
    }
}

fn rhs_of(forcing: &SpectralField, state: &SpectralField) -> Result<SpectralField> {
    Ok(forcing - &bilinear(state, state)?)
}

/// Decomposes a stored trajectory as `u = v + w`: `v` integrates
/// `f - B(u, u)` from zero, `w` is the free decay of `u(0)`.
pub fn split_vw(
    times: &[f64],
    u: &[SpectralField],
    fluid: &FluidParams,
    forcing: &SpectralField,
) -> Result<(Vec<SpectralField>, Vec<SpectralField>)> {
    if u.is_empty() || u.len() != times.len() {
        return Err(NsvError::Missing("u trajectory".into()));
    }
    let mut stream = LevelStream::new(*fluid, SpectralField::zeros(u[0].lattice()));
    let mut v = Vec::with_capacity(u.len());
    for (t, ui) in times.iter().zip(u) {
        v.push(stream.push(*t, rhs_of(forcing, ui)?)?.clone());
    }
    let w = times
        .iter()
        .map(|t| homogeneous_decay(&u[0], fluid, t - times[0]))
        .collect();
    Ok((v, w))
}

/// Builds level `previous.index + 1` from the stored states of `previous`.
pub fn build_next_level(
    previous: &ChainLevel,
    reference: &[SpectralField],
    fluid: &FluidParams,
    forcing: &SpectralField,
    bounds: Option<&BoundsTable>,
    interp_tol: f64,
) -> Result<ChainLevel> {
    let n = previous.times.len();
    if n == 0 || previous.states.len() != n {
        return Err(NsvError::Missing(format!(
            "stored trajectory of level {}",
            previous.index
        )));
    }
    if reference.len() != n {
        return Err(NsvError::SizeMismatch {
            expected: n,
            got: reference.len(),
        });
    }
    let index = previous.index + 1;
    let mut level = ChainLevel::empty(index, bounds.and_then(|b| b.level_bound(index)));
    let mut stream = LevelStream::new(*fluid, SpectralField::zeros(forcing.lattice()));
    for ((t, prev), u) in previous.times.iter().zip(&previous.states).zip(reference) {
        let z = stream.push(*t, rhs_of(forcing, prev)?)?;
        level.record(*t, u, z, true);
    }
    level.note_cadence(stream.cadence_check(interp_tol));
    Ok(level)
}

/// Rebuilds levels `1..=m_max` from a stream of `(t, u)` samples, holding
/// only a few fields per level in memory.
pub fn replay_chain<I>(
    samples: I,
    fluid: &FluidParams,
    forcing: &SpectralField,
    m_max: usize,
    bounds: Option<&BoundsTable>,
    interp_tol: f64,
) -> Result<Vec<ChainLevel>>
where
    I: IntoIterator<Item = Result<(f64, SpectralField)>>,
{
    replay_chain_with(samples, fluid, forcing, m_max, bounds, interp_tol, |_, _, _| Ok(()))
}

/// [`replay_chain`] that hands every level state to `on_state(level, t, v)`
/// as it is produced.
pub fn replay_chain_with<I, F>(
    samples: I,
    fluid: &FluidParams,
    forcing: &SpectralField,
    m_max: usize,
    bounds: Option<&BoundsTable>,
    interp_tol: f64,
    mut on_state: F,
) -> Result<Vec<ChainLevel>>
where
    I: IntoIterator<Item = Result<(f64, SpectralField)>>,
    F: FnMut(usize, f64, &SpectralField) -> Result<()>,
{
    if m_max == 0 {
        return Err(NsvError::InvalidInput("chain depth must be >= 1".into()));
    }
    let mut streams: Vec<LevelStream> = Vec::new();
    let mut levels: Vec<ChainLevel> = (1..=m_max)
        .map(|m| ChainLevel::empty(m, bounds.and_then(|b| b.level_bound(m))))
        .collect();
    for sample in samples {
        let (t, u) = sample?;
        forcing.lattice().check_same(u.lattice())?;
        if streams.is_empty() {
            streams = (0..m_max)
                .map(|_| LevelStream::new(*fluid, SpectralField::zeros(u.lattice())))
                .collect();
        }
        let mut driver = u.clone();
        for (stream, level) in streams.iter_mut().zip(levels.iter_mut()) {
            let z = stream.push(t, rhs_of(forcing, &driver)?)?;
            level.record(t, &u, z, false);
            on_state(level.index, t, z)?;
            driver = z.clone();
        }
    }
    if streams.is_empty() {
        return Err(NsvError::Missing("no samples of u to replay".into()));
    }
    for (stream, level) in streams.iter().zip(levels.iter_mut()) {
        level.note_cadence(stream.cadence_check(interp_tol));
    }
    Ok(levels)
}

/// Output of [`run_chain`].
#[derive(Clone, Debug)]
pub struct ChainRun {
    pub dt: f64,
    /// `levels[0]` is `u`, `levels[m]` is level `m`.
    pub levels: Vec<ChainLevel>,
    /// `max_t ||u - (v + w)|| / max_t ||u||` over the cadence points.
    pub reconstruction_error: f64,
    pub m1: Option<f64>,
    pub t0: Option<f64>,
    pub final_states: Vec<SpectralField>,
}

/// Evolves `u` and levels `1..=m_max` together with the NSV stepper.
///
/// Level `m` reads the stage values of level `m - 1`, so the whole system is
/// one Lawson-RK4 integration and `u - v` is exactly the free decay of `u(0)`.
/// `on_output(t, states)` sees `[u, v, v^(2), ...]` at every cadence point.
pub fn run_chain<F>(
    params: &SimParams,
    forcing: &Forcing,
    u0: SpectralField,
    m_max: usize,
    bounds: Option<&BoundsTable>,
    keep_states: bool,
    mut on_output: F,
) -> Result<ChainRun>
where
    F: FnMut(f64, &[SpectralField]) -> Result<()>,
{
    params.validate()?;
    if m_max == 0 {
        return Err(NsvError::InvalidInput("chain depth must be >= 1".into()));
    }
    let lat = u0.lattice().clone();
    lat.check_same(forcing.field().lattice())?;
    let fluid = params.fluid;
    let (dt, per_output) = resolve_dt(params, forcing, &u0)?;
    let outputs_total = (params.t_end / params.cadence).round().max(1.0) as usize;
    let ex = Exponentials::new(&lat, &fluid, dt);
    let f = forcing.field();

    let mut states = vec![u0.clone()];
    states.extend((0..m_max).map(|_| SpectralField::zeros(&lat)));
    let mut levels: Vec<ChainLevel> = (0..=m_max)
        .map(|m| ChainLevel::empty(m, bounds.and_then(|b| b.level_bound(m))))
        .collect();
    let mut recon = 0.0f64;
    let mut u_max = 0.0f64;
    let mut record = |t: f64, states: &[SpectralField], levels: &mut [ChainLevel]| {
        for (m, level) in levels.iter_mut().enumerate() {
            level.record(t, &states[0], &states[m], keep_states);
        }
        let w = homogeneous_decay(&u0, &fluid, t);
        let vw = &states[1] + &w;
        recon = recon.max((&states[0] - &vw).sobolev_norm(1.0));
        u_max = u_max.max(states[0].sobolev_norm(1.0));
    };
    record(0.0, &states, &mut levels);
    on_output(0.0, &states)?;

    let mut t = 0.0;
    for k in 1..=outputs_total * per_output {
        let next = lawson_rk4(&states, &ex, t, dt, |_, s| {
            let mut out = Vec::with_capacity(s.len());
            let b0 = bilinear(&s[0], &s[0])?;
            let g0 = voight_scaled(&fluid, f, &b0);
            out.push(g0.clone());
            out.push(g0);
            for level in &s[1..s.len() - 1] {
                out.push(voight_scaled(&fluid, f, &bilinear(level, level)?));
            }
            Ok(out)
        })?;
        if !next.iter().all(SpectralField::is_finite) {
            return Err(NsvError::BlowUp {
                t: t + dt,
                last_valid_t: t,
            });
        }
        states = next;
        t = k as f64 * dt;
        if k % per_output == 0 {
            let tk = (k / per_output) as f64 * params.cadence;
            record(tk, &states, &mut levels);
            on_output(tk, &states)?;
        }
    }
    let m1 = bounds
        .map(|b| b.m1)
        .or_else(|| m1_bound(&fluid, f, lat.lambda1()).ok());
    let t0 = m1.and_then(|b| {
        detect_absorbing_time(&levels[0].times, &levels[0].level_norms, b, ABSORBING_WINDOW)
    });
    Ok(ChainRun {
        dt,
        levels,
        reconstruction_error: if u_max > 0.0 { recon / u_max } else { recon },
        m1,
        t0,
        final_states: states,
    })
}

/// Per-level convergence summary.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelReport {
    pub index: usize,
    pub terminal_error: f64,
    pub terminal_relative_error: f64,
    /// `-d log(error)/dt` fitted on the second half of the series.
    pub decay_rate: Option<f64>,
    /// Mean error over the last 10% of samples is below the mean over the middle 10%.
    pub trending_down: bool,
    pub sup_norm: Option<f64>,
    pub bound: Option<f64>,
    pub within_bound: Option<bool>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    pub t0: Option<f64>,
    pub levels: Vec<LevelReport>,
}

impl ChainReport {
    /// Terminal errors do not increase from one level to the next.
    pub fn errors_non_increasing(&self, rel_slack: f64) -> bool {
        self.levels
            .windows(2)
            .all(|w| w[1].terminal_error <= w[0].terminal_error * (1.0 + rel_slack))
    }
}

fn window_mean(xs: &[f64], start: usize, len: usize) -> f64 {
    xs[start..start + len].iter().sum::<f64>() / len as f64
}

/// Mean of the last 10% against the mean of the middle 10%.
pub fn trending_down(errors: &[f64]) -> bool {
    let n = errors.len();
    if n < 2 {
        return false;
    }
    let w = (n / 10).max(1);
    let last = window_mean(errors, n - w, w);
    let mid = window_mean(errors, (n / 2).saturating_sub(w / 2).min(n - w), w);
    last < mid || last == 0.0
}

/// Exponential rate fitted to the second half of a positive series.
pub fn tail_decay_rate(times: &[f64], errors: &[f64]) -> Option<f64> {
    let start = times.len() / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = times[start..]
        .iter()
        .zip(&errors[start..])
        .filter(|(_, e)| **e > 0.0)
        .map(|(t, e)| (*t, e.ln()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    linear_fit(&xs, &ys).map(|f| -f.slope)
}

/// Summarizes levels `>= 1`; sup norms are taken over `t >= t0` when `t0` is known.
pub fn chain_report(levels: &[ChainLevel], t0: Option<f64>) -> ChainReport {
    let rows = levels
        .iter()
        .filter(|l| l.index >= 1)
        .map(|l| {
            let sup = t0.and_then(|t| l.sup_norm_after(t));
            LevelReport {
                index: l.index,
                terminal_error: l.terminal_error().unwrap_or(0.0),
                terminal_relative_error: l.terminal_relative_error().unwrap_or(0.0),
                decay_rate: tail_decay_rate(&l.times, &l.errors),
                trending_down: trending_down(&l.errors),
                sup_norm: sup,
                bound: l.bound,
                within_bound: sup.zip(l.bound).map(|(s, b)| s <= b),
                warnings: l.warnings.clone(),
            }
        })
        .collect();
    ChainReport { t0, levels: rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{random_divfree_field, WaveLattice};
    use std::f64::consts::PI;

    fn unit_constants() -> Constants {
        Constants::unit()
    }

    #[test]
    fn unit_case_arithmetic() {
        // lambda1 = 1, alpha = nu = 1, |f|_{-1} = 1 => d0 = 1/2, M1 = 2 sqrt 2
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(1.0, 1.0).unwrap();
        let f = Forcing::from_modes(
            &lat,
            &[(
                [1, 0, 0],
                [
                    num_complex::Complex64::new(0.0, 0.0),
                    num_complex::Complex64::new(0.5f64.sqrt(), 0.0),
                    num_complex::Complex64::new(0.0, 0.0),
                ],
            )],
        )
        .unwrap();
        assert!((f.field().sobolev_norm(-1.0) - 1.0).abs() < 1e-15);
        let b = compute_bounds(&fluid, f.field(), &unit_constants(), 4).unwrap();
        assert_eq!(b.d0, 0.5);
        assert!((b.m1 - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(b.higher.len(), 2);
        assert!(b.all_finite_nonnegative());
    }

    #[test]
    fn zero_forcing_collapses_bounds() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(0.3, 0.5).unwrap();
        let b = compute_bounds(&fluid, &SpectralField::zeros(&lat), &unit_constants(), 5).unwrap();
        assert_eq!((b.m1, b.m32, b.m2), (0.0, 0.0, 0.0));
        assert!(b.higher.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn alpha_zero_is_an_error() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(0.3, 0.0).unwrap();
        assert!(compute_bounds(&fluid, &SpectralField::zeros(&lat), &unit_constants(), 2).is_err());
    }

    #[test]
    fn higher_bounds_grow_with_forcing_norm() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(0.3, 0.5).unwrap();
        let f = random_divfree_field(&lat, 3, |k| (-k).exp());
        let a = compute_bounds(&fluid, &f, &unit_constants(), 4).unwrap();
        let b = compute_bounds(&fluid, &f.scaled(1.5), &unit_constants(), 4).unwrap();
        assert!(b.m1 > a.m1 && b.m2 > a.m2 && b.higher[1].1 > a.higher[1].1);
    }

    #[test]
    fn trend_and_rate() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let errs: Vec<f64> = times.iter().map(|t| 3.0 * (-0.4 * t).exp()).collect();
        assert!(trending_down(&errs));
        assert!((tail_decay_rate(&times, &errs).unwrap() - 0.4).abs() < 1e-12);
        assert!(!trending_down(&vec![1.0; 100]));
    }

    #[test]
    fn zero_initial_data_gives_v_equal_u() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(0.5, 0.5).unwrap();
        let forcing = Forcing::random_band(&lat, 1.5, 0.5, 2).unwrap();
        let params = SimParams {
            fluid,
            length: 2.0 * PI,
            n: 8,
            dt: Some(0.02),
            t_end: 1.0,
            cadence: 0.1,
            seed: 0,
        };
        let run = run_chain(&params, &forcing, SpectralField::zeros(&lat), 2, None, true, |_, _| Ok(()))
            .unwrap();
        assert!(run.levels[1].errors.iter().all(|e| *e < 1e-13));
        assert!(run.reconstruction_error < 1e-13);
    }
}
