//! Time integration of the NSV system.
//!
//! In Fourier space each mode obeys
//! `(1 + alpha^2 l_j) du_j/dt = -nu l_j u_j - B_j(u, u) + f_j`,
//! so the linear part decays at `mu_j = nu l_j / (1 + alpha^2 l_j)`. The
//! stepper treats that part exactly with an integrating factor and the
//! Voight-scaled nonlinearity with classical RK4 (Lawson's scheme).

mod budget;
mod forcing;
mod linear;

pub use budget::{energy_budget, BudgetRow, EnergyBudget, EnergySample};
pub use forcing::Forcing;
pub use linear::{advance_linear, homogeneous_decay, solve_linear_voigt, LinearVoigtSolution};

use crate::chain::m1_bound;
use crate::error::{NsvError, Result};
use crate::nonlinear::bilinear;
use crate::spectral::{to_physical, SpectralField, WaveLattice};

/// Viscosity and Voight length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidParams {
    pub nu: f64,
    pub alpha: f64,
}

impl FluidParams {
    pub fn new(nu: f64, alpha: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(NsvError::Config(format!("nu must be positive, got {nu}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(NsvError::Config(format!("alpha must be >= 0, got {alpha}")));
        }
        Ok(Self { nu, alpha })
    }

    /// `1 / (1 + alpha^2 l)`.
    pub fn voight_scale(&self, eigenvalue: f64) -> f64 {
        1.0 / (1.0 + self.alpha * self.alpha * eigenvalue)
    }

    /// Linear decay rate `nu l / (1 + alpha^2 l)`.
    pub fn decay_rate(&self, eigenvalue: f64) -> f64 {
        self.nu * eigenvalue * self.voight_scale(eigenvalue)
    }

    /// `d0 = (1/l1 + alpha^2)^{-1}`.
    pub fn d0(&self, lambda1: f64) -> f64 {
        1.0 / (1.0 / lambda1 + self.alpha * self.alpha)
    }
}

/// Run parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SimParams {
    pub fluid: FluidParams,
    pub length: f64,
    pub n: usize,
    /// `None` selects [`default_dt`].
    pub dt: Option<f64>,
    pub t_end: f64,
    /// Time between outputs (checkpoints and norm samples).
    pub cadence: f64,
    pub seed: u64,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        FluidParams::new(self.fluid.nu, self.fluid.alpha)?;
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(NsvError::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(NsvError::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.cadence > 0.0 && self.cadence <= self.t_end) {
            return Err(NsvError::Config(format!(
                "cadence must lie in (0, t_end], got {}",
                self.cadence
            )));
        }
        WaveLattice::new(self.n, self.length).map(|_| ())
    }

    pub fn lattice(&self) -> Result<WaveLattice> {
        WaveLattice::new(self.n, self.length)
    }
}

/// `min(0.5 alpha^2/nu, 0.1/max mu_j)` capped by a Courant number of 0.5
/// against `speed`, the largest expected grid velocity.
pub fn default_dt(fluid: &FluidParams, lattice: &WaveLattice, speed: f64) -> f64 {
    let mu_max = fluid.decay_rate(lattice.lambda_max());
    let mut dt = 0.1 / mu_max;
    if fluid.alpha > 0.0 {
        dt = dt.min(0.5 * fluid.alpha * fluid.alpha / fluid.nu);
    }
    if speed > 0.0 {
        let dx = lattice.length() / lattice.n() as f64;
        dt = dt.min(0.5 * dx / speed);
    }
    dt
}

/// Per-slot integrating factors for one step size.
pub(crate) struct Exponentials {
    full: Vec<f64>,
    half: Vec<f64>,
}

impl Exponentials {
    pub(crate) fn new(lattice: &WaveLattice, fluid: &FluidParams, dt: f64) -> Self {
        let rates: Vec<f64> = (0..lattice.len())
            .map(|i| fluid.decay_rate(lattice.eigenvalue(i)))
            .collect();
        Self {
            full: rates.iter().map(|m| (-m * dt).exp()).collect(),
            half: rates.iter().map(|m| (-0.5 * m * dt).exp()).collect(),
        }
    }
}

fn lincomb(
    a: &SpectralField,
    wa: impl Fn(usize) -> f64,
    b: &SpectralField,
    wb: impl Fn(usize) -> f64,
) -> SpectralField {
    let coeffs = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .enumerate()
        .map(|(i, (x, y))| {
            let (p, q) = (wa(i), wb(i));
            [x[0] * p + y[0] * q, x[1] * p + y[1] * q, x[2] * p + y[2] * q]
        })
        .collect();
    SpectralField::from_coeffs_unchecked(a.lattice(), coeffs)
}

/// One Lawson-RK4 step of a system of fields sharing the linear operator.
///
/// `rhs(t, states)` returns the Voight-scaled nonlinear part for every state.
pub(crate) fn lawson_rk4<F>(
    states: &[SpectralField],
    ex: &Exponentials,
    t: f64,
    dt: f64,
    mut rhs: F,
) -> Result<Vec<SpectralField>>
where
    F: FnMut(f64, &[SpectralField]) -> Result<Vec<SpectralField>>,
{
    let (e, e2) = (&ex.full, &ex.half);
    let h = 0.5 * dt;
    let k1 = rhs(t, states)?;
    let a: Vec<_> = states
        .iter()
        .zip(&k1)
        .map(|(s, k)| lincomb(s, |i| e2[i], k, |i| h * e2[i]))
        .collect();
    let k2 = rhs(t + h, &a)?;
    let b: Vec<_> = states
        .iter()
        .zip(&k2)
        .map(|(s, k)| lincomb(s, |i| e2[i], k, |_| h))
        .collect();
    let k3 = rhs(t + h, &b)?;
    let c: Vec<_> = states
        .iter()
        .zip(&k3)
        .map(|(s, k)| lincomb(s, |i| e[i], k, |i| dt * e2[i]))
        .collect();
    let k4 = rhs(t + dt, &c)?;
    let w = dt / 6.0;
    Ok((0..states.len())
        .map(|n| {
            let s = lincomb(&states[n], |i| e[i], &k1[n], |i| w * e[i]);
            let s = lincomb(&s, |_| 1.0, &k2[n], |i| 2.0 * w * e2[i]);
            let s = lincomb(&s, |_| 1.0, &k3[n], |i| 2.0 * w * e2[i]);
            lincomb(&s, |_| 1.0, &k4[n], |_| w)
        })
        .collect())
}

/// `(f - B(u, u)) / (1 + alpha^2 l)`.
pub(crate) fn voight_rhs(
    fluid: &FluidParams,
    forcing: &SpectralField,
    u: &SpectralField,
) -> Result<SpectralField> {
    Ok(voight_scaled(fluid, forcing, &bilinear(u, u)?))
}

/// `(f - b) / (1 + alpha^2 l)` for a precomputed nonlinear term `b`.
pub(crate) fn voight_scaled(
    fluid: &FluidParams,
    forcing: &SpectralField,
    b: &SpectralField,
) -> SpectralField {
    let lat = b.lattice();
    lincomb(
        forcing,
        |i| fluid.voight_scale(lat.eigenvalue(i)),
        b,
        |i| -fluid.voight_scale(lat.eigenvalue(i)),
    )
}

/// Advances the NSV system by one step.
pub fn step_nsv(
    u: &SpectralField,
    fluid: &FluidParams,
    forcing: &Forcing,
    dt: f64,
) -> Result<SpectralField> {
    let ex = Exponentials::new(u.lattice(), fluid, dt);
    step_with(u, fluid, forcing, &ex, 0.0, dt)
}

fn step_with(
    u: &SpectralField,
    fluid: &FluidParams,
    forcing: &Forcing,
    ex: &Exponentials,
    t: f64,
    dt: f64,
) -> Result<SpectralField> {
    let f = forcing.field();
    let mut out = lawson_rk4(std::slice::from_ref(u), ex, t, dt, |_, s| {
        Ok(vec![voight_rhs(fluid, f, &s[0])?])
    })?;
    let next = out.pop().expect("one state in, one state out");
    if !next.is_finite() {
        return Err(NsvError::BlowUp {
            t: t + dt,
            last_valid_t: t,
        });
    }
    Ok(next)
}

/// Fixed-step driver state: owns the field between steps.
pub struct NsvStepper {
    fluid: FluidParams,
    forcing: Forcing,
    ex: Exponentials,
    dt: f64,
    time: f64,
    state: SpectralField,
}

impl NsvStepper {
    pub fn new(fluid: FluidParams, forcing: Forcing, u0: SpectralField, dt: f64) -> Result<Self> {
        u0.lattice().check_same(forcing.field().lattice())?;
        let ex = Exponentials::new(u0.lattice(), &fluid, dt);
        Ok(Self {
            fluid,
            forcing,
            ex,
            dt,
            time: 0.0,
            state: u0,
        })
    }

    pub fn step(&mut self) -> Result<()> {
        self.state = step_with(
            &self.state,
            &self.fluid,
            &self.forcing,
            &self.ex,
            self.time,
            self.dt,
        )?;
        self.time += self.dt;
        Ok(())
    }

    pub fn state(&self) -> &SpectralField {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn sample(&self) -> EnergySample {
        EnergySample::measure(self.time, &self.state, &self.fluid, self.forcing.field())
    }
}

/// Number of cadence points in the trailing window used to detect `t0`.
pub const ABSORBING_WINDOW: usize = 20;

/// First sample time starting a run of `window` consecutive samples with
/// `norm <= bound`.
pub fn detect_absorbing_time(
    times: &[f64],
    norms: &[f64],
    bound: f64,
    window: usize,
) -> Option<f64> {
    let mut run = 0;
    for (i, &v) in norms.iter().enumerate() {
        if v <= bound {
            run += 1;
            if run == window {
                return Some(times[i + 1 - window]);
            }
        } else {
            run = 0;
        }
    }
    None
}

/// One cadence point: time and `||u||` on the integer lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormSample {
    pub t: f64,
    pub v_norm: f64,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub dt: f64,
    pub steps: usize,
    pub steps_per_output: usize,
    /// One entry per step, including `t = 0`.
    pub budget: Vec<EnergySample>,
    /// One entry per cadence point, including `t = 0`.
    pub outputs: Vec<NormSample>,
    pub final_state: SpectralField,
    pub m1: Option<f64>,
    pub t0: Option<f64>,
}

/// Resolves the step size so that it divides the output cadence.
pub fn resolve_dt(params: &SimParams, forcing: &Forcing, u0: &SpectralField) -> Result<(f64, usize)> {
    let dt = match params.dt {
        Some(dt) => dt,
        None => {
            let lat = u0.lattice();
            let lifted = forcing
                .field()
                .scale_modes(|i| if i == 0 { 0.0 } else { 1.0 / (params.fluid.nu * lat.eigenvalue(i)) });
            let speed = to_physical(u0)
                .max_speed()
                .max(to_physical(&lifted).max_speed());
            default_dt(&params.fluid, lat, speed)
        }
    };
    let per_output = (params.cadence / dt).ceil().max(1.0) as usize;
    Ok((params.cadence / per_output as f64, per_output))
}

/// Integrates to `t_end`, calling `on_output(t, u)` at `t = 0` and at every
/// cadence point.
pub fn run_simulation<F>(
    params: &SimParams,
    forcing: &Forcing,
    u0: SpectralField,
    mut on_output: F,
) -> Result<RunRecord>
where
    F: FnMut(f64, &SpectralField) -> Result<()>,
{
    params.validate()?;
    let (dt, per_output) = resolve_dt(params, forcing, &u0)?;
    let outputs_total = (params.t_end / params.cadence).round().max(1.0) as usize;
    let steps = outputs_total * per_output;
    let lambda1 = u0.lattice().lambda1();
    let m1 = m1_bound(&params.fluid, forcing.field(), lambda1).ok();

    let mut stepper = NsvStepper::new(params.fluid, forcing.clone(), u0, dt)?;
    let mut budget = Vec::with_capacity(steps + 1);
    let mut outputs = Vec::with_capacity(outputs_total + 1);
    budget.push(stepper.sample());
    outputs.push(NormSample {
        t: 0.0,
        v_norm: stepper.state().sobolev_norm(1.0),
    });
    on_output(0.0, stepper.state())?;
    for k in 1..=steps {
        stepper.step()?;
        budget.push(stepper.sample());
        if k % per_output == 0 {
            let t = (k / per_output) as f64 * params.cadence;
            outputs.push(NormSample {
                t,
                v_norm: stepper.state().sobolev_norm(1.0),
            });
            on_output(t, stepper.state())?;
        }
    }
    let t0 = m1.and_then(|bound| {
        let times: Vec<f64> = outputs.iter().map(|o| o.t).collect();
        let norms: Vec<f64> = outputs.iter().map(|o| o.v_norm).collect();
        detect_absorbing_time(&times, &norms, bound, ABSORBING_WINDOW)
    });
    Ok(RunRecord {
        dt,
        steps,
        steps_per_output: per_output,
        budget,
        outputs,
        final_state: stepper.state,
        m1,
        t0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_divfree_field;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn shear_field(lat: &WaveLattice, seed: u64) -> SpectralField {
        // x-velocity depending on (y, z) only: (u . grad) u vanishes identically.
        let r = random_divfree_field(lat, seed, |k| (-0.4 * k).exp());
        r.map_modes(|i, u| {
            let j = lat.wavevector(i);
            if j[0] == 0 {
                [u[0], Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                [Complex64::new(0.0, 0.0); 3]
            }
        })
    }

    #[test]
    fn single_mode_matches_closed_form() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let u0 = shear_field(&lat, 1);
        for alpha in [0.0, 0.5] {
            let fluid = FluidParams::new(0.3, alpha).unwrap();
            let mut s = NsvStepper::new(fluid, Forcing::zero(&lat), u0.clone(), 1e-3).unwrap();
            for _ in 0..1000 {
                s.step().unwrap();
            }
            let exact = homogeneous_decay(&u0, &fluid, s.time());
            let rel = s.state().max_abs_diff(&exact) / u0.max_abs();
            assert!(rel < 1e-8, "alpha {alpha}: {rel}");
        }
    }

    #[test]
    fn zero_stays_zero() {
        let lat = WaveLattice::new(8, 1.0).unwrap();
        let fluid = FluidParams::new(1.0, 0.1).unwrap();
        let z = SpectralField::zeros(&lat);
        let next = step_nsv(&z, &fluid, &Forcing::zero(&lat), 0.01).unwrap();
        assert!(next.is_zero());
    }

    #[test]
    fn unforced_energy_strictly_decreases() {
        let lat = WaveLattice::new(16, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(0.05, 0.2).unwrap();
        let u0 = random_divfree_field(&lat, 4, |k| k * (-0.5 * k).exp());
        let params = SimParams {
            fluid,
            length: 2.0 * PI,
            n: 16,
            dt: Some(0.01),
            t_end: 1.0,
            cadence: 0.1,
            seed: 0,
        };
        let rec = run_simulation(&params, &Forcing::zero(&lat), u0, |_, _| Ok(())).unwrap();
        assert_eq!(rec.budget.len(), 101);
        assert!(rec.budget.windows(2).all(|w| w[1].energy < w[0].energy));
    }

    #[test]
    fn nan_aborts_with_time() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(1.0, 0.0).unwrap();
        let mut u = random_divfree_field(&lat, 1, |_| 1.0);
        u.coeffs_mut()[lat.index_of([1, 0, 0]).unwrap()][1] = Complex64::new(f64::NAN, 0.0);
        let mut s = NsvStepper::new(fluid, Forcing::zero(&lat), u, 0.01).unwrap();
        assert!(matches!(s.step(), Err(NsvError::BlowUp { .. })));
    }

    #[test]
    fn window_detection() {
        let times: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let mut norms = vec![2.0; 5];
        norms.extend(vec![0.5; 3]);
        norms.push(2.0);
        norms.extend(vec![0.5; 21]);
        assert_eq!(detect_absorbing_time(&times, &norms, 1.0, 20), Some(9.0));
        assert_eq!(detect_absorbing_time(&times, &norms, 0.1, 20), None);
    }

    #[test]
    fn voight_rate_decreases_with_alpha() {
        let l = 9.0;
        let rates: Vec<f64> = [0.0, 0.1, 0.5, 1.0, 3.0]
            .iter()
            .map(|&a| FluidParams::new(0.7, a).unwrap().decay_rate(l))
            .collect();
        assert!(rates.windows(2).all(|w| w[1] < w[0]));
        assert!((rates[0] - 0.7 * 9.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(FluidParams::new(0.0, 1.0).is_err());
        assert!(FluidParams::new(1.0, -1.0).is_err());
        let p = SimParams {
            fluid: FluidParams { nu: 1.0, alpha: 0.1 },
            length: 1.0,
            n: 8,
            dt: Some(0.0),
            t_end: 1.0,
            cadence: 0.1,
            seed: 0,
        };
        assert!(p.validate().is_err());
    }
}
