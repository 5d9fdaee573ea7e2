use std::f64::consts::E;

use super::{gevrey_norm, mode_split, GevreySplitPlan};
use crate::error::{NsvError, Result};
use crate::integrator::{lawson_rk4, voight_scaled, Exponentials, FluidParams};
use crate::nonlinear::bilinear;
use crate::spectral::SpectralField;

/// Stored samples of a trajectory, linearly interpolated in time.
#[derive(Clone, Debug)]
pub struct InterpolatedTrajectory {
    times: Vec<f64>,
    states: Vec<SpectralField>,
}

impl InterpolatedTrajectory {
    pub fn new(times: Vec<f64>, states: Vec<SpectralField>) -> Result<Self> {
        if times.is_empty() || times.len() != states.len() {
            return Err(NsvError::Missing("trajectory samples".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(NsvError::InvalidInput("sample times must increase".into()));
        }
        Ok(Self { times, states })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.times[0], self.times[self.times.len() - 1])
    }

    pub fn at(&self, t: f64) -> Result<SpectralField> {
        let (lo, hi) = self.span();
        let slack = 1e-9 * (hi - lo).abs().max(1.0);
        if t < lo - slack || t > hi + slack {
            return Err(NsvError::InvalidInput(format!(
                "time {t} outside the stored span [{lo}, {hi}]"
            )));
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return Ok(self.states[0].clone());
        }
        if k == self.times.len() {
            return Ok(self.states[k - 1].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        Ok(self.states[k - 1].scaled(1.0 - s).axpy(s, &self.states[k]))
    }
}

/// Coefficients of `phi' + a phi <= b phi^{3/2} + c` for the high-mode part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PropBndCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `2 c / a`.
    pub ceiling: f64,
    /// `b c^{1/2} < (a/2)^{3/2}`.
    pub coefficient_condition: bool,
}

impl PropBndCoefficients {
    pub fn from_plan(plan: &GevreySplitPlan, fluid: &FluidParams) -> Self {
        let nu = fluid.nu;
        let l = plan.lambda;
        let l1 = plan.lambda1;
        let c1 = plan.gevrey_c1;
        let a = 2.0 * nu * plan.d2 / 5.0;
        let b = 2.0 * c1 / (l.powf(0.75) * l1.powf(0.75) * fluid.alpha.powi(3));
        let c = 2.0
            * (5.0 * plan.fhat_norm.powi(2) / (4.0 * nu * l)
                + 5.0 * c1 * c1 * E.powi(4) * plan.m1.powi(3) * plan.m2 / (4.0 * nu * l1.powf(1.5)));
        Self {
            a,
            b,
            c,
            ceiling: 2.0 * c / a,
            coefficient_condition: b * c.sqrt() < (a / 2.0).powf(1.5),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatVParams {
    pub fluid: FluidParams,
    pub t0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub cadence: f64,
}

#[derive(Clone, Debug)]
pub struct HatVOutput {
    pub times: Vec<f64>,
    /// `|h|_{1,tau}^2 + alpha^2 |h|_{2,tau}^2`.
    pub phi: Vec<f64>,
    pub sup_phi: f64,
    pub coefficients: PropBndCoefficients,
    /// `sup phi > 10 * ceiling`.
    pub flagged: bool,
    /// `max_t |P_lambda h|`, zero when the support is preserved.
    pub max_low_leak: f64,
    pub final_state: SpectralField,
}

/// Integrates `h_t + nu A h + alpha^2 A h_t + Q B(vbar + h, vbar + h) = Q f`
/// from `h(t0) = 0`, where `vbar = P_lambda v2` is supplied by `v2_at`.
///
/// `on_sample(t, h)` runs at `t0` and at every cadence point.
pub fn evolve_hat_v<V, S>(
    mut v2_at: V,
    forcing: &SpectralField,
    plan: &GevreySplitPlan,
    params: &HatVParams,
    mut on_sample: S,
) -> Result<HatVOutput>
where
    V: FnMut(f64) -> Result<SpectralField>,
    S: FnMut(f64, &SpectralField) -> Result<()>,
{
    let HatVParams {
        fluid,
        t0,
        horizon,
        dt,
        cadence,
    } = *params;
    if !(horizon > 0.0 && dt > 0.0 && cadence > 0.0) {
        return Err(NsvError::InvalidInput(
            "horizon, dt and cadence must be positive".into(),
        ));
    }
    let lat = forcing.lattice();
    let lambda = plan.lambda;
    let per_output = (cadence / dt).ceil().max(1.0) as usize;
    let h_step = cadence / per_output as f64;
    let outputs = (horizon / cadence).round().max(1.0) as usize;
    let ex = Exponentials::new(lat, &fluid, h_step);
    let (_, fhat) = mode_split(forcing, lambda);
    let a2 = fluid.alpha * fluid.alpha;
    let phi_of = |h: &SpectralField| {
        gevrey_norm(h, 1.0, plan.tau).powi(2) + a2 * gevrey_norm(h, 2.0, plan.tau).powi(2)
    };
    let coefficients = PropBndCoefficients::from_plan(plan, &fluid);

    let mut h = SpectralField::zeros(lat);
    let mut times = vec![t0];
    let mut phi = vec![0.0];
    let mut leak = 0.0f64;
    on_sample(t0, &h)?;
    let mut t = t0;
    for k in 1..=outputs * per_output {
        let mut next = lawson_rk4(std::slice::from_ref(&h), &ex, t, h_step, |s, st| {
            let (vbar, _) = mode_split(&v2_at(s)?, lambda);
            let total = &vbar + &st[0];
            let (_, qb) = mode_split(&bilinear(&total, &total)?, lambda);
            Ok(vec![voight_scaled(&fluid, &fhat, &qb)])
        })?;
        h = next.pop().expect("one state");
        if !h.is_finite() {
            return Err(NsvError::BlowUp {
                t: t + h_step,
                last_valid_t: t,
            });
        }
        t = t0 + k as f64 * h_step;
        if k % per_output == 0 {
            let tk = t0 + (k / per_output) as f64 * cadence;
            let (low, _) = mode_split(&h, lambda);
            leak = leak.max(low.max_abs());
            times.push(tk);
            phi.push(phi_of(&h));
            on_sample(tk, &h)?;
        }
    }
    let sup_phi = phi.iter().copied().fold(0.0, f64::max);
    Ok(HatVOutput {
        times,
        phi,
        sup_phi,
        coefficients,
        flagged: sup_phi > 10.0 * coefficients.ceiling,
        max_low_leak: leak,
        final_state: h,
    })
}
