//! Gevrey norms, mode splitting, the high/low split plan, spectrum fits and
//! length scales.
//!
//! `|u|_{r,tau}^2 = sum_j |u_j|^2 |j|^{2r} e^{2 tau |j|}` with integer `|j|`;
//! `tau` is dimensionless and converts to a physical length as `tau L / 2 pi`.

mod hat;
mod plan;
mod scales;
mod spectrum;

pub use hat::{evolve_hat_v, HatVOutput, HatVParams, InterpolatedTrajectory, PropBndCoefficients};
pub use plan::{
    evaluate_plan, scan_lambda, select_lambda, ConditionEval, GevreySplitPlan, PlanOptions,
};
pub use scales::{length_scales, tau_to_physical, LengthScales, ScaleInputs};
pub use spectrum::{fit_decay_rate, shell_spectrum, FitPolicy, GevreyProfile, SpectrumSeries};

use crate::error::Result;
use crate::nonlinear::bilinear;
use crate::spectral::SpectralField;

/// Above this `tau k_max` the sum is formed in log space.
const LOG_SPACE_THRESHOLD: f64 = 300.0;

fn log_weight(wave_sq: i64, r: f64, tau: f64) -> f64 {
    let k = (wave_sq as f64).sqrt();
    r * (wave_sq as f64).ln() + 2.0 * tau * k
}

/// `ln |u|_{r,tau}`, `-inf` for a zero field.
pub fn gevrey_norm_ln(u: &SpectralField, r: f64, tau: f64) -> f64 {
    let lat = u.lattice();
    let terms: Vec<f64> = u
        .coeffs()
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let e: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            (i != 0 && e > 0.0).then(|| e.ln() + log_weight(lat.wave_sq(i), r, tau))
        })
        .collect();
    let Some(max) = terms.iter().copied().reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    let s: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    0.5 * (max + s.ln())
}

/// `|u|_{r,tau}`.
pub fn gevrey_norm(u: &SpectralField, r: f64, tau: f64) -> f64 {
    let lat = u.lattice();
    let k_max = (lat.n() as f64 / 2.0) * 3f64.sqrt();
    if tau * k_max > LOG_SPACE_THRESHOLD {
        return gevrey_norm_ln(u, r, tau).exp();
    }
    u.weighted_norm_sq(|i| {
        let q = lat.wave_sq(i) as f64;
        q.powf(r) * (2.0 * tau * q.sqrt()).exp()
    })
    .sqrt()
}

/// Gevrey inner product `(u, v)_{r,tau}`.
pub fn gevrey_inner(u: &SpectralField, v: &SpectralField, r: f64, tau: f64) -> f64 {
    let lat = u.lattice();
    u.inner_weighted(v, |i| {
        let q = lat.wave_sq(i) as f64;
        q.powf(r) * (2.0 * tau * q.sqrt()).exp()
    })
}

/// `(P_lambda u, Q_lambda u)`: modes with Stokes eigenvalue `<= lambda` and the rest.
pub fn mode_split(u: &SpectralField, lambda: f64) -> (SpectralField, SpectralField) {
    let lat = u.lattice();
    let low = u.scale_modes(|i| if lat.eigenvalue(i) <= lambda { 1.0 } else { 0.0 });
    let high = u.scale_modes(|i| if lat.eigenvalue(i) <= lambda { 0.0 } else { 1.0 });
    (low, high)
}

/// Both sides of `|(B(u,v), w)_{1,tau}| <= C1 l1^{-3/4} |u|_{1,tau}^{1/2} |u|_{2,tau}^{1/2} |v|_{1,tau} |w|_{2,tau}`
/// with `C1 = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GevreyInequality {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, zero when both vanish.
    pub ratio: f64,
}

pub fn verify_gevrey_inequality(
    u: &SpectralField,
    v: &SpectralField,
    w: &SpectralField,
    tau: f64,
) -> Result<GevreyInequality> {
    let l1 = u.lattice().lambda1();
    let b = bilinear(u, v)?;
    let lhs = gevrey_inner(&b, w, 1.0, tau).abs();
    let rhs = l1.powf(-0.75)
        * (gevrey_norm(u, 1.0, tau) * gevrey_norm(u, 2.0, tau)).sqrt()
        * gevrey_norm(v, 1.0, tau)
        * gevrey_norm(w, 2.0, tau);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(GevreyInequality { lhs, rhs, ratio })
}
