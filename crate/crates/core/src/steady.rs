//! Stationary solutions of `nu A u + B(u, u) = f` and the lower bound on
//! their analyticity radius.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NsvError, Result};
use crate::gevrey::{
    fit_decay_rate, gevrey_inner, gevrey_norm, gevrey_norm_ln, shell_spectrum, FitPolicy,
    GevreyProfile,
};
use crate::integrator::Forcing;
use crate::nonlinear::bilinear;
use crate::spectral::{random_divfree_field, SpectralField, WaveLattice};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor in `(0, 1]`.
    pub theta: f64,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 500,
            theta: 0.7,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadySolution {
    pub u: SpectralField,
    /// `|nu A u + B(u, u) - f|` of the returned iterate.
    pub residual: f64,
    /// Number of iterates examined, the starting guess included.
    pub iterations: usize,
    pub history: Vec<f64>,
    pub converged: bool,
    /// `||u^1 - u^0||`.
    pub first_step: f64,
}

/// `(nu A)^{-1} g`.
pub fn stokes_solve(g: &SpectralField, nu: f64) -> SpectralField {
    let lat = g.lattice();
    g.scale_modes(|i| if lat.wave_sq(i) == 0 { 0.0 } else { 1.0 / (nu * lat.eigenvalue(i)) })
}

/// `|nu A u + B(u, u) - f|`, evaluated from scratch.
pub fn steady_residual(u: &SpectralField, nu: f64, forcing: &SpectralField) -> Result<f64> {
    let au = u.stokes_apply(1.0).scaled(nu);
    Ok((&(&au + &bilinear(u, u)?) - forcing).sobolev_norm(0.0))
}

/// Relaxed Picard iteration from `u^0 = (nu A)^{-1} f`.
///
/// Running out of iterations is not an error: the report then carries
/// `converged = false` with the last iterate and the residual history.
pub fn solve_steady(forcing: &Forcing, nu: f64, options: &SteadyOptions) -> Result<SteadySolution> {
    if !(nu > 0.0) {
        return Err(NsvError::InvalidInput(format!("nu must be positive, got {nu}")));
    }
    if !(options.theta > 0.0 && options.theta <= 1.0) {
        return Err(NsvError::InvalidInput(format!(
            "relaxation factor must lie in (0, 1], got {}",
            options.theta
        )));
    }
    if !(options.tol > 0.0) || options.max_iter == 0 {
        return Err(NsvError::InvalidInput("need tol > 0 and max_iter >= 1".into()));
    }
    let f = forcing.field();
    let theta = options.theta;
    let mut u = stokes_solve(f, nu);
    let mut history = Vec::new();
    let mut first_step = 0.0;
    for k in 0..options.max_iter {
        let b = bilinear(&u, &u)?;
        let residual = (&(&u.stokes_apply(1.0).scaled(nu) + &b) - f).sobolev_norm(0.0);
        history.push(residual);
        if residual < options.tol || !residual.is_finite() || residual > 1e150 {
            return Ok(SteadySolution {
                converged: residual < options.tol,
                residual,
                iterations: k + 1,
                history,
                first_step,
                u,
            });
        }
        let next = u.scaled(1.0 - theta).axpy(theta, &stokes_solve(&(f - &b), nu));
        if k == 0 {
            first_step = (&next - &u).sobolev_norm(1.0);
        }
        u = next;
    }
    let residual = steady_residual(&u, nu, f)?;
    history.push(residual);
    Ok(SteadySolution {
        converged: residual < options.tol,
        residual,
        iterations: options.max_iter + 1,
        history,
        first_step,
        u,
    })
}

/// Lower bound on the analyticity radius of a stationary solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowUpTime {
    /// `1 / ((c^2 l1^{3/2}/nu^2) ||u||^2 + (c l1^{3/4}/nu) sqrt2 e^{sigma N_f^{1/4}} N_f^{1/2} ||u||)`,
    /// infinite for `u = 0`.
    pub tau_b: f64,
    /// `nu^2 / (c^2 l1^{3/2} ||u||^2)`.
    pub scaling_form: f64,
}

impl BlowUpTime {
    pub fn is_infinite(&self) -> bool {
        self.tau_b.is_infinite()
    }
}

pub fn blow_up_time_from_norm(
    u_norm: f64,
    nu: f64,
    lambda1: f64,
    n_f: f64,
    sigma: f64,
    c: f64,
) -> Result<BlowUpTime> {
    if !(nu > 0.0 && lambda1 > 0.0 && c > 0.0 && sigma >= 0.0 && u_norm >= 0.0) {
        return Err(NsvError::InvalidInput(
            "blow-up time needs nu, lambda1, c > 0 and sigma, ||u|| >= 0".into(),
        ));
    }
    if !(n_f >= 1.0) {
        return Err(NsvError::InvalidInput(format!("forcing support bound must be >= 1, got {n_f}")));
    }
    if u_norm == 0.0 {
        return Ok(BlowUpTime {
            tau_b: f64::INFINITY,
            scaling_form: f64::INFINITY,
        });
    }
    let quad = c * c * lambda1.powf(1.5) / (nu * nu) * u_norm * u_norm;
    let lin = c * lambda1.powf(0.75) / nu
        * 2f64.sqrt()
        * (sigma * n_f.powf(0.25)).exp()
        * n_f.sqrt()
        * u_norm;
    Ok(BlowUpTime {
        tau_b: 1.0 / (quad + lin),
        scaling_form: nu * nu / (c * c * lambda1.powf(1.5) * u_norm * u_norm),
    })
}

/// [`blow_up_time_from_norm`] with `||u||` taken from the field.
pub fn blow_up_time(
    u: &SpectralField,
    nu: f64,
    n_f: f64,
    sigma: f64,
    c: f64,
) -> Result<BlowUpTime> {
    blow_up_time_from_norm(u.sobolev_norm(1.0), nu, u.lattice().lambda1(), n_f, sigma, c)
}

/// Measured tail of a stationary solution against `tau_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteadyGevreyCheck {
    pub profile: GevreyProfile,
    pub tau_b: f64,
    pub safety: f64,
    /// `Some(tau* >= tau_B / safety)`; `None` when the spectrum has no
    /// exponential range at this resolution.
    pub passes: Option<bool>,
    /// `ln |u|_{2, tau_B/2}` (finite unless `u = 0` or `tau_B` is infinite).
    pub ln_norm_half_tau_b: f64,
}

impl SteadyGevreyCheck {
    pub fn inconclusive(&self) -> bool {
        self.passes.is_none()
    }
}

pub fn verify_steady_gevrey(
    u: &SpectralField,
    blow_up: &BlowUpTime,
    policy: &FitPolicy,
    safety: f64,
) -> SteadyGevreyCheck {
    let profile = fit_decay_rate(&shell_spectrum(u, 0.0), policy);
    if u.is_zero() {
        return SteadyGevreyCheck {
            profile,
            tau_b: blow_up.tau_b,
            safety,
            passes: Some(true),
            ln_norm_half_tau_b: f64::NEG_INFINITY,
        };
    }
    let passes = profile.tau_star.map(|t| t >= blow_up.tau_b / safety);
    SteadyGevreyCheck {
        ln_norm_half_tau_b: gevrey_norm_ln(u, 2.0, 0.5 * blow_up.tau_b),
        profile,
        tau_b: blow_up.tau_b,
        safety,
        passes,
    }
}

/// `|(B(u,u), A^{1/2} u)_{0,tau}| / (l1^{3/4} |u|_{1,tau}^2 |u|_{3/2,tau})`, zero for `u = 0`.
///
/// The trilinear estimate behind `tau_B`.
pub fn steady_trilinear_ratio(u: &SpectralField, tau: f64) -> Result<f64> {
    let b = bilinear(u, u)?;
    let lhs = gevrey_inner(&b, u, 0.5, tau).abs();
    let rhs = u.lattice().lambda1().powf(0.75)
        * gevrey_norm(u, 1.0, tau).powi(2)
        * gevrey_norm(u, 1.5, tau);
    Ok(if rhs > 0.0 { lhs / rhs } else { 0.0 })
}

/// Weights at which [`steady_trilinear_ratio`] is sampled.
pub const STEADY_CONSTANT_TAUS: [f64; 4] = [0.0, 0.5, 1.0, 2.0];

/// Largest [`steady_trilinear_ratio`] over `samples` random fields.
pub fn estimate_steady_constant(lattice: &WaveLattice, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(NsvError::InvalidInput("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let decay: f64 = rng.random_range(0.05..1.5);
        let power: f64 = rng.random_range(0.0..3.0);
        let u = random_divfree_field(lattice, rng.random(), move |k| {
            k.powf(-power) * (-decay * k).exp()
        });
        for tau in STEADY_CONSTANT_TAUS {
            best = best.max(steady_trilinear_ratio(&u, tau)?);
        }
    }
    Ok(best)
}

/// The fixed point `sigma = tau_B(sigma)`.
///
/// The bound is derived for weights `tau <= sigma`, so `tau_B(sigma)` is only
/// certified up to `sigma`; the fixed point is the largest radius certified
/// this way. Infinite for `u = 0`.
pub fn self_consistent_sigma(u_norm: f64, nu: f64, lambda1: f64, n_f: f64, c: f64) -> Result<f64> {
    let tau_b = |sigma: f64| -> Result<f64> {
        Ok(blow_up_time_from_norm(u_norm, nu, lambda1, n_f, sigma, c)?.tau_b)
    };
    let hi0 = tau_b(0.0)?;
    if hi0.is_infinite() {
        return Ok(f64::INFINITY);
    }
    // sigma - tau_B(sigma) increases from -tau_B(0) < 0 and is positive at tau_B(0).
    let (mut lo, mut hi) = (0.0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid < tau_b(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Weight parameter in `tau_B`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SigmaChoice {
    Fixed(f64),
    /// [`self_consistent_sigma`].
    SelfConsistent,
}

/// How `tau_B` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundOptions {
    pub sigma: SigmaChoice,
    /// Constant of the trilinear estimate; measured when absent.
    pub c: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Inflation of the measured constant.
    pub c_safety: f64,
    /// `tau*` is compared against `tau_B / safety`.
    pub safety: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            sigma: SigmaChoice::SelfConsistent,
            c: None,
            samples: 40,
            seed: 0,
            c_safety: 2.0,
            safety: 1.0,
        }
    }
}

/// Solve, bound and compare in one pass.
#[derive(Clone, Debug)]
pub struct SteadyStateReport {
    pub solution: SteadySolution,
    /// Largest `|j|^2` carrying forcing.
    pub n_f: f64,
    pub sigma: f64,
    pub c: f64,
    /// `c` came from [`estimate_steady_constant`] and the solution itself.
    pub c_measured: bool,
    pub blow_up: BlowUpTime,
    /// `tau_B` at `sigma = 0`, for reference.
    pub tau_b_sigma_zero: f64,
    pub check: SteadyGevreyCheck,
}

/// Measured constant for `u`: random samples and `u` itself, times `c_safety`.
pub fn measured_steady_constant(u: &SpectralField, options: &BoundOptions) -> Result<f64> {
    let mut c = estimate_steady_constant(u.lattice(), options.samples, options.seed)?;
    for tau in STEADY_CONSTANT_TAUS {
        c = c.max(steady_trilinear_ratio(u, tau)?);
    }
    Ok(c * options.c_safety)
}

pub fn steady_report(
    forcing: &Forcing,
    nu: f64,
    options: &SteadyOptions,
    bound: &BoundOptions,
    policy: &FitPolicy,
) -> Result<SteadyStateReport> {
    let solution = solve_steady(forcing, nu, options)?;
    let u = &solution.u;
    let n_f = (forcing.support_wave_sq() as f64).max(1.0);
    let (c, c_measured) = match bound.c {
        Some(c) => (c, false),
        None => (measured_steady_constant(u, bound)?, true),
    };
    let u_norm = u.sobolev_norm(1.0);
    let l1 = u.lattice().lambda1();
    let sigma = match bound.sigma {
        SigmaChoice::Fixed(s) => s,
        SigmaChoice::SelfConsistent => self_consistent_sigma(u_norm, nu, l1, n_f, c)?,
    };
    // An infinite sigma only arises for u = 0, where tau_B is infinite anyway.
    let blow_up = blow_up_time(u, nu, n_f, if sigma.is_finite() { sigma } else { 0.0 }, c)?;
    let tau_b_sigma_zero = blow_up_time(u, nu, n_f, 0.0, c)?.tau_b;
    let check = verify_steady_gevrey(u, &blow_up, policy, bound.safety);
    Ok(SteadyStateReport {
        solution,
        n_f,
        sigma,
        c,
        c_measured,
        blow_up,
        tau_b_sigma_zero,
        check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::WaveLattice;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn unit_blow_up_time() {
        let b = blow_up_time_from_norm(1.0, 1.0, 1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((b.tau_b - 1.0 / (1.0 + 2f64.sqrt())).abs() < 1e-15);
        assert!(blow_up_time_from_norm(0.0, 1.0, 1.0, 1.0, 0.0, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn blow_up_time_monotone() {
        let base = |u, nu, nf, s| blow_up_time_from_norm(u, nu, 1.0, nf, s, 1.0).unwrap().tau_b;
        let t = base(1.0, 1.0, 2.0, 0.5);
        assert!(base(2.0, 1.0, 2.0, 0.5) < t);
        assert!(base(1.0, 1.0, 3.0, 0.5) < t);
        assert!(base(1.0, 1.0, 2.0, 0.7) < t);
        assert!(base(1.0, 1.3, 2.0, 0.5) > t);
    }

    #[test]
    fn zero_forcing_gives_zero_in_one_iteration() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let s = solve_steady(&Forcing::zero(&lat), 0.5, &SteadyOptions::default()).unwrap();
        assert!(s.converged && s.u.is_zero());
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn first_step_matches_hand_expansion() {
        let lat = WaveLattice::new(16, 2.0 * PI).unwrap();
        let z = Complex64::new(0.0, 0.0);
        let f = Forcing::from_modes(
            &lat,
            &[
                ([1, 0, 0], [z, Complex64::new(0.05, 0.0), z]),
                ([0, 1, 1], [Complex64::new(0.0, 0.03), z, z]),
            ],
        )
        .unwrap();
        let nu = 0.5;
        let opts = SteadyOptions::default();
        let s = solve_steady(&f, nu, &opts).unwrap();
        assert!(s.converged && s.residual < 1e-10);
        let u0 = stokes_solve(f.field(), nu);
        let hand = opts.theta * stokes_solve(&bilinear(&u0, &u0).unwrap(), nu).sobolev_norm(1.0);
        assert!((s.first_step - hand).abs() <= 1e-14 * hand.max(1e-300));
        assert!(steady_residual(&s.u, nu, f.field()).unwrap() < 1e-10);
    }

    #[test]
    fn strong_forcing_reports_failure() {
        let lat = WaveLattice::new(16, 2.0 * PI).unwrap();
        let f = Forcing::random_band(&lat, 2.5, 500.0, 1).unwrap();
        let s = solve_steady(
            &f,
            0.01,
            &SteadyOptions {
                max_iter: 50,
                ..SteadyOptions::default()
            },
        )
        .unwrap();
        assert!(!s.converged);
        assert!(!s.history.is_empty());
    }

    #[test]
    fn self_consistent_sigma_is_a_fixed_point() {
        for (u, nu, nf, c) in [(1.0, 1.0, 1.0, 1.0), (0.03, 0.1, 3.0, 0.02), (5.0, 0.2, 9.0, 0.1)] {
            let s = self_consistent_sigma(u, nu, 1.0, nf, c).unwrap();
            let t = blow_up_time_from_norm(u, nu, 1.0, nf, s, c).unwrap().tau_b;
            assert!(s > 0.0 && (s - t).abs() <= 1e-12 * s, "{s} {t}");
            assert!(s < blow_up_time_from_norm(u, nu, 1.0, nf, 0.0, c).unwrap().tau_b);
        }
        assert!(self_consistent_sigma(0.0, 1.0, 1.0, 1.0, 1.0).unwrap().is_infinite());
    }

    #[test]
    fn trilinear_ratio_of_zero_and_scaling() {
        let lat = WaveLattice::new(16, 2.0 * PI).unwrap();
        assert_eq!(steady_trilinear_ratio(&SpectralField::zeros(&lat), 0.5).unwrap(), 0.0);
        let u = random_divfree_field(&lat, 7, |k| (-0.4 * k).exp());
        // Homogeneous of degree zero in u.
        let a = steady_trilinear_ratio(&u, 0.5).unwrap();
        let b = steady_trilinear_ratio(&u.scaled(3.0), 0.5).unwrap();
        assert!(a > 0.0 && (a - b).abs() <= 1e-12 * a);
        assert!(estimate_steady_constant(&lat, 4, 1).unwrap() > 0.0);
    }

    #[test]
    fn derivative_identity_is_second_order() {
        let lat = WaveLattice::new(16, 2.0 * PI).unwrap();
        let w = random_divfree_field(&lat, 11, |k| (-0.3 * k).exp());
        let tau = 0.4;
        let exact = 2.0 * gevrey_norm(&w, 1.5, tau).powi(2);
        let err = |h: f64| {
            let d = (gevrey_norm(&w, 1.0, tau + h).powi(2) - gevrey_norm(&w, 1.0, tau - h).powi(2))
                / (2.0 * h);
            (d - exact).abs()
        };
        let errs: Vec<f64> = [0.04, 0.02, 0.01, 0.005].iter().map(|&h| err(h)).collect();
        for p in errs.windows(2) {
            let ratio = p[0] / p[1];
            assert!((3.6..4.4).contains(&ratio), "{errs:?}");
        }
    }

    #[test]
    fn zero_forcing_report_is_vacuous() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let r = steady_report(
            &Forcing::zero(&lat),
            0.5,
            &SteadyOptions::default(),
            &BoundOptions {
                samples: 2,
                ..BoundOptions::default()
            },
            &FitPolicy::default(),
        )
        .unwrap();
        assert!(r.blow_up.is_infinite() && r.sigma.is_infinite());
        assert_eq!(r.check.passes, Some(true));
    }
}
