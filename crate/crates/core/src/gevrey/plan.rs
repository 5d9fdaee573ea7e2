use std::f64::consts::E;

use super::{gevrey_norm, mode_split};
use crate::chain::BoundsTable;
use crate::error::{NsvError, Result};
use crate::integrator::FluidParams;
use crate::nonlinear::{ConstantSource, Constants};
use crate::spectral::SpectralField;

/// Choice of `tau0` and the optional relaxation of the three conditions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanOptions {
    pub tau0: f64,
    /// `Some(rho)` multiplies the admissible side of every condition by `rho`;
    /// plans built this way lie outside the theorem's hypotheses.
    pub relaxed: Option<f64>,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            tau0: 1.0,
            relaxed: None,
        }
    }
}

/// `lhs < rhs` (or `<=` for the first condition).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionEval {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

impl ConditionEval {
    fn strict(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            satisfied: lhs < rhs,
        }
    }

    fn weak(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            satisfied: lhs <= rhs,
        }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GevreySplitPlan {
    /// Splitting threshold as a Stokes eigenvalue.
    pub lambda: f64,
    /// `lambda / lambda1` when `lambda` is a lattice eigenvalue level.
    pub level: Option<i64>,
    pub tau: f64,
    pub tau0: f64,
    pub d2: f64,
    pub lambda1: f64,
    pub m1: f64,
    pub m2: f64,
    /// `|Q_lambda f|_{1,tau}`.
    pub fhat_norm: f64,
    /// `max{C1 e M1^{1/2} M2^{1/2} / (l^{1/2} l1^{3/4}), C1 e M1 / (l^{1/4} l1^{3/4})} <= nu / 5`.
    pub cond_i: ConditionEval,
    /// `(C4 |f^|^2/(nu l) + C5 M1^3 M2/(nu l1^{3/2}))^{1/3} < alpha^2 nu l^{1/2} l1^{1/2} d2`.
    pub cond_ii: ConditionEval,
    /// `l1^3 (c M1 / nu)^4 < l`.
    pub cond_iii: ConditionEval,
    pub gevrey_c1: f64,
    pub c4: f64,
    pub c5: f64,
    pub c: f64,
    pub source: ConstantSource,
    pub relaxed: Option<f64>,
    /// `lambda > alpha^{-2}`, assumed by the length-scale estimates.
    pub above_inverse_alpha_sq: bool,
    /// `Q_lambda f = 0`.
    pub forcing_below_split: bool,
}

impl GevreySplitPlan {
    pub fn satisfied(&self) -> bool {
        self.cond_i.satisfied && self.cond_ii.satisfied && self.cond_iii.satisfied
    }

    pub fn outside_hypotheses(&self) -> bool {
        self.relaxed.is_some()
    }
}

struct Inputs<'a> {
    fluid: FluidParams,
    forcing: &'a SpectralField,
    m1: f64,
    m2: f64,
    constants: &'a Constants,
    options: PlanOptions,
}

fn evaluate(inputs: &Inputs, lambda: f64) -> GevreySplitPlan {
    let Inputs {
        fluid,
        forcing,
        m1,
        m2,
        constants,
        options,
    } = *inputs;
    let lat = forcing.lattice();
    let l1 = lat.lambda1();
    let nu = fluid.nu;
    let a2 = fluid.alpha * fluid.alpha;
    let rho = options.relaxed.unwrap_or(1.0);
    let c1 = constants.gevrey_c1;
    let tau = lambda.powf(-0.5).min(options.tau0);
    let d2 = 1.0 / (1.0 / lambda + a2);
    let (_, fhat) = mode_split(forcing, lambda);
    let fhat_norm = gevrey_norm(&fhat, 1.0, tau);

    let i_lhs = f64::max(
        c1 * E * (m1 * m2).sqrt() / (lambda.sqrt() * l1.powf(0.75)),
        c1 * E * m1 / (lambda.powf(0.25) * l1.powf(0.75)),
    );
    let ii_lhs = (constants.c4 * fhat_norm * fhat_norm / (nu * lambda)
        + constants.c5 * m1.powi(3) * m2 / (nu * l1.powf(1.5)))
    .cbrt();
    let ii_rhs = a2 * nu * lambda.sqrt() * l1.sqrt() * d2;
    let iii_lhs = l1.powi(3) * (constants.c * m1 / nu).powi(4);

    let ratio = lambda / l1;
    let level = (ratio.round() - ratio).abs() <= 1e-9 * ratio;
    GevreySplitPlan {
        lambda,
        level: level.then(|| ratio.round() as i64),
        tau,
        tau0: options.tau0,
        d2,
        lambda1: l1,
        m1,
        m2,
        fhat_norm,
        cond_i: ConditionEval::weak(i_lhs, rho * nu / 5.0),
        cond_ii: ConditionEval::strict(ii_lhs, rho * ii_rhs),
        cond_iii: ConditionEval::strict(iii_lhs, rho * lambda),
        gevrey_c1: c1,
        c4: constants.c4,
        c5: constants.c5,
        c: constants.c,
        source: constants.source,
        relaxed: options.relaxed,
        above_inverse_alpha_sq: lambda * a2 > 1.0,
        forcing_below_split: fhat.is_zero(),
    }
}

fn inputs<'a>(
    fluid: &FluidParams,
    bounds: &BoundsTable,
    forcing: &'a SpectralField,
    constants: &'a Constants,
    options: PlanOptions,
) -> Result<Inputs<'a>> {
    if !(options.tau0 > 0.0) {
        return Err(NsvError::InvalidInput(format!("tau0 must be positive, got {}", options.tau0)));
    }
    if let Some(rho) = options.relaxed {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(NsvError::InvalidInput(format!("relaxation factor must be positive, got {rho}")));
        }
    }
    Ok(Inputs {
        fluid: *fluid,
        forcing,
        m1: bounds.m1,
        m2: bounds.m2,
        constants,
        options,
    })
}

/// Evaluates all three conditions at a given `lambda`.
pub fn evaluate_plan(
    fluid: &FluidParams,
    bounds: &BoundsTable,
    forcing: &SpectralField,
    constants: &Constants,
    options: PlanOptions,
    lambda: f64,
) -> Result<GevreySplitPlan> {
    let inputs = inputs(fluid, bounds, forcing, constants, options)?;
    Ok(evaluate(&inputs, lambda))
}

/// Every lattice eigenvalue level with its evaluated conditions, ascending.
pub fn scan_lambda(
    fluid: &FluidParams,
    bounds: &BoundsTable,
    forcing: &SpectralField,
    constants: &Constants,
    options: PlanOptions,
) -> Result<Vec<GevreySplitPlan>> {
    let inputs = inputs(fluid, bounds, forcing, constants, options)?;
    let lat = forcing.lattice();
    let l1 = lat.lambda1();
    Ok(lat
        .eigen_levels()
        .into_iter()
        .map(|q| evaluate(&inputs, l1 * q as f64))
        .collect())
}

/// Smallest lattice eigenvalue level at which all three conditions hold.
///
/// The conditions are monotone in `lambda`, so when no level on the lattice
/// qualifies the continuous threshold is located by bisection and returned
/// in the error.
pub fn select_lambda(
    fluid: &FluidParams,
    bounds: &BoundsTable,
    forcing: &SpectralField,
    constants: &Constants,
    options: PlanOptions,
) -> Result<GevreySplitPlan> {
    let inputs = inputs(fluid, bounds, forcing, constants, options)?;
    let lat = forcing.lattice();
    let l1 = lat.lambda1();
    for q in lat.eigen_levels() {
        let plan = evaluate(&inputs, l1 * q as f64);
        if plan.satisfied() {
            return Ok(plan);
        }
    }
    let lattice_max = lat.lambda_max();
    let mut hi = lattice_max;
    let mut found = false;
    for _ in 0..2000 {
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
        if evaluate(&inputs, hi).satisfied() {
            found = true;
            break;
        }
    }
    let required_lambda = if found {
        let mut lo = lattice_max;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if evaluate(&inputs, mid).satisfied() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    } else {
        f64::INFINITY
    };
    Err(NsvError::InsufficientResolution {
        required_lambda,
        lattice_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::compute_bounds;
    use crate::spectral::{random_divfree_field, WaveLattice};
    use std::f64::consts::PI;

    fn bounds_with(m1: f64, m2: f64, lambda1: f64) -> BoundsTable {
        BoundsTable {
            lambda1,
            d0: 0.5,
            m1,
            m32: 1.0,
            m2,
            higher: vec![],
            c1: 1.0,
            c2: 1.0,
            cm: 1.0,
            source: ConstantSource::Manual,
        }
    }

    #[test]
    fn zero_forcing_selects_lambda1() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(1.0, 1.0).unwrap();
        let f = SpectralField::zeros(&lat);
        let b = compute_bounds(&fluid, &f, &Constants::unit(), 2).unwrap();
        let plan = select_lambda(&fluid, &b, &f, &Constants::unit(), PlanOptions::default()).unwrap();
        assert_eq!(plan.lambda, lat.lambda1());
        assert_eq!(plan.level, Some(1));
        assert!(plan.forcing_below_split);
    }

    #[test]
    fn desk_case_against_scan() {
        let fluid = FluidParams::new(1.0, 1.0).unwrap();
        let b = bounds_with(1.0, 1.0, 1.0);
        for n in [8, 32, 64] {
            let lat = WaveLattice::new(n, 2.0 * PI).unwrap();
            let f = SpectralField::zeros(&lat);
            let scan = scan_lambda(&fluid, &b, &f, &Constants::unit(), PlanOptions::default()).unwrap();
            let expect = scan.iter().find(|p| p.satisfied()).map(|p| p.lambda);
            match select_lambda(&fluid, &b, &f, &Constants::unit(), PlanOptions::default()) {
                Ok(plan) => {
                    assert_eq!(Some(plan.lambda), expect);
                    assert!(plan.cond_iii.lhs == 1.0 && plan.lambda > 1.0);
                }
                Err(NsvError::InsufficientResolution { required_lambda, .. }) => {
                    assert!(expect.is_none());
                    // the M1 branch of condition (i) dominates: lambda >= (5 e)^4
                    let want = (5.0 * E).powi(4);
                    assert!((required_lambda - want).abs() < 1e-9 * want);
                }
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn doubling_m1_never_lowers_lambda() {
        let lat = WaveLattice::new(32, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(1.0, 0.5).unwrap();
        let f = random_divfree_field(&lat, 1, |k| if k < 2.0 { 0.01 } else { 0.0 });
        let opts = PlanOptions {
            tau0: 1.0,
            relaxed: Some(1e3),
        };
        let pick = |m1: f64| match select_lambda(&fluid, &bounds_with(m1, 0.1, 1.0), &f, &Constants::unit(), opts) {
            Ok(p) => p.lambda,
            Err(NsvError::InsufficientResolution { required_lambda, .. }) => required_lambda,
            Err(e) => panic!("{e}"),
        };
        let mut prev = 0.0;
        for m1 in [0.01, 0.02, 0.04, 0.08, 0.16] {
            let l = pick(m1);
            assert!(l >= prev);
            prev = l;
        }
    }

    #[test]
    fn relaxed_plan_is_labeled() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let fluid = FluidParams::new(1.0, 1.0).unwrap();
        let f = SpectralField::zeros(&lat);
        let b = bounds_with(1.0, 1.0, 1.0);
        let opts = PlanOptions {
            tau0: 1.0,
            relaxed: Some(100.0),
        };
        let plan = select_lambda(&fluid, &b, &f, &Constants::unit(), opts).unwrap();
        assert!(plan.outside_hypotheses());
        assert!(evaluate_plan(&fluid, &b, &f, &Constants::unit(), opts, plan.lambda)
            .unwrap()
            .satisfied());
    }
}
