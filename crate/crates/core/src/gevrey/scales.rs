use std::f64::consts::PI;

/// Inputs to the length-scale estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleInputs {
    pub nu: f64,
    pub alpha: f64,
    pub length: f64,
    /// Measured `nu <||u||^2>`.
    pub epsilon: f64,
    /// Measured `nu sup ||u||^2`.
    pub epsilon_sup: f64,
    /// `M1`, when known, for the bound `epsilon_sup <= nu M1^2`.
    pub m1: Option<f64>,
    pub lambda1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LengthScales {
    pub epsilon: f64,
    pub epsilon_sup: f64,
    /// `nu M1^2`.
    pub epsilon_sup_bound: Option<f64>,
    /// `(nu^3 / epsilon_sup)^{1/4}`.
    pub ell_k: f64,
    /// `L (l_K/L)^4`, from the determining-modes condition.
    pub lam1: f64,
    /// `alpha (l_K/L)^4`, first branch of the `M1 M2` condition.
    pub lam2: f64,
    /// `L (l_K/L)^4`, second branch of the `M1 M2` condition.
    pub lam3: f64,
    /// `L^{1/3} alpha^{2/3} (l_K/L)^4`, from the forcing-free energy condition.
    pub lam4: f64,
    /// `min{L, alpha, L^{1/3} alpha^{2/3}} (l_K/L)^4`.
    pub ell_nsv: f64,
    /// Same with `epsilon_sup` replaced by `nu M1^2`.
    pub ell_nsv_from_bound: Option<f64>,
    /// `M1^3 / (alpha^2 nu^2 l1^{5/2})`, the `M2` scaling with `C6 = 1`.
    pub m2_scaling: Option<f64>,
}

fn nsv_scale(nu: f64, alpha: f64, length: f64, eps_sup: f64) -> (f64, [f64; 4], f64) {
    if !(eps_sup > 0.0) {
        let inf = f64::INFINITY;
        return (inf, [inf; 4], inf);
    }
    let ell_k = (nu.powi(3) / eps_sup).powf(0.25);
    let q = (ell_k / length).powi(4);
    let lam1 = length * q;
    let lam2 = alpha * q;
    let lam4 = length.cbrt() * alpha.powf(2.0 / 3.0) * q;
    let ell = length.min(alpha).min(length.cbrt() * alpha.powf(2.0 / 3.0)) * q;
    (ell_k, [lam1, lam2, lam1, lam4], ell)
}

pub fn length_scales(inputs: &ScaleInputs) -> LengthScales {
    let ScaleInputs {
        nu,
        alpha,
        length,
        epsilon,
        epsilon_sup,
        m1,
        lambda1,
    } = *inputs;
    let (ell_k, [lam1, lam2, lam3, lam4], ell_nsv) = nsv_scale(nu, alpha, length, epsilon_sup);
    let bound = m1.map(|m| nu * m * m);
    LengthScales {
        epsilon,
        epsilon_sup,
        epsilon_sup_bound: bound,
        ell_k,
        lam1,
        lam2,
        lam3,
        lam4,
        ell_nsv,
        ell_nsv_from_bound: bound.map(|b| nsv_scale(nu, alpha, length, b).2),
        m2_scaling: m1
            .filter(|_| alpha > 0.0)
            .map(|m| m.powi(3) / (alpha * alpha * nu * nu * lambda1.powf(2.5))),
    }
}

/// Dimensionless `tau` (paired with integer `|j|`) as a physical length.
pub fn tau_to_physical(tau: f64, length: f64) -> f64 {
    tau * length / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> ScaleInputs {
        ScaleInputs {
            nu: 1.0,
            alpha: 1.0,
            length: 1.0,
            epsilon: 0.5,
            epsilon_sup: 1.0,
            m1: None,
            lambda1: 1.0,
        }
    }

    #[test]
    fn unit_case() {
        let s = length_scales(&unit());
        assert_eq!((s.ell_k, s.ell_nsv), (1.0, 1.0));
        assert_eq!([s.lam1, s.lam2, s.lam3, s.lam4], [1.0; 4]);
    }

    #[test]
    fn halving_viscosity() {
        let a = length_scales(&unit());
        let b = length_scales(&ScaleInputs { nu: 0.5, ..unit() });
        assert!((b.ell_k / a.ell_k - 2f64.powf(-0.75)).abs() < 1e-15);
        assert!((b.ell_nsv / a.ell_nsv - 0.125).abs() < 1e-15);
    }

    #[test]
    fn zero_flow_is_infinite() {
        let s = length_scales(&ScaleInputs {
            epsilon: 0.0,
            epsilon_sup: 0.0,
            ..unit()
        });
        assert!(s.ell_k.is_infinite() && s.ell_nsv.is_infinite());
    }

    #[test]
    fn alpha_is_the_minimum_below_length() {
        let s = length_scales(&ScaleInputs {
            alpha: 0.3,
            length: 2.0,
            ..unit()
        });
        assert_eq!(s.ell_nsv, s.lam2);
        assert!(s.lam2 <= s.lam4 && s.lam4 <= s.lam1);
    }

    #[test]
    fn tau_conversion() {
        assert_eq!(tau_to_physical(1.0, 2.0 * PI), 1.0);
    }
}
