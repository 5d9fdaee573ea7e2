use super::FluidParams;
use crate::error::{NsvError, Result};
use crate::spectral::{SpectralField, WaveLattice};

/// `(1 - e^{-a}) / a` and `(a - 1 + e^{-a}) / a^2`, series near zero.
fn phi12(a: f64) -> (f64, f64) {
    if a < 1e-4 {
        (1.0 - a / 2.0 + a * a / 6.0, 0.5 - a / 6.0 + a * a / 24.0)
    } else {
        let em = (-a).exp_m1();
        (-em / a, (a + em) / (a * a))
    }
}

/// Exact solution of `z_t + nu A z + alpha^2 A z_t = g` over one interval of
/// length `dt` when `g` varies linearly from `g0` to `g1`.
pub fn advance_linear(
    fluid: &FluidParams,
    z: &SpectralField,
    g0: &SpectralField,
    g1: &SpectralField,
    dt: f64,
) -> SpectralField {
    let lat = z.lattice();
    let coeffs = (0..lat.len())
        .map(|i| {
            let (zi, a0, a1) = (&z.coeffs()[i], &g0.coeffs()[i], &g1.coeffs()[i]);
            if i == 0 || lat.wave_sq(i) == 0 {
                return [Default::default(); 3];
            }
            let l = lat.eigenvalue(i);
            let s = fluid.voight_scale(l);
            let a = fluid.decay_rate(l) * dt;
            let e = (-a).exp();
            let (p1, p2) = phi12(a);
            let (c0, c1) = (dt * s * (p1 - p2), dt * s * p2);
            [
                zi[0] * e + a0[0] * c0 + a1[0] * c1,
                zi[1] * e + a0[1] * c0 + a1[1] * c1,
                zi[2] * e + a0[2] * c0 + a1[2] * c1,
            ]
        })
        .collect();
    SpectralField::from_coeffs_unchecked(lat, coeffs)
}

/// Exact free decay `w_j(t) = w_j(0) exp(-nu l_j t / (1 + alpha^2 l_j))`.
pub fn homogeneous_decay(w0: &SpectralField, fluid: &FluidParams, t: f64) -> SpectralField {
    let lat = w0.lattice();
    w0.scale_modes(|i| (-fluid.decay_rate(lat.eigenvalue(i)) * t).exp())
}

#[derive(Clone, Debug)]
pub struct LinearVoigtSolution {
    pub times: Vec<f64>,
    pub states: Vec<SpectralField>,
    pub s: f64,
    /// `sup_t |z(t)|_s`.
    pub sup_norm: f64,
    /// `sup_t |g(t)|_{s-2}` over the sample points.
    pub sup_rhs_norm: f64,
    /// `sup |g|_{s-2} / (alpha nu sqrt(d0))`; undefined for `alpha = 0`.
    pub bound: Option<f64>,
}

impl LinearVoigtSolution {
    pub fn within_bound(&self) -> bool {
        self.bound.is_none_or(|b| self.sup_norm <= b * (1.0 + 1e-12))
    }
}

/// Solves `z_t + nu A z + alpha^2 A z_t = g(t)`, `z(0) = 0` on `[0, horizon]`,
/// sampling `g` every `dt` and treating it as piecewise linear in between.
pub fn solve_linear_voigt<G>(
    lattice: &WaveLattice,
    fluid: &FluidParams,
    g: G,
    s: f64,
    horizon: f64,
    dt: f64,
) -> Result<LinearVoigtSolution>
where
    G: Fn(f64) -> SpectralField,
{
    if !(horizon > 0.0) {
        return Err(NsvError::InvalidInput(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt > 0.0) {
        return Err(NsvError::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let steps = (horizon / dt).ceil() as usize;
    let h = horizon / steps as f64;
    let mut z = SpectralField::zeros(lattice);
    let mut g_prev = g(0.0);
    lattice.check_same(g_prev.lattice())?;
    let mut times = vec![0.0];
    let mut sup_rhs = g_prev.sobolev_norm(s - 2.0);
    let mut sup_norm = 0.0f64;
    let mut states = vec![z.clone()];
    for k in 1..=steps {
        let t = k as f64 * h;
        let g_next = g(t);
        z = advance_linear(fluid, &z, &g_prev, &g_next, h);
        sup_rhs = sup_rhs.max(g_next.sobolev_norm(s - 2.0));
        sup_norm = sup_norm.max(z.sobolev_norm(s));
        times.push(t);
        states.push(z.clone());
        g_prev = g_next;
    }
    let bound = (fluid.alpha > 0.0).then(|| {
        sup_rhs / (fluid.alpha * fluid.nu * fluid.d0(lattice.lambda1()).sqrt())
    });
    Ok(LinearVoigtSolution {
        times,
        states,
        s,
        sup_norm,
        sup_rhs_norm: sup_rhs,
        bound,
    })
}
