//! The bilinear term `B(u, v) = P((u . grad) v)`.
//!
//! `bilinear` evaluates it pseudo-spectrally: both inputs are truncated to
//! the two-thirds set, the advection product is formed on the grid, and the
//! result is truncated again and Leray-projected. `bilinear_oracle` computes
//! the same quantity by direct convolution and is only meant for small
//! lattices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{NsvError, Result};
use crate::gevrey::verify_gevrey_inequality;
use crate::spectral::{
    component, dot_wave, forward_pair, inverse_pair, project_mode, random_divfree_field,
    SpectralField, Vec3c, WaveLattice, ZERO3,
};

/// Largest resolution accepted by [`bilinear_oracle`].
pub const ORACLE_MAX_N: usize = 16;

fn inverse_many(lattice: &WaveLattice, spectra: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
    let zero = vec![Complex64::new(0.0, 0.0); lattice.len()];
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let b = pair.get(1).unwrap_or(&zero);
        let (x, y) = inverse_pair(lattice, &pair[0], b);
        out.push(x);
        if pair.len() == 2 {
            out.push(y);
        }
    }
    out
}

/// Pseudo-spectral `B(u, v)` with two-thirds dealiasing.
pub fn bilinear(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let lat = u.lattice();
    lat.check_same(v.lattice())?;
    let u = u.dealiased();
    let v = v.dealiased();
    if u.is_zero() || v.is_zero() {
        return Ok(SpectralField::zeros(lat));
    }
    let kappa = lat.kappa();

    let mut spectra: Vec<Vec<Complex64>> = (0..3).map(|c| component(u.coeffs(), c)).collect();
    for c in 0..3 {
        for d in 0..3 {
            let grad = v
                .coeffs()
                .iter()
                .enumerate()
                .map(|(idx, vc)| {
                    let jd = lat.wavevector(idx)[d] as f64;
                    vc[c] * Complex64::new(0.0, kappa * jd)
                })
                .collect();
            spectra.push(grad);
        }
    }
    let phys = inverse_many(lat, &spectra);
    let (uf, grads) = phys.split_at(3);

    let len = lat.len();
    let product: Vec<Vec<f64>> = (0..3)
        .map(|c| {
            (0..len)
                .map(|x| {
                    uf[0][x] * grads[3 * c][x]
                        + uf[1][x] * grads[3 * c + 1][x]
                        + uf[2][x] * grads[3 * c + 2][x]
                })
                .collect()
        })
        .collect();
    let (w0, w1) = forward_pair(lat, &product[0], &product[1]);
    let (w2, _) = forward_pair(lat, &product[2], &vec![0.0; len]);

    let coeffs = (0..len)
        .map(|idx| {
            if lat.is_retained(idx) {
                project_mode(lat.wavevector(idx), &[w0[idx], w1[idx], w2[idx]])
            } else {
                ZERO3
            }
        })
        .collect();
    Ok(SpectralField::from_coeffs_unchecked(lat, coeffs))
}

/// Direct convolution `B_k = P(sum_{p+q=k} i (u_p . kappa q) v_q)` over
/// retained modes.
pub fn bilinear_oracle(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    let lat = u.lattice();
    lat.check_same(v.lattice())?;
    if lat.n() > ORACLE_MAX_N {
        return Err(NsvError::TooLarge {
            n: lat.n(),
            limit: ORACLE_MAX_N,
        });
    }
    let kappa = lat.kappa();
    let support = |f: &SpectralField| -> Vec<(usize, Vec3c)> {
        lat.indices_retained()
            .map(|i| (i, f.coeffs()[i]))
            .filter(|(_, c)| c.iter().any(|z| z.norm_sqr() > 0.0))
            .collect()
    };
    let us = support(u);
    let vs = support(v);
    let mut acc = vec![ZERO3; lat.len()];
    for &(pi, up) in &us {
        let p = lat.wavevector(pi);
        for &(qi, vq) in &vs {
            let q = lat.wavevector(qi);
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            let Some(ki) = lat.index_of(k) else { continue };
            if !lat.is_retained(ki) {
                continue;
            }
            let s = dot_wave(q, &up) * Complex64::new(0.0, kappa);
            for c in 0..3 {
                acc[ki][c] += s * vq[c];
            }
        }
    }
    let coeffs = acc
        .iter()
        .enumerate()
        .map(|(idx, w)| project_mode(lat.wavevector(idx), w))
        .collect();
    Ok(SpectralField::from_coeffs_unchecked(lat, coeffs))
}

/// Where a set of inequality constants came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstantSource {
    Empirical,
    Manual,
}

impl ConstantSource {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstantSource::Empirical => "empirical",
            ConstantSource::Manual => "manual",
        }
    }
}

/// Constants of the nonlinear and Gevrey estimates.
///
/// `c` belongs to the trilinear estimate `|<B(u,v),w>| <= c l1^{-3/4} |u|^{1/2} ||u||^{1/2} ||v|| ||w||`,
/// `c1`, `c2`, `cm` to the three `B(u,u)` estimates, `gevrey_c1` to the
/// Gevrey-space trilinear estimate. `c4`, `c5` enter the high-mode
/// boundedness condition and `c6` the informational `M2` scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct Constants {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    pub cm: f64,
    pub gevrey_c1: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub source: ConstantSource,
}

impl Constants {
    pub fn unit() -> Self {
        Self {
            c: 1.0,
            c1: 1.0,
            c2: 1.0,
            cm: 1.0,
            gevrey_c1: 1.0,
            c4: 1.0,
            c5: 1.0,
            c6: 1.0,
            source: ConstantSource::Manual,
        }
    }

    /// Collecting the high-mode energy inequality into
    /// `(a^2 nu l^{1/2} l1^{1/2} d2)^3 > C4 |f^|^2/(nu l) + C5 M1^3 M2/(nu l1^{3/2})`
    /// gives `C4 = 1250 C1^2` and `C5 = 1250 e^4 C1^4`.
    pub fn derived_c4(gevrey_c1: f64) -> f64 {
        1250.0 * gevrey_c1.powi(2)
    }

    pub fn derived_c5(gevrey_c1: f64) -> f64 {
        1250.0 * 4f64.exp() * gevrey_c1.powi(4)
    }

    /// Measured maxima inflated by `safety`.
    pub fn from_ratios(r: &InequalityRatios, safety: f64) -> Self {
        let g = r.gevrey_c1 * safety;
        Self {
            c: r.c * safety,
            c1: r.c1 * safety,
            c2: r.c2 * safety,
            cm: r.cm.iter().map(|&(_, v)| v).fold(0.0, f64::max) * safety,
            gevrey_c1: g,
            c4: Self::derived_c4(g),
            c5: Self::derived_c5(g),
            c6: 1.0,
            source: ConstantSource::Empirical,
        }
    }
}

/// Maximum observed left/right ratio for each inequality (constant set to 1).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InequalityRatios {
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    /// `(m, ratio)` for the `|B(u,u)|_m` estimate.
    pub cm: Vec<(usize, f64)>,
    pub gevrey_c1: f64,
}

impl InequalityRatios {
    fn absorb(&mut self, other: &InequalityRatios) {
        self.c = self.c.max(other.c);
        self.c1 = self.c1.max(other.c1);
        self.c2 = self.c2.max(other.c2);
        self.gevrey_c1 = self.gevrey_c1.max(other.gevrey_c1);
        if self.cm.is_empty() {
            self.cm = other.cm.clone();
        } else {
            for (a, b) in self.cm.iter_mut().zip(&other.cm) {
                a.1 = a.1.max(b.1);
            }
        }
    }

    fn all(&self) -> Vec<f64> {
        let mut v = vec![self.c, self.c1, self.c2, self.gevrey_c1];
        v.extend(self.cm.iter().map(|&(_, r)| r));
        v
    }

    pub fn all_finite_positive(&self) -> bool {
        self.all().iter().all(|r| r.is_finite() && *r > 0.0)
    }

    /// True if every ratio here is at most `factor` times the one in `bound`.
    pub fn within(&self, bound: &InequalityRatios, factor: f64) -> bool {
        self.all()
            .iter()
            .zip(bound.all())
            .all(|(a, b)| *a <= factor * b)
    }
}

#[derive(Clone, Debug)]
pub struct ConstantsReport {
    pub samples: usize,
    pub training: InequalityRatios,
    pub validation: InequalityRatios,
    /// Validation maxima stay below the training maxima.
    pub holds_on_validation: bool,
}

/// Ratios for a single random triple `(u, v, w)`.
pub fn inequality_ratios(
    u: &SpectralField,
    v: &SpectralField,
    w: &SpectralField,
    m_max: usize,
    tau: f64,
) -> Result<InequalityRatios> {
    let l1 = u.lattice().lambda1();
    let ratio = |lhs: f64, rhs: f64| if rhs > 0.0 { lhs / rhs } else { 0.0 };
    let buv = bilinear(u, v)?;
    let buu = bilinear(u, u)?;
    let (u0, u1, u32_, u2) = (
        u.sobolev_norm(0.0),
        u.sobolev_norm(1.0),
        u.sobolev_norm(1.5),
        u.sobolev_norm(2.0),
    );
    let c = ratio(
        buv.inner(w).abs(),
        l1.powf(-0.75) * (u0 * u1).sqrt() * v.sobolev_norm(1.0) * w.sobolev_norm(1.0),
    );
    let c1 = ratio(buu.sobolev_norm(-0.5), l1.powf(-0.75) * u1 * u1);
    let c2 = ratio(buu.sobolev_norm(0.0), l1.powf(-0.75) * u1 * u32_);
    let cm = (1..=m_max)
        .map(|m| {
            let rhs = l1.powf(-0.875) * u1.powf(0.25) * u2.powf(0.75)
                * u.sobolev_norm(m as f64 + 1.0);
            (m, ratio(buu.sobolev_norm(m as f64), rhs))
        })
        .collect();
    let gevrey_c1 = verify_gevrey_inequality(u, v, w, tau)?.ratio;
    Ok(InequalityRatios {
        c,
        c1,
        c2,
        cm,
        gevrey_c1,
    })
}

fn sample_ratios(
    lattice: &WaveLattice,
    rng: &mut ChaCha8Rng,
    m_max: usize,
    tau: f64,
) -> Result<InequalityRatios> {
    let field = |rng: &mut ChaCha8Rng| {
        let decay: f64 = rng.random_range(0.05..1.5);
        let power: f64 = rng.random_range(0.0..3.0);
        random_divfree_field(lattice, rng.random(), move |k| {
            k.powf(-power) * (-decay * k).exp()
        })
    };
    let u = field(rng);
    let v = field(rng);
    let w = field(rng);
    inequality_ratios(&u, &v, &w, m_max, tau)
}

/// Measures the smallest constants for which the nonlinear estimates hold
/// over `samples` random fields, then checks them on a fresh set of the same
/// size.
pub fn estimate_inequality_constants(
    lattice: &WaveLattice,
    samples: usize,
    seed: u64,
    m_max: usize,
    tau: f64,
) -> Result<ConstantsReport> {
    if samples == 0 {
        return Err(NsvError::InvalidInput("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut training = InequalityRatios::default();
    for _ in 0..samples {
        training.absorb(&sample_ratios(lattice, &mut rng, m_max, tau)?);
    }
    let mut validation = InequalityRatios::default();
    for _ in 0..samples {
        validation.absorb(&sample_ratios(lattice, &mut rng, m_max, tau)?);
    }
    let holds_on_validation = validation.within(&training, 1.0);
    Ok(ConstantsReport {
        samples,
        training,
        validation,
        holds_on_validation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_arguments_give_zero() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let u = random_divfree_field(&lat, 1, |_| 1.0);
        let z = SpectralField::zeros(&lat);
        assert!(bilinear(&z, &u).unwrap().is_zero());
        assert!(bilinear(&u, &z).unwrap().is_zero());
    }

    #[test]
    fn two_mode_interaction_by_hand() {
        // u = a e^{i x} + c.c. with a = (0, 1, 0); v = b e^{i y} + c.c. with b = (1, 0, 0).
        // Only q = +-(0,1,0) carries a_y, so the products land on (+-1, +-1, 0).
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let zero = c(0.0, 0.0);
        let u = SpectralField::from_modes(&lat, &[([1, 0, 0], [zero, c(1.0, 0.0), zero])]).unwrap();
        let v = SpectralField::from_modes(&lat, &[([0, 1, 0], [c(1.0, 0.0), zero, zero])]).unwrap();
        let b = bilinear(&u, &v).unwrap();
        let o = bilinear_oracle(&u, &v).unwrap();
        // raw term at (1,1,0): i (a . q) b with q = (0,1,0): i * 1 * (1,0,0)
        // projected: (i, 0, 0) - (i/2)(1,1,0) = (i/2, -i/2, 0)
        let want = [c(0.0, 0.5), c(0.0, -0.5), zero];
        let got = b.coeff([1, 1, 0]).unwrap();
        for k in 0..3 {
            assert!((got[k] - want[k]).norm() < 1e-14);
        }
        // (1,-1,0): q = (0,-1,0) gives -i (1,0,0); projected onto (1,-1,0): (-i/2, -i/2, 0)
        let got = b.coeff([1, -1, 0]).unwrap();
        let want = [c(0.0, -0.5), c(0.0, -0.5), zero];
        for k in 0..3 {
            assert!((got[k] - want[k]).norm() < 1e-14);
        }
        assert!(b.max_abs_diff(&o) < 1e-14);
    }

    #[test]
    fn beltrami_mode_self_interaction_vanishes() {
        // ABC-type single wavevector helical mode: curl u = |k| u, so (u.grad)u is a gradient.
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let zero = c(0.0, 0.0);
        let u = SpectralField::from_modes(
            &lat,
            &[([0, 0, 1], [c(1.0, 0.0), c(0.0, -1.0), zero])],
        )
        .unwrap();
        assert!(bilinear(&u, &u).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn oracle_refuses_large_lattices() {
        let lat = WaveLattice::new(32, 1.0).unwrap();
        let z = SpectralField::zeros(&lat);
        assert!(matches!(
            bilinear_oracle(&z, &z),
            Err(NsvError::TooLarge { .. })
        ));
    }

    #[test]
    fn lattice_mismatch_rejected() {
        let a = SpectralField::zeros(&WaveLattice::new(8, 1.0).unwrap());
        let b = SpectralField::zeros(&WaveLattice::new(8, 2.0).unwrap());
        assert!(bilinear(&a, &b).is_err());
    }

    #[test]
    fn symmetric_part_matches_oracle() {
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let u = random_divfree_field(&lat, 3, |k| 1.0 / k);
        let v = random_divfree_field(&lat, 4, |k| 1.0 / k);
        let s = &bilinear(&u, &v).unwrap() + &bilinear(&v, &u).unwrap();
        let so = &bilinear_oracle(&u, &v).unwrap() + &bilinear_oracle(&v, &u).unwrap();
        assert!(s.max_abs_diff(&so) < 1e-13);
    }

    #[test]
    fn single_mode_c2_ratio_closed_form() {
        // Two perpendicular modes so B(u,u) != 0.
        let lat = WaveLattice::new(8, 2.0 * PI).unwrap();
        let zero = c(0.0, 0.0);
        let u = SpectralField::from_modes(
            &lat,
            &[
                ([1, 0, 0], [zero, c(1.0, 0.0), zero]),
                ([0, 1, 0], [c(1.0, 0.0), zero, zero]),
            ],
        )
        .unwrap();
        let b = bilinear(&u, &u).unwrap();
        let o = bilinear_oracle(&u, &u).unwrap();
        assert!(b.max_abs_diff(&o) < 1e-14);
        let r = inequality_ratios(&u, &u, &u, 1, 0.0).unwrap();
        let want = b.sobolev_norm(0.0) / (u.sobolev_norm(1.0) * u.sobolev_norm(1.5));
        assert!((r.c2 - want).abs() < 1e-14);
        assert!(r.c2 > 0.0);
    }
}
