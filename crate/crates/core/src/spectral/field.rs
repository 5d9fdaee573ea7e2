use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::lattice::{WaveLattice, Wavevector};
use crate::error::{NsvError, Result};

/// One complex 3-vector coefficient `u_j`.
pub type Vec3c = [Complex64; 3];

pub const ZERO3: Vec3c = [Complex64::new(0.0, 0.0); 3];

/// Relative tolerance used when validating externally supplied coefficients.
pub const VALIDATION_TOL: f64 = 1e-10;

/// Fourier coefficients of a real, divergence-free, zero-mean velocity field.
///
/// Coefficients equal the Fourier-series coefficients of the field, so
/// `u(x) = sum_j u_j exp(i (2 pi / L) j . x)`.
#[derive(Clone, Debug)]
pub struct SpectralField {
    lattice: WaveLattice,
    coeffs: Vec<Vec3c>,
}

pub(crate) fn dot_wave(j: Wavevector, u: &Vec3c) -> Complex64 {
    u[0] * j[0] as f64 + u[1] * j[1] as f64 + u[2] * j[2] as f64
}

pub(crate) fn norm_sq3(u: &Vec3c) -> f64 {
    u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()
}

fn conj3(u: &Vec3c) -> Vec3c {
    [u[0].conj(), u[1].conj(), u[2].conj()]
}

/// Removes the component of `u` along `j`.
pub(crate) fn project_mode(j: Wavevector, u: &Vec3c) -> Vec3c {
    let sq = (j[0] * j[0] + j[1] * j[1] + j[2] * j[2]) as f64;
    if sq == 0.0 {
        return ZERO3;
    }
    let d = dot_wave(j, u) / sq;
    [
        u[0] - d * j[0] as f64,
        u[1] - d * j[1] as f64,
        u[2] - d * j[2] as f64,
    ]
}

impl SpectralField {
    pub fn zeros(lattice: &WaveLattice) -> Self {
        Self {
            lattice: lattice.clone(),
            coeffs: vec![ZERO3; lattice.len()],
        }
    }

    /// Wraps coefficients that are already known to satisfy the field invariants.
    pub(crate) fn from_coeffs_unchecked(lattice: &WaveLattice, coeffs: Vec<Vec3c>) -> Self {
        debug_assert_eq!(coeffs.len(), lattice.len());
        Self {
            lattice: lattice.clone(),
            coeffs,
        }
    }

    /// Builds a field from raw coefficients, rejecting anything that is not
    /// Hermitian, zero-mean and divergence-free.
    pub fn from_coeffs(lattice: &WaveLattice, coeffs: Vec<Vec3c>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(NsvError::SizeMismatch {
                expected: lattice.len(),
                got: coeffs.len(),
            });
        }
        let field = Self::from_coeffs_unchecked(lattice, coeffs);
        field.check_invariants(VALIDATION_TOL)?;
        Ok(field)
    }

    /// Sets the listed modes (and their conjugate partners). Each `u_j` must
    /// already be orthogonal to `j`.
    pub fn from_modes(lattice: &WaveLattice, modes: &[(Wavevector, Vec3c)]) -> Result<Self> {
        let mut coeffs = vec![ZERO3; lattice.len()];
        for &(j, u) in modes {
            let idx = lattice.index_of(j).ok_or_else(|| {
                NsvError::InvalidInput(format!("wavevector {j:?} is outside the lattice"))
            })?;
            if idx == 0 {
                return Err(NsvError::InvalidInput("the zero mode must stay zero".into()));
            }
            coeffs[idx] = u;
            coeffs[lattice.negated(idx)] = conj3(&u);
        }
        Self::from_coeffs(lattice, coeffs)
    }

    /// Leray projection of an arbitrary Hermitian coefficient lattice.
    ///
    /// Nyquist-plane slots (outside the lattice) and the zero mode are cleared.
    pub fn leray_project(lattice: &WaveLattice, mut raw: Vec<Vec3c>) -> Result<Self> {
        if raw.len() != lattice.len() {
            return Err(NsvError::SizeMismatch {
                expected: lattice.len(),
                got: raw.len(),
            });
        }
        check_hermitian(lattice, &raw, VALIDATION_TOL)?;
        for (idx, u) in raw.iter_mut().enumerate() {
            *u = if lattice.in_lattice(idx) {
                project_mode(lattice.wavevector(idx), u)
            } else {
                ZERO3
            };
        }
        Ok(Self::from_coeffs_unchecked(lattice, raw))
    }

    pub fn lattice(&self) -> &WaveLattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Vec3c] {
        &self.coeffs
    }

    #[cfg(test)]
    pub(crate) fn coeffs_mut(&mut self) -> &mut [Vec3c] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Vec3c> {
        self.coeffs
    }

    pub fn coeff(&self, j: Wavevector) -> Option<Vec3c> {
        self.lattice.index_of(j).map(|i| self.coeffs[i])
    }

    /// Validates Hermitian symmetry, zero mean, divergence-freeness and empty
    /// Nyquist planes, to tolerance `tol` relative to the largest coefficient.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let lat = &self.lattice;
        if self.coeffs.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(NsvError::InvalidInput("non-finite coefficient".into()));
        }
        check_hermitian(lat, &self.coeffs, tol)?;
        if norm_sq3(&self.coeffs[0]) != 0.0 {
            return Err(NsvError::InvalidInput("zero mode is not zero".into()));
        }
        let scale = self.coeffs.iter().map(|u| norm_sq3(u).sqrt()).fold(0.0, f64::max);
        for (idx, u) in self.coeffs.iter().enumerate() {
            let mag = norm_sq3(u).sqrt();
            if mag == 0.0 {
                continue;
            }
            if !lat.in_lattice(idx) {
                return Err(NsvError::InvalidInput(
                    "nonzero coefficient on a Nyquist plane".into(),
                ));
            }
            let j = lat.wavevector(idx);
            if dot_wave(j, u).norm() > tol * lat.wave_norm(idx) * scale {
                return Err(NsvError::InvalidInput(format!(
                    "mode {j:?} is not divergence-free"
                )));
            }
        }
        Ok(())
    }

    /// Largest `|j . u_j| / (|j| |u_j|)` over nonzero modes.
    pub fn max_divergence_ratio(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter_map(|(idx, u)| {
                let mag = norm_sq3(u).sqrt();
                (mag > 0.0).then(|| {
                    dot_wave(self.lattice.wavevector(idx), u).norm()
                        / (self.lattice.wave_norm(idx) * mag)
                })
            })
            .fold(0.0, f64::max)
    }

    /// Re-applies the Leray projection; a no-op on valid fields up to round-off.
    pub fn project(&self) -> Self {
        self.map_modes(|idx, u| {
            if self.lattice.in_lattice(idx) {
                project_mode(self.lattice.wavevector(idx), u)
            } else {
                ZERO3
            }
        })
    }

    /// Two-thirds rule truncation.
    pub fn dealiased(&self) -> Self {
        self.map_modes(|idx, u| if self.lattice.is_retained(idx) { *u } else { ZERO3 })
    }

    pub fn is_dealiased(&self) -> bool {
        self.coeffs
            .iter()
            .enumerate()
            .all(|(idx, u)| self.lattice.is_retained(idx) || norm_sq3(u) == 0.0)
    }

    /// `A^p u`: multiplies mode `j` by `((2 pi / L)^2 |j|^2)^p`.
    pub fn stokes_apply(&self, p: f64) -> Self {
        self.map_modes(|idx, u| {
            if idx == 0 || self.lattice.wave_sq(idx) == 0 {
                return ZERO3;
            }
            let f = self.lattice.eigenvalue(idx).powf(p);
            [u[0] * f, u[1] * f, u[2] * f]
        })
    }

    /// `|u|_s = (sum_j |u_j|^2 |j|^{2s})^{1/2}` on the integer lattice.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.weighted_norm_sq(|idx| (self.lattice.wave_sq(idx) as f64).powf(s))
            .sqrt()
    }

    /// `sum_j w(j) |u_j|^2` in fixed index order.
    pub fn weighted_norm_sq<W: Fn(usize) -> f64>(&self, weight: W) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(idx, u)| *idx != 0 && norm_sq3(u) > 0.0)
            .map(|(idx, u)| weight(idx) * norm_sq3(u))
            .sum()
    }

    /// `|A^{1/2} u|^2 = sum_j lambda_j |u_j|^2` with physical eigenvalues.
    pub fn dirichlet_sq(&self) -> f64 {
        self.weighted_norm_sq(|idx| self.lattice.eigenvalue(idx))
    }

    /// Real inner product `sum_j u_j . conj(v_j)`.
    pub fn inner(&self, other: &Self) -> f64 {
        self.inner_weighted(other, |_| 1.0)
    }

    pub fn inner_weighted<W: Fn(usize) -> f64>(&self, other: &Self, weight: W) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .enumerate()
            .map(|(idx, (a, b))| {
                let s: f64 = (0..3).map(|c| (a[c] * b[c].conj()).re).sum();
                if s == 0.0 {
                    0.0
                } else {
                    weight(idx) * s
                }
            })
            .sum()
    }

    pub fn map_modes<F: Fn(usize, &Vec3c) -> Vec3c>(&self, f: F) -> Self {
        let coeffs = self.coeffs.iter().enumerate().map(|(i, u)| f(i, u)).collect();
        Self::from_coeffs_unchecked(&self.lattice, coeffs)
    }

    /// Multiplies each mode by a real per-slot factor.
    pub fn scale_modes<F: Fn(usize) -> f64>(&self, f: F) -> Self {
        self.map_modes(|i, u| {
            let s = f(i);
            [u[0] * s, u[1] * s, u[2] * s]
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.scale_modes(|_| s)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s])
            .collect();
        Self::from_coeffs_unchecked(&self.lattice, coeffs)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .flat_map(|(a, b)| (0..3).map(move |c| (a[c] - b[c]).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|u| u.iter().map(|c| c.norm()))
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .flatten()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|u| norm_sq3(u) == 0.0)
    }
}

fn check_hermitian(lattice: &WaveLattice, coeffs: &[Vec3c], tol: f64) -> Result<()> {
    let scale = coeffs
        .iter()
        .map(|u| norm_sq3(u).sqrt())
        .fold(0.0, f64::max);
    for idx in 0..coeffs.len() {
        if !lattice.in_lattice(idx) {
            continue;
        }
        let partner = &coeffs[lattice.negated(idx)];
        let u = &coeffs[idx];
        let gap: f64 = (0..3)
            .map(|c| (u[c] - partner[c].conj()).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if gap > tol * scale {
            return Err(NsvError::InvalidInput(format!(
                "Hermitian symmetry broken at {:?}",
                lattice.wavevector(idx)
            )));
        }
    }
    Ok(())
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn lat8() -> WaveLattice {
        WaveLattice::new(8, 2.0 * PI).unwrap()
    }

    #[test]
    fn gradient_field_is_annihilated() {
        let lat = lat8();
        let raw: Vec<Vec3c> = (0..lat.len())
            .map(|i| {
                let j = lat.wavevector(i);
                // i * j is Hermitian: conj(i*j) = -i*j = i*(-j)
                let s = Complex64::new(0.0, 0.7);
                [s * j[0] as f64, s * j[1] as f64, s * j[2] as f64]
            })
            .collect();
        let p = SpectralField::leray_project(&lat, raw).unwrap();
        assert!(p.max_abs() < 1e-15);
    }

    #[test]
    fn single_mode_projection_by_hand() {
        let lat = lat8();
        let mut raw = vec![ZERO3; lat.len()];
        let idx = lat.index_of([1, 0, 0]).unwrap();
        raw[idx] = [c(1.0), c(1.0), c(0.0)];
        raw[lat.negated(idx)] = [c(1.0), c(1.0), c(0.0)];
        let p = SpectralField::leray_project(&lat, raw).unwrap();
        assert_eq!(p.coeff([1, 0, 0]).unwrap(), [c(0.0), c(1.0), c(0.0)]);
        assert_eq!(p.coeff([-1, 0, 0]).unwrap(), [c(0.0), c(1.0), c(0.0)]);
    }

    #[test]
    fn broken_symmetry_is_rejected() {
        let lat = lat8();
        let mut raw = vec![ZERO3; lat.len()];
        raw[lat.index_of([1, 2, 0]).unwrap()] = [c(0.0), c(0.0), c(1.0)];
        assert!(matches!(
            SpectralField::leray_project(&lat, raw),
            Err(NsvError::InvalidInput(_))
        ));
    }

    #[test]
    fn stokes_eigenvalue_at_unit_box() {
        let lat = lat8();
        let u = SpectralField::from_modes(&lat, &[([1, 0, 0], [c(0.0), c(1.0), c(0.0)])]).unwrap();
        let au = u.stokes_apply(1.0);
        assert!((au.coeff([1, 0, 0]).unwrap()[1] - c(1.0)).norm() < 1e-15);
        assert!(u.stokes_apply(0.0).max_abs_diff(&u) == 0.0);
    }

    #[test]
    fn sobolev_norms_by_direct_summation() {
        let lat = lat8();
        let u = SpectralField::from_modes(
            &lat,
            &[
                ([1, 0, 0], [c(0.0), c(1.0), c(0.0)]),
                ([0, 2, 0], [c(0.0), c(0.0), c(1.0)]),
            ],
        )
        .unwrap();
        assert!((u.sobolev_norm(1.0) - 10f64.sqrt()).abs() < 1e-14);
        let single =
            SpectralField::from_modes(&lat, &[([0, 0, 1], [c(1.0), c(0.0), c(0.0)])]).unwrap();
        for s in [-1.5, -0.5, 0.0, 1.0, 2.5] {
            assert!((single.sobolev_norm(s) - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn from_modes_rejects_compressible_mode() {
        let lat = lat8();
        let r = SpectralField::from_modes(&lat, &[([1, 0, 0], [c(1.0), c(0.0), c(0.0)])]);
        assert!(r.is_err());
    }

    #[test]
    fn round_off_modes_are_judged_against_the_field() {
        // A projected gradient leaves a residue that is tiny but not
        // solenoidal relative to itself.
        let lat = lat8();
        let big = ([0, 1, 0], [c(1.0), c(0.0), c(0.0)]);
        let dust = ([2, 2, 0], [c(1e-17), c(3e-17), c(0.0)]);
        assert!(SpectralField::from_modes(&lat, &[big, dust]).is_ok());
        let lump = ([2, 2, 0], [c(1e-3), c(3e-3), c(0.0)]);
        assert!(SpectralField::from_modes(&lat, &[big, lump]).is_err());
    }
}
