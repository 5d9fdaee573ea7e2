//! Discrete Fourier transform pair between coefficients and grid samples.
//!
//! The forward transform carries the `1/N^3` factor, so spectral coefficients
//! equal Fourier-series coefficients. Grid point `(a, b, c)` sits at
//! `x = (a, b, c) L / N`.

use num_complex::Complex64;
use rayon::prelude::*;

use super::field::{SpectralField, Vec3c, ZERO3};
use super::lattice::WaveLattice;
use crate::error::{NsvError, Result};

/// Real samples of a 3-component field on the `N^3` grid, in the same
/// row-major `(x, y, z)` order as the coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    pub n: usize,
    pub comps: [Vec<f64>; 3],
}

impl PhysicalField {
    pub fn zeros(n: usize) -> Self {
        let len = n * n * n;
        Self {
            n,
            comps: [vec![0.0; len], vec![0.0; len], vec![0.0; len]],
        }
    }

    /// Builds samples by evaluating `f` at every grid point of a box of side `length`.
    pub fn from_fn<F: Fn([f64; 3]) -> [f64; 3]>(n: usize, length: f64, f: F) -> Self {
        let mut out = Self::zeros(n);
        let h = length / n as f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let v = f([a as f64 * h, b as f64 * h, c as f64 * h]);
                    let idx = (a * n + b) * n + c;
                    for (k, comp) in out.comps.iter_mut().enumerate() {
                        comp[idx] = v[k];
                    }
                }
            }
        }
        out
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.comps[0].len())
            .map(|i| {
                (self.comps[0][i].powi(2) + self.comps[1][i].powi(2) + self.comps[2][i].powi(2))
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Grid mean of `|u(x)|^2`.
    pub fn mean_square(&self) -> f64 {
        let len = self.comps[0].len() as f64;
        self.comps
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / len
    }
}

fn transpose_square(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in 0..n {
            dst[c * n + r] = src[r * n + c];
        }
    }
}

/// In-place unnormalized 3D FFT over the `N^3` array.
pub(crate) fn fft3(lattice: &WaveLattice, data: &mut [Complex64], inverse: bool) {
    let n = lattice.n();
    let plane = n * n;
    debug_assert_eq!(data.len(), plane * n);
    let fft = if inverse {
        lattice.fft_inverse()
    } else {
        lattice.fft_forward()
    };

    // z: contiguous rows
    data.par_chunks_mut(plane).for_each(|slab| fft.process(slab));

    // y: transpose each x-slab so y becomes contiguous
    data.par_chunks_mut(plane).for_each(|slab| {
        let mut tmp = vec![Complex64::new(0.0, 0.0); plane];
        transpose_square(slab, &mut tmp, n);
        fft.process(&mut tmp);
        transpose_square(&tmp, slab, n);
    });

    // x: view as [n][n^2] and bring x to the fast axis
    let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
    t.par_chunks_mut(n).enumerate().for_each(|(m, row)| {
        for (a, v) in row.iter_mut().enumerate() {
            *v = data[a * plane + m];
        }
    });
    t.par_chunks_mut(plane).for_each(|chunk| fft.process(chunk));
    data.par_chunks_mut(plane).enumerate().for_each(|(a, slab)| {
        for (m, v) in slab.iter_mut().enumerate() {
            *v = t[m * n + a];
        }
    });
}

/// Inverse-transforms two Hermitian scalar spectra with one complex FFT.
pub(crate) fn inverse_pair(
    lattice: &WaveLattice,
    a: &[Complex64],
    b: &[Complex64],
) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
    fft3(lattice, &mut buf, true);
    buf.iter().map(|z| (z.re, z.im)).unzip()
}

/// Forward-transforms two real sample arrays with one complex FFT, returning
/// normalized coefficients.
pub(crate) fn forward_pair(
    lattice: &WaveLattice,
    a: &[f64],
    b: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    fft3(lattice, &mut buf, false);
    let norm = 1.0 / lattice.len() as f64;
    let half = Complex64::new(0.5 * norm, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5 * norm);
    (0..buf.len())
        .map(|k| {
            let z = buf[k];
            let zn = buf[lattice.negated(k)].conj();
            ((z + zn) * half, (z - zn) * minus_half_i)
        })
        .unzip()
}

pub(crate) fn component(coeffs: &[Vec3c], c: usize) -> Vec<Complex64> {
    coeffs.iter().map(|u| u[c]).collect()
}

pub fn to_physical(u: &SpectralField) -> PhysicalField {
    let lat = u.lattice();
    let cs = u.coeffs();
    let (x, y) = inverse_pair(lat, &component(cs, 0), &component(cs, 1));
    let zero = vec![Complex64::new(0.0, 0.0); lat.len()];
    let (z, _) = inverse_pair(lat, &component(cs, 2), &zero);
    PhysicalField {
        n: lat.n(),
        comps: [x, y, z],
    }
}

/// Transforms samples back to a field. Non-solenoidal content is removed by
/// the Leray projection, so the round trip is exact only for fields that
/// came from `to_physical`.
pub fn to_spectral(lattice: &WaveLattice, samples: &PhysicalField) -> Result<SpectralField> {
    if samples.n != lattice.n() || samples.comps.iter().any(|c| c.len() != lattice.len()) {
        return Err(NsvError::SizeMismatch {
            expected: lattice.len(),
            got: samples.comps.iter().map(Vec::len).min().unwrap_or(0),
        });
    }
    let (x, y) = forward_pair(lattice, &samples.comps[0], &samples.comps[1]);
    let zero = vec![0.0; lattice.len()];
    let (z, _) = forward_pair(lattice, &samples.comps[2], &zero);
    let mut raw = vec![ZERO3; lattice.len()];
    for (k, slot) in raw.iter_mut().enumerate() {
        *slot = [x[k], y[k], z[k]];
    }
    SpectralField::leray_project(lattice, raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::random_divfree_field;
    use std::f64::consts::PI;

    #[test]
    fn zero_roundtrip() {
        let lat = WaveLattice::new(8, 1.0).unwrap();
        let p = to_physical(&SpectralField::zeros(&lat));
        assert!(p.comps.iter().flatten().all(|&v| v == 0.0));
        assert!(to_spectral(&lat, &p).unwrap().is_zero());
    }

    #[test]
    fn single_cosine_matches_closed_form() {
        // u = (0, cos(kappa (2x + z)), 0) has u_j = (0, 1/2, 0) at j = +-(2, 0, 1)
        let length = 3.0;
        let lat = WaveLattice::new(16, length).unwrap();
        let half = Complex64::new(0.5, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let u = SpectralField::from_modes(&lat, &[([2, 0, 1], [zero, half, zero])]).unwrap();
        let p = to_physical(&u);
        let kappa = 2.0 * PI / length;
        let exact = PhysicalField::from_fn(16, length, |x| {
            [0.0, (kappa * (2.0 * x[0] + x[2])).cos(), 0.0]
        });
        let err = p
            .comps
            .iter()
            .zip(&exact.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "max error {err}");
    }

    #[test]
    fn random_roundtrip_and_parseval() {
        let lat = WaveLattice::new(16, 2.0 * PI).unwrap();
        let u = random_divfree_field(&lat, 11, |k| (-0.3 * k).exp());
        let p = to_physical(&u);
        let back = to_spectral(&lat, &p).unwrap();
        assert!(back.max_abs_diff(&u) < 1e-12);
        let e0 = u.sobolev_norm(0.0).powi(2);
        assert!((p.mean_square() - e0).abs() < 1e-10 * e0);
    }

    #[test]
    fn size_mismatch_rejected() {
        let lat = WaveLattice::new(8, 1.0).unwrap();
        assert!(to_spectral(&lat, &PhysicalField::zeros(4)).is_err());
    }
}
