use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NsvError, Result};
use num_complex::Complex64;

use crate::spectral::{random_divfree_field, SpectralField, Vec3c, WaveLattice, Wavevector};

/// Time-independent, band-limited body force.
#[derive(Clone, Debug)]
pub struct Forcing {
    field: SpectralField,
    support_radius: f64,
    support_wave_sq: i64,
}

impl Forcing {
    /// Wraps an existing field; the support radius is read off its coefficients.
    pub fn from_field(field: SpectralField) -> Result<Self> {
        field.check_invariants(1e-10)?;
        if !field.is_dealiased() {
            return Err(NsvError::InvalidInput(
                "forcing must be supported inside the dealiasing radius".into(),
            ));
        }
        let lat = field.lattice();
        let support_wave_sq = field
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, u)| u.iter().any(|c| c.norm_sqr() > 0.0))
            .map(|(i, _)| lat.wave_sq(i))
            .max()
            .unwrap_or(0);
        Ok(Self {
            field,
            support_radius: (support_wave_sq as f64).sqrt(),
            support_wave_sq,
        })
    }

    pub fn zero(lattice: &WaveLattice) -> Self {
        Self {
            field: SpectralField::zeros(lattice),
            support_radius: 0.0,
            support_wave_sq: 0,
        }
    }

    pub fn from_modes(lattice: &WaveLattice, modes: &[(Wavevector, Vec3c)]) -> Result<Self> {
        Self::from_field(SpectralField::from_modes(lattice, modes)?)
    }

    /// `A (sin x cos y cos z, -cos x sin y cos z, 0)` in units of `kappa x`,
    /// i.e. `(-i sx A/8, i sy A/8, 0)` on the eight modes `(sx, sy, sz)`, `s = +-1`.
    pub fn taylor_green(lattice: &WaveLattice, amplitude: f64) -> Result<Self> {
        let a = amplitude / 8.0;
        let mut modes = Vec::with_capacity(4);
        for sy in [-1i64, 1] {
            for sz in [-1i64, 1] {
                modes.push((
                    [1, sy, sz],
                    [
                        Complex64::new(0.0, -a),
                        Complex64::new(0.0, sy as f64 * a),
                        Complex64::new(0.0, 0.0),
                    ],
                ));
            }
        }
        Self::from_modes(lattice, &modes)
    }

    /// Random solenoidal forcing on `0 < |j| <= kf`, scaled to `|f| = amplitude`.
    pub fn random_band(lattice: &WaveLattice, kf: f64, amplitude: f64, seed: u64) -> Result<Self> {
        if !(kf >= 1.0 && kf < lattice.dealias_radius()) {
            return Err(NsvError::Config(format!(
                "forcing radius must lie in [1, {}), got {kf}",
                lattice.dealias_radius()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_divfree_field(lattice, rng.random(), |k| if k <= kf { 1.0 } else { 0.0 });
        let norm = f.sobolev_norm(0.0);
        Self::from_field(f.scaled(amplitude / norm))
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    /// Largest `|j|` carrying forcing.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Largest `|j|^2` carrying forcing (the eigenvalue support bound on the
    /// integer lattice).
    pub fn support_wave_sq(&self) -> i64 {
        self.support_wave_sq
    }

    pub fn is_zero(&self) -> bool {
        self.support_wave_sq == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{to_spectral, PhysicalField};
    use std::f64::consts::PI;

    #[test]
    fn taylor_green_support_and_norm() {
        let lat = WaveLattice::new(16, 2.0 * PI).unwrap();
        let f = Forcing::taylor_green(&lat, 2.0).unwrap();
        assert_eq!(f.support_wave_sq(), 3);
        // mean square of the two components is A^2/8 each
        assert!((f.field().sobolev_norm(0.0) - 1.0).abs() < 1e-13);
        // agrees with sampling the formula on the grid
        let k = lat.kappa();
        let samples = PhysicalField::from_fn(16, lat.length(), |x| {
            let (sx, cx) = (k * x[0]).sin_cos();
            let (sy, cy) = (k * x[1]).sin_cos();
            let cz = (k * x[2]).cos();
            [2.0 * sx * cy * cz, -2.0 * cx * sy * cz, 0.0]
        });
        let sampled = to_spectral(&lat, &samples).unwrap();
        assert!(sampled.max_abs_diff(f.field()) < 1e-14);
    }

    #[test]
    fn random_band_is_normalized_and_limited() {
        let lat = WaveLattice::new(16, 2.0 * PI).unwrap();
        let f = Forcing::random_band(&lat, 2.0, 0.3, 7).unwrap();
        assert!((f.field().sobolev_norm(0.0) - 0.3).abs() < 1e-14);
        assert!(f.support_radius() <= 2.0);
        assert!(Forcing::random_band(&lat, 9.0, 1.0, 7).is_err());
    }
}
