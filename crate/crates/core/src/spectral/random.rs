use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::field::{norm_sq3, project_mode, SpectralField, Vec3c, ZERO3};
use super::lattice::{WaveLattice, Wavevector};

/// First nonzero component positive: one representative of each `+-j` pair.
pub fn is_canonical(j: Wavevector) -> bool {
    match j.iter().find(|&&x| x != 0) {
        Some(&x) => x > 0,
        None => false,
    }
}

/// Random solenoidal field on the dealiased modes with `|u_j| = profile(|j|)`
/// exactly and a uniformly random direction orthogonal to `j`.
///
/// Reproducible for a fixed seed: modes are visited in storage order.
pub fn random_divfree_field<P: Fn(f64) -> f64>(
    lattice: &WaveLattice,
    seed: u64,
    profile: P,
) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![ZERO3; lattice.len()];
    for idx in lattice.indices_retained() {
        let j = lattice.wavevector(idx);
        if !is_canonical(j) {
            continue;
        }
        let mut draw = || -> Complex64 {
            Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
        };
        let raw: Vec3c = [draw(), draw(), draw()];
        let amplitude = profile(lattice.wave_norm(idx));
        let dir = project_mode(j, &raw);
        let mag = norm_sq3(&dir).sqrt();
        if amplitude == 0.0 || mag == 0.0 {
            continue;
        }
        let s = amplitude / mag;
        let u = [dir[0] * s, dir[1] * s, dir[2] * s];
        coeffs[idx] = u;
        coeffs[lattice.negated(idx)] = [u[0].conj(), u[1].conj(), u[2].conj()];
    }
    SpectralField::from_coeffs_unchecked(lattice, coeffs)
}
