use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{NsvError, Result};

/// Integer wavevector on the periodic lattice.
pub type Wavevector = [i64; 3];

/// Fourier lattice of an `N^3` periodic box of side `L`.
///
/// Coefficients are stored in FFT order: axis index `i` maps to wavenumber
/// `i` for `i < N/2` and to `i - N` otherwise. The Nyquist planes
/// (`i = N/2`) are outside the lattice and always carry zero.
///
/// Modes with `9|j|^2 < N^2` are retained by the two-thirds dealiasing rule.
#[derive(Clone)]
pub struct WaveLattice {
    inner: Arc<LatticeData>,
}

struct LatticeData {
    n: usize,
    length: f64,
    waves: Vec<i64>,
    wave_sq: Vec<i64>,
    retained: Vec<bool>,
    in_lattice: Vec<bool>,
    negated: Vec<usize>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl WaveLattice {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(NsvError::Config(format!(
                "resolution N must be even and >= 4, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(NsvError::Config(format!(
                "box length L must be positive, got {length}"
            )));
        }
        let half = n / 2;
        let waves: Vec<i64> = (0..n)
            .map(|i| if i < half { i as i64 } else { i as i64 - n as i64 })
            .collect();
        let total = n * n * n;
        let mut wave_sq = Vec::with_capacity(total);
        let mut retained = Vec::with_capacity(total);
        let mut in_lattice = Vec::with_capacity(total);
        let mut negated = Vec::with_capacity(total);
        let nyquist = -(half as i64);
        let n_sq = (n * n) as i64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let j = [waves[a], waves[b], waves[c]];
                    let sq = j[0] * j[0] + j[1] * j[1] + j[2] * j[2];
                    let inside = j.iter().all(|&x| x != nyquist);
                    wave_sq.push(sq);
                    in_lattice.push(inside);
                    retained.push(inside && sq > 0 && 9 * sq < n_sq);
                    negated.push(((n - a) % n * n + (n - b) % n) * n + (n - c) % n);
                }
            }
        }
        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n);
        let fft_inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(LatticeData {
                n,
                length,
                waves,
                wave_sq,
                retained,
                in_lattice,
                negated,
                fft_forward,
                fft_inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    /// Number of coefficient slots, `N^3`.
    pub fn len(&self) -> usize {
        self.inner.wave_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `2 pi / L`, the physical wavenumber of `|j| = 1`.
    pub fn kappa(&self) -> f64 {
        2.0 * PI / self.inner.length
    }

    /// Smallest Stokes eigenvalue `(2 pi / L)^2`.
    pub fn lambda1(&self) -> f64 {
        self.kappa().powi(2)
    }

    /// Two-thirds rule cutoff radius `N/3` (exclusive).
    pub fn dealias_radius(&self) -> f64 {
        self.inner.n as f64 / 3.0
    }

    /// Largest Stokes eigenvalue among retained modes.
    pub fn lambda_max(&self) -> f64 {
        self.max_retained_wave_sq() as f64 * self.lambda1()
    }

    pub fn max_retained_wave_sq(&self) -> i64 {
        self.indices_retained()
            .map(|i| self.inner.wave_sq[i])
            .max()
            .unwrap_or(0)
    }

    pub fn index(&self, a: usize, b: usize, c: usize) -> usize {
        let n = self.inner.n;
        (a * n + b) * n + c
    }

    /// Slot holding wavevector `j`, if `j` lies on the lattice.
    pub fn index_of(&self, j: Wavevector) -> Option<usize> {
        let n = self.inner.n as i64;
        let lim = n / 2 - 1;
        if j.iter().any(|&x| x.abs() > lim) {
            return None;
        }
        let wrap = |x: i64| x.rem_euclid(n) as usize;
        Some(self.index(wrap(j[0]), wrap(j[1]), wrap(j[2])))
    }

    pub fn wavevector(&self, idx: usize) -> Wavevector {
        let n = self.inner.n;
        let w = &self.inner.waves;
        [w[idx / (n * n)], w[(idx / n) % n], w[idx % n]]
    }

    /// `|j|^2` on the integer lattice.
    pub fn wave_sq(&self, idx: usize) -> i64 {
        self.inner.wave_sq[idx]
    }

    pub fn wave_norm(&self, idx: usize) -> f64 {
        (self.inner.wave_sq[idx] as f64).sqrt()
    }

    /// Stokes eigenvalue `(2 pi / L)^2 |j|^2`.
    pub fn eigenvalue(&self, idx: usize) -> f64 {
        self.inner.wave_sq[idx] as f64 * self.lambda1()
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        self.inner.retained[idx]
    }

    /// True off the Nyquist planes.
    pub fn in_lattice(&self, idx: usize) -> bool {
        self.inner.in_lattice[idx]
    }

    pub fn negated(&self, idx: usize) -> usize {
        self.inner.negated[idx]
    }

    pub fn indices_retained(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.inner.retained[i])
    }

    /// Distinct Stokes eigenvalue levels present among retained modes, ascending,
    /// as integer `|j|^2` values.
    pub fn eigen_levels(&self) -> Vec<i64> {
        let mut levels: Vec<i64> = self
            .indices_retained()
            .map(|i| self.inner.wave_sq[i])
            .collect();
        levels.sort_unstable();
        levels.dedup();
        levels
    }

    pub(crate) fn fft_forward(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.fft_forward
    }

    pub(crate) fn fft_inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.fft_inverse
    }

    pub fn same_as(&self, other: &WaveLattice) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }

    pub fn check_same(&self, other: &WaveLattice) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(NsvError::LatticeMismatch {
                left_n: self.n(),
                left_l: self.length(),
                right_n: other.n(),
                right_l: other.length(),
            })
        }
    }
}

impl fmt::Debug for WaveLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveLattice")
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl PartialEq for WaveLattice {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}
