use super::gevrey_norm;
use crate::fit::linear_fit;
use crate::spectral::SpectralField;

/// Shell energies `E(k) = sum_{k-1/2 < |j| <= k+1/2} |u_j|^2`, `k = 0..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumSeries {
    pub t: f64,
    pub energy: Vec<f64>,
    /// Number of retained lattice modes in each shell.
    pub modes: Vec<usize>,
    /// Shells with `k + 1/2` below the dealiasing radius are complete spheres.
    pub complete_shells: usize,
}

impl SpectrumSeries {
    pub fn total(&self) -> f64 {
        self.energy.iter().sum()
    }

    pub fn k_max(&self) -> usize {
        self.energy.len() - 1
    }
}

pub fn shell_spectrum(u: &SpectralField, t: f64) -> SpectrumSeries {
    let lat = u.lattice();
    let k_max = ((lat.n() as f64 / 2.0) * 3f64.sqrt()).ceil() as usize;
    let mut energy = vec![0.0; k_max + 1];
    let mut modes = vec![0usize; k_max + 1];
    for (i, c) in u.coeffs().iter().enumerate() {
        if i == 0 {
            continue;
        }
        let k = lat.wave_norm(i).round() as usize;
        if lat.is_retained(i) {
            modes[k] += 1;
        }
        energy[k] += c.iter().map(|z| z.norm_sqr()).sum::<f64>();
    }
    let complete_shells = (0..=k_max)
        .take_while(|&k| k as f64 + 0.5 < lat.dealias_radius())
        .count();
    SpectrumSeries {
        t,
        energy,
        modes,
        complete_shells,
    }
}

/// Fit window: shells past the peak whose energy lies within
/// `[lower, upper]` times the peak energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitPolicy {
    pub lower: f64,
    pub upper: f64,
    pub min_shells: usize,
}

impl Default for FitPolicy {
    fn default() -> Self {
        Self {
            lower: 1e-24,
            upper: 1e-6,
            min_shells: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GevreyProfile {
    pub t: f64,
    /// Fitted exponential decay rate of the mode amplitudes, `None` when the
    /// spectrum has no exponential range.
    pub tau_star: Option<f64>,
    pub r2: f64,
    pub k_lo: usize,
    pub k_hi: usize,
    /// `(|u|_{1,tau}, |u|_{2,tau})` at a caller-supplied `tau`.
    pub norms: Option<(f64, f64)>,
}

/// Fits `ln sqrt(E(k)/n_k) + 2 ln k = -tau* k + const` over the policy window,
/// where `n_k` is the mode count of shell `k`, so `|u_j| ~ |j|^{-2} e^{-tau |j|}`
/// yields `tau* = tau`.
pub fn fit_decay_rate(spectrum: &SpectrumSeries, policy: &FitPolicy) -> GevreyProfile {
    let none = GevreyProfile {
        t: spectrum.t,
        tau_star: None,
        r2: 0.0,
        k_lo: 0,
        k_hi: 0,
        norms: None,
    };
    let usable = spectrum.complete_shells.min(spectrum.energy.len());
    let e = &spectrum.energy[..usable];
    let Some((peak_k, &peak)) = e
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
    else {
        return none;
    };
    if !(peak > 0.0) {
        return none;
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let mut range = None::<(usize, usize)>;
    for (k, &ek) in e.iter().enumerate().skip(peak_k + 1) {
        let rel = ek / peak;
        if rel > policy.upper {
            continue;
        }
        if rel < policy.lower || ek <= 0.0 || spectrum.modes[k] == 0 {
            break;
        }
        let kf = k as f64;
        xs.push(kf);
        ys.push(0.5 * (ek / spectrum.modes[k] as f64).ln() + 2.0 * kf.ln());
        range = Some(range.map_or((k, k), |(lo, _)| (lo, k)));
    }
    let Some((k_lo, k_hi)) = range else {
        return none;
    };
    if xs.len() < policy.min_shells.max(2) {
        return GevreyProfile { k_lo, k_hi, ..none };
    }
    match linear_fit(&xs, &ys) {
        Some(fit) => GevreyProfile {
            t: spectrum.t,
            tau_star: Some(-fit.slope),
            r2: fit.r2,
            k_lo,
            k_hi,
            norms: None,
        },
        None => none,
    }
}

impl GevreyProfile {
    pub fn with_norms(mut self, u: &SpectralField, tau: f64) -> Self {
        self.norms = Some((gevrey_norm(u, 1.0, tau), gevrey_norm(u, 2.0, tau)));
        self
    }

    pub fn has_range(&self) -> bool {
        self.tau_star.is_some()
    }
}
