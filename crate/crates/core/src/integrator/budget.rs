use super::FluidParams;
use crate::error::{NsvError, Result};
use crate::spectral::SpectralField;

/// Instantaneous energy quantities. `enstrophy` is `|A^{1/2} u|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
    pub dissipation: f64,
    pub injection: f64,
}

impl EnergySample {
    pub fn measure(t: f64, u: &SpectralField, fluid: &FluidParams, forcing: &SpectralField) -> Self {
        let enstrophy = u.dirichlet_sq();
        Self {
            t,
            energy: u.sobolev_norm(0.0).powi(2) + fluid.alpha * fluid.alpha * enstrophy,
            enstrophy,
            dissipation: 2.0 * fluid.nu * enstrophy,
            injection: 2.0 * forcing.inner(u),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BudgetRow {
    pub sample: EnergySample,
    pub denergy_dt: f64,
    /// `|dE/dt + dissipation - injection|`.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct EnergyBudget {
    pub rows: Vec<BudgetRow>,
    /// `nu <|A^{1/2} u|^2>` over the averaging window.
    pub epsilon: f64,
    /// `nu sup |A^{1/2} u|^2` over the averaging window.
    pub epsilon_sup: f64,
    pub window_start: f64,
    pub max_residual: f64,
    /// `max_residual / max(dissipation + |injection|)`, zero for a zero flow.
    pub max_relative_residual: f64,
}

fn derivative(e: &[f64], h: f64) -> Vec<f64> {
    let n = e.len();
    if n < 5 {
        return (0..n)
            .map(|i| match i {
                0 => (-3.0 * e[0] + 4.0 * e[1] - e[2]) / (2.0 * h),
                i if i == n - 1 => (3.0 * e[i] - 4.0 * e[i - 1] + e[i - 2]) / (2.0 * h),
                i => (e[i + 1] - e[i - 1]) / (2.0 * h),
            })
            .collect();
    }
    let w = 12.0 * h;
    (0..n)
        .map(|i| match i {
            0 => (-25.0 * e[0] + 48.0 * e[1] - 36.0 * e[2] + 16.0 * e[3] - 3.0 * e[4]) / w,
            1 => (-3.0 * e[0] - 10.0 * e[1] + 18.0 * e[2] - 6.0 * e[3] + e[4]) / w,
            i if i == n - 1 => {
                (25.0 * e[i] - 48.0 * e[i - 1] + 36.0 * e[i - 2] - 16.0 * e[i - 3] + 3.0 * e[i - 4]) / w
            }
            i if i == n - 2 => {
                (3.0 * e[i + 1] + 10.0 * e[i] - 18.0 * e[i - 1] + 6.0 * e[i - 2] - e[i - 3]) / w
            }
            i => (-e[i + 2] + 8.0 * e[i + 1] - 8.0 * e[i - 1] + e[i - 2]) / w,
        })
        .collect()
}

/// Balance `dE/dt = -2 nu |A^{1/2}u|^2 + 2 (f, u)` along uniformly spaced
/// samples, with `epsilon` averaged over `t >= window_start` (all samples when
/// `None`).
pub fn energy_budget(samples: &[EnergySample], window_start: Option<f64>) -> Result<EnergyBudget> {
    if samples.len() < 3 {
        return Err(NsvError::TooFewSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let h = samples[1].t - samples[0].t;
    if !(h > 0.0) {
        return Err(NsvError::InvalidInput("sample times must increase".into()));
    }
    let span = samples[samples.len() - 1].t - samples[0].t;
    let uniform = samples
        .windows(2)
        .all(|w| ((w[1].t - w[0].t) - h).abs() <= 1e-9 * span.max(h));
    if !uniform {
        return Err(NsvError::InvalidInput("sample times must be uniformly spaced".into()));
    }
    let energies: Vec<f64> = samples.iter().map(|s| s.energy).collect();
    let de = derivative(&energies, h);
    let rows: Vec<BudgetRow> = samples
        .iter()
        .zip(de)
        .map(|(s, d)| BudgetRow {
            sample: *s,
            denergy_dt: d,
            residual: (d + s.dissipation - s.injection).abs(),
        })
        .collect();
    let max_residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let scale = samples
        .iter()
        .map(|s| s.dissipation + s.injection.abs())
        .fold(0.0, f64::max);

    let start = window_start.unwrap_or(samples[0].t);
    let window: Vec<&EnergySample> = samples.iter().filter(|s| s.t >= start).collect();
    let (epsilon, epsilon_sup) = window_averages(&window);
    Ok(EnergyBudget {
        rows,
        epsilon,
        epsilon_sup,
        window_start: start,
        max_residual,
        max_relative_residual: if scale > 0.0 { max_residual / scale } else { 0.0 },
    })
}

/// Trapezoidal time average and supremum of `dissipation / 2`.
fn window_averages(window: &[&EnergySample]) -> (f64, f64) {
    let eps = |s: &EnergySample| 0.5 * s.dissipation;
    let sup = window.iter().map(|s| eps(s)).fold(0.0, f64::max);
    match window {
        [] => (0.0, 0.0),
        [only] => (eps(only), sup),
        _ => {
            let span = window[window.len() - 1].t - window[0].t;
            let integral: f64 = window
                .windows(2)
                .map(|w| 0.5 * (w[1].t - w[0].t) * (eps(w[0]) + eps(w[1])))
                .sum();
            // the average can exceed the sup only by round-off
            ((integral / span).min(sup), sup)
        }
    }
}
