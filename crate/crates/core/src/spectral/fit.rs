//! Least-squares decay fits used for wavefunction tails and populations.

use crate::error::{Error, Result};

const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub amplitude: f64,
    pub gamma_f: f64,
    pub fit_window: (usize, usize),
    /// RMS of the log-log deviations over the window.
    pub residual: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentialFit {
    pub amplitude: f64,
    /// Decay rate per unit of the abscissa.
    pub rate: f64,
    pub residual: f64,
    pub samples: usize,
}

/// Akaike criterion for a two-parameter model with Gaussian residuals of RMS `residual`.
pub fn aic(residual: f64, samples: usize) -> f64 {
    let m = samples as f64;
    m * (residual * residual).max(f64::MIN_POSITIVE).ln() + 4.0
}

impl PowerLawFit {
    pub fn aic(&self) -> f64 {
        aic(self.residual, self.samples)
    }
}

impl ExponentialFit {
    pub fn aic(&self) -> f64 {
        aic(self.residual, self.samples)
    }
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, rms)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - icpt - slope * a).powi(2))
        .sum();
    (icpt, slope, (ss / m).sqrt())
}

fn windowed(samples: &[(usize, f64)], window: (usize, usize)) -> Result<Vec<(f64, f64)>> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(n, _)| *n >= window.0 && *n <= window.1)
        .map(|&(n, v)| (n as f64, v))
        .collect();
    if pts.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in window {:?}, need {MIN_SAMPLES}",
            pts.len(),
            window
        )));
    }
    if let Some(bad) = pts.iter().find(|p| !(p.1 > 0.0) || p.0 <= 0.0) {
        return Err(Error::InsufficientData(format!(
            "non-positive sample ({}, {}) in window",
            bad.0, bad.1
        )));
    }
    Ok(pts)
}

/// Fit `value = A / n^gamma` in log-log space over `window` (inclusive).
pub fn fit_power_law(samples: &[(usize, f64)], window: (usize, usize)) -> Result<PowerLawFit> {
    let pts = windowed(samples, window)?;
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (a, b, rms) = linear_fit(&x, &y);
    Ok(PowerLawFit {
        amplitude: a.exp(),
        gamma_f: -b,
        fit_window: window,
        residual: rms,
        samples: pts.len(),
    })
}

/// Fit `value = A exp(-rate n)` in log-linear space over `window`.
pub fn fit_exponential(samples: &[(usize, f64)], window: (usize, usize)) -> Result<ExponentialFit> {
    let pts = windowed(samples, window)?;
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (a, b, rms) = linear_fit(&x, &y);
    Ok(ExponentialFit {
        amplitude: a.exp(),
        rate: -b,
        residual: rms,
        samples: pts.len(),
    })
}
