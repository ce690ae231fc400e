//! One-sided amplitude spectra and peak picking.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
    Rectangular,
}

impl Window {
    pub fn parse(label: &str) -> Result<Self> {
        match label.to_ascii_lowercase().as_str() {
            "hann" | "hanning" => Ok(Window::Hann),
            "rect" | "rectangular" | "none" => Ok(Window::Rectangular),
            other => Err(Error::Input(format!("unknown window `{other}` (expected hann or rect)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Window::Hann => "hann",
            Window::Rectangular => "rect",
        }
    }

    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            // periodic form, which tiles exactly over the record
            Window::Hann => (0..n).map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos()).collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Bin frequencies, `0, df, …, ≤ sample_rate / 2`.
    pub freqs: Vec<f64>,
    /// Amplitude-scaled: a sine of amplitude `A` on a bin reads `A`.
    pub magnitude: Vec<f64>,
    pub sample_rate: f64,
    pub window_name: String,
    pub n_samples: usize,
    /// `Σ w_k`, the window's coherent gain times `n`.
    pub window_sum: f64,
    /// `Σ (w_k x_k)²` of the detrended, windowed record.
    pub windowed_energy: f64,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.n_samples as f64
    }

    /// `(1/N) Σ |X_k|²` over the full two-sided DFT, rebuilt from the
    /// one-sided magnitudes. Equals [`Spectrum::windowed_energy`] by Parseval.
    pub fn parseval_energy(&self) -> f64 {
        let n = self.n_samples;
        let mut total = 0.0;
        for (k, &m) in self.magnitude.iter().enumerate() {
            let edge = k == 0 || (n.is_multiple_of(2) && k == n / 2);
            let raw = if edge { m * self.window_sum } else { 0.5 * m * self.window_sum };
            total += if edge { raw * raw } else { 2.0 * raw * raw };
        }
        total / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub freq: f64,
    pub magnitude: f64,
}

/// Mean-removed, windowed, one-sided amplitude spectrum.
pub fn fft_spectrum(samples: &[f64], sample_rate: f64, window: &str) -> Result<Spectrum> {
    let win = Window::parse(window)?;
    let n = samples.len();
    if n < MIN_SAMPLES {
        return Err(Error::Input(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    if !(sample_rate > 0.0 && sample_rate.is_finite()) {
        return Err(Error::Input(format!("sample rate must be positive, got {sample_rate}")));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("samples contain non-finite values".into()));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let w = win.coefficients(n);
    let window_sum: f64 = w.iter().sum();
    let mut buf: Vec<Complex<f64>> = samples.iter().zip(&w).map(|(&x, &wk)| Complex::new((x - mean) * wk, 0.0)).collect();
    let windowed_energy = buf.iter().map(|c| c.re * c.re).sum();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let bins = n / 2 + 1;
    let magnitude = (0..bins)
        .map(|k| {
            let edge = k == 0 || (n.is_multiple_of(2) && k == n / 2);
            let scale = if edge { 1.0 } else { 2.0 };
            scale * buf[k].norm() / window_sum
        })
        .collect();
    let df = sample_rate / n as f64;
    Ok(Spectrum {
        freqs: (0..bins).map(|k| k as f64 * df).collect(),
        magnitude,
        sample_rate,
        window_name: win.name().to_string(),
        n_samples: n,
        window_sum,
        windowed_energy,
    })
}

/// [`fft_spectrum`] for a sampled series, after checking the time grid.
pub fn fft_spectrum_of_series(times: &[f64], values: &[f64], window: &str) -> Result<Spectrum> {
    if times.len() != values.len() {
        return Err(Error::Input(format!("{} times for {} values", times.len(), values.len())));
    }
    if times.len() < MIN_SAMPLES {
        return Err(Error::Input(format!("need at least {MIN_SAMPLES} samples, got {}", times.len())));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Input("time column is not increasing".into()));
    }
    for (k, pair) in times.windows(2).enumerate() {
        let step = pair[1] - pair[0];
        if (step - dt).abs() > 1e-6 * dt {
            return Err(Error::Input(format!("non-uniform sampling at row {}: step {step} vs {dt}", k + 1)));
        }
    }
    fft_spectrum(values, 1.0 / dt, window)
}

/// Local maxima above `min_prominence · max`, refined by a parabola through
/// the log magnitudes of the peak bin and its neighbours.
pub fn detect_peaks(s: &Spectrum, min_prominence: f64) -> Result<Vec<Peak>> {
    let m = &s.magnitude;
    if m.is_empty() {
        return Err(Error::Input("empty spectrum".into()));
    }
    if !(0.0..=1.0).contains(&min_prominence) {
        return Err(Error::Input(format!("min_prominence must lie in [0, 1], got {min_prominence}")));
    }
    let max = m.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(Vec::new());
    }
    let threshold = min_prominence * max;
    let df = s.resolution();
    let mut peaks = Vec::new();
    for k in 1..m.len().saturating_sub(1) {
        if !(m[k] > m[k - 1] && m[k] >= m[k + 1] && m[k] >= threshold) {
            continue;
        }
        let (a, b, c) = (m[k - 1].ln(), m[k].ln(), m[k + 1].ln());
        let denom = a - 2.0 * b + c;
        let (delta, height) = if denom < 0.0 && a.is_finite() && c.is_finite() {
            let d = 0.5 * (a - c) / denom;
            (d, (b - 0.25 * (a - c) * d).exp())
        } else {
            (0.0, m[k])
        };
        peaks.push(Peak {
            freq: (k as f64 + delta) * df,
            magnitude: height,
        });
    }
    Ok(peaks)
}
