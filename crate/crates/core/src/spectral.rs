//! Time-series estimators and spectrally shaped noise synthesis.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{ModelError, Result};
use crate::noise::{Band, Spectrum};

/// Welch estimate of the two-sided PSD with a Hann window and 50 % overlap.
///
/// Only the non-negative frequencies are returned; values are two-sided, so
/// integrating them over `[-fs/2, fs/2]` recovers the signal variance.
pub fn welch_psd(signal: &[f64], dt: f64, segment_len: usize) -> Result<Spectrum> {
    if segment_len < 8 || signal.len() < segment_len {
        return Err(ModelError::InsufficientData(format!(
            "need at least one segment of {segment_len} (>= 8) samples, have {}",
            signal.len()
        )));
    }
    let window: Vec<f64> = (0..segment_len)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / segment_len as f64).cos())
        .collect();
    let window_power: f64 = window.iter().map(|w| w * w).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment_len);
    let hop = segment_len / 2;
    let bins = segment_len / 2 + 1;
    let mut accum = vec![0.0; bins];
    let mut segments = 0usize;
    let mut buffer = vec![Complex::new(0.0, 0.0); segment_len];
    let mut start = 0;
    while start + segment_len <= signal.len() {
        let chunk = &signal[start..start + segment_len];
        let mean = chunk.iter().sum::<f64>() / segment_len as f64;
        for ((b, &x), &w) in buffer.iter_mut().zip(chunk).zip(&window) {
            *b = Complex::new((x - mean) * w, 0.0);
        }
        fft.process(&mut buffer);
        for (a, b) in accum.iter_mut().zip(&buffer) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += hop;
    }
    let scale = dt / (window_power * segments as f64);
    let values: Vec<f64> = accum.iter().map(|a| a * scale).collect();
    let df = 1.0 / (segment_len as f64 * dt);
    let frequencies: Vec<f64> = (0..bins).map(|k| k as f64 * df).collect();
    let band = Band {
        f_min: frequencies[1],
        f_max: frequencies[bins - 1],
    };
    Ok(Spectrum {
        frequencies,
        values,
        band,
    })
}

/// Sample autocovariance at lags `0..=max_lag` steps, normalized by `N - k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleAcf {
    pub dt: f64,
    pub mean: f64,
    pub values: Vec<f64>,
}

impl SampleAcf {
    pub fn variance(&self) -> f64 {
        self.values[0]
    }

    pub fn lag_seconds(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Correlation time from an exponential fit over lags up to `max_lag` seconds.
    ///
    /// Fits `ln ρ(k) = -k·dt/τ` through the origin, weighting each lag by ρ²
    /// so that the noisy tail does not dominate.
    pub fn fitted_timescale(&self, max_lag: f64) -> Result<f64> {
        let var = self.variance();
        if !(var > 0.0) {
            return Err(ModelError::InsufficientData("zero variance, no correlation time".into()));
        }
        let last = ((max_lag / self.dt).round() as usize).min(self.values.len() - 1);
        let (mut num, mut den) = (0.0, 0.0);
        for k in 1..=last {
            let rho = self.values[k] / var;
            if rho <= 0.0 {
                break;
            }
            let x = self.lag_seconds(k);
            let w = rho * rho;
            num += w * x * x;
            den += w * x * rho.ln();
        }
        if den >= 0.0 {
            return Err(ModelError::InsufficientData("no positive correlation at the fitted lags".into()));
        }
        Ok(-num / den)
    }
}

pub fn sample_acf(series: &[f64], dt: f64, max_lag_steps: usize) -> Result<SampleAcf> {
    if series.len() <= max_lag_steps + 1 {
        return Err(ModelError::InsufficientData(format!(
            "{} samples cannot support lag {max_lag_steps}",
            series.len()
        )));
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let values = (0..=max_lag_steps)
        .map(|k| {
            let s: f64 = centered[..n - k].iter().zip(&centered[k..]).map(|(a, b)| a * b).sum();
            s / (n - k) as f64
        })
        .collect();
    Ok(SampleAcf { dt, mean, values })
}

/// Zero-mean Gaussian noise of length `n` whose two-sided PSD follows `psd`
/// on the FFT bins inside `[f_lo, f_hi]`; bins outside are left empty.
pub fn synthesize_noise<R: Rng, F: Fn(f64) -> f64>(
    rng: &mut R,
    n: usize,
    dt: f64,
    f_lo: f64,
    f_hi: f64,
    psd: F,
) -> Vec<f64> {
    if n < 2 {
        return vec![0.0; n];
    }
    let fs = 1.0 / dt;
    let df = fs / n as f64;
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    let nyquist = n / 2;
    for k in 1..=nyquist {
        let f = k as f64 * df;
        if f < f_lo * (1.0 - 1e-12) || f > f_hi * (1.0 + 1e-12) {
            continue;
        }
        let amplitude = (psd(f) * n as f64 * fs).sqrt();
        if n.is_multiple_of(2) && k == nyquist {
            let a: f64 = rng.sample(StandardNormal);
            spectrum[k] = Complex::new(amplitude * a, 0.0);
        } else {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            let z = Complex::new(a, b) * (amplitude / std::f64::consts::SQRT_2);
            spectrum[k] = z;
            spectrum[n - k] = z.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    spectrum.iter().map(|z| z.re / n as f64).collect()
}
