use rustfft::{num_complex::Complex64, FftPlanner};
use serde::Serialize;

use super::Trajectory;
use crate::error::{Error, Result};

/// Minimum samples per RF period for spectral analysis.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 16.0;
/// Minimum number of periods of the dominant line in the record.
pub const MIN_DOMINANT_PERIODS: f64 = 50.0;

/// One-sided Hann-windowed power spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    /// Bin frequencies (Hz).
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    pub df: f64,
}

/// A resolved spectral line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// Interpolated frequency (Hz).
    pub freq: f64,
    pub power: f64,
}

fn hann(n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

impl Spectrum {
    /// Spectrum of a uniformly sampled real series with spacing `dt` (s).
    /// The mean is removed before windowing.
    pub fn of_series(values: &[f64], dt: f64) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n.max(1) as f64;
        let window = hann(n);
        let mut buf: Vec<Complex64> = values
            .iter()
            .zip(&window)
            .map(|(v, w)| Complex64::new((v - mean) * w, 0.0))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let df = 1.0 / (n as f64 * dt);
        let half = n / 2 + 1;
        Spectrum {
            freqs: (0..half).map(|i| i as f64 * df).collect(),
            power: buf[..half.min(n)].iter().map(|c| c.norm_sqr()).collect(),
            df,
        }
    }

    /// Local maxima sorted by decreasing power, with frequencies refined by
    /// a parabola through the log-power of the three bins around each maximum.
    pub fn peaks(&self, count: usize) -> Vec<Peak> {
        let p = &self.power;
        let mut found: Vec<Peak> = (1..p.len().saturating_sub(1))
            .filter(|&i| p[i] > p[i - 1] && p[i] >= p[i + 1] && p[i] > 0.0)
            .map(|i| {
                let (l, c, r) = (p[i - 1].max(1e-300).ln(), p[i].ln(), p[i + 1].max(1e-300).ln());
                let denom = l - 2.0 * c + r;
                let shift = if denom.abs() > 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
                let shift = shift.clamp(-0.5, 0.5);
                Peak {
                    freq: self.freqs[i] + shift * self.df,
                    power: (c - 0.25 * (l - r) * shift).exp(),
                }
            })
            .collect();
        found.sort_by(|a, b| b.power.total_cmp(&a.power));
        found.truncate(count);
        found
    }

    /// CSV with header `freq_hz,power`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_hz,power\n");
        for (f, p) in self.freqs.iter().zip(&self.power) {
            out.push_str(&format!(
                "{},{}\n",
                crate::io::fmt_number(*f),
                crate::io::fmt_number(*p)
            ));
        }
        out
    }
}

/// Amplitude of the tone at `freq` (Hz) by a Hann-windowed discrete-time
/// Fourier sum, normalised so that `A·cos(2πft)` returns `A`.
pub fn tone_amplitude(values: &[f64], dt: f64, freq: f64) -> f64 {
    let window = hann(values.len());
    let norm: f64 = window.iter().sum();
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (v, w)) in values.iter().zip(&window).enumerate() {
        let ph = -2.0 * std::f64::consts::PI * freq * i as f64 * dt;
        acc += Complex64::from_polar(v * w, ph);
    }
    let amp = 2.0 * acc.norm() / norm;
    if freq == 0.0 {
        amp / 2.0
    } else {
        amp
    }
}

/// Spectrum of one position coordinate (0 = x, 1 = y, 2 = z) of a
/// trajectory. Fails if the sampling resolves the RF drive with fewer than
/// 16 points per period or if the record spans fewer than 50 periods of
/// the dominant line.
pub fn motional_spectrum(traj: &Trajectory, axis: usize) -> Result<Spectrum> {
    if axis > 2 {
        return Err(Error::invalid("axis", "must be 0, 1 or 2"));
    }
    let per_period = traj.trap.rf_period() / traj.dt_sample;
    if per_period < MIN_SAMPLES_PER_PERIOD * (1.0 - 1e-9) {
        return Err(Error::TooShort {
            reason: format!("{per_period:.1} samples per RF period (< 16)"),
        });
    }
    if traj.len() < 8 {
        return Err(Error::TooShort { reason: format!("only {} samples", traj.len()) });
    }
    let spec = Spectrum::of_series(&traj.component(axis), traj.dt_sample);
    let dominant = spec.peaks(1).first().map(|p| p.freq).unwrap_or(0.0);
    let periods = dominant * traj.duration();
    if periods < MIN_DOMINANT_PERIODS {
        return Err(Error::TooShort {
            reason: format!("{periods:.1} periods of the dominant line (< 50)"),
        });
    }
    Ok(spec)
}
