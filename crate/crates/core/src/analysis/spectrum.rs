use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{fmt_g, ActivityTrace};

/// Two-sided power spectral density on the non-negative frequencies
/// `k / segment_t`, `k = 0..=L/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freqs: Vec<f64>,
    pub power: Vec<f64>,
    /// Segment length (s); 0 for analytic spectra.
    pub segment_t: f64,
    /// Samples per segment; 0 for analytic spectra.
    pub segment_len: usize,
    pub n_segments: usize,
}

impl Spectrum {
    /// Indices of bins with `lo <= f <= hi`, never including DC.
    pub fn band(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.freqs.len())
            .filter(|&i| self.freqs[i] > 0.0 && self.freqs[i] >= lo - 1e-9 && self.freqs[i] <= hi + 1e-9)
            .collect()
    }

    /// `sum_{f != 0} C(f) df` over the full two-sided frequency axis.
    pub fn total_power_excluding_dc(&self) -> f64 {
        let df = self.freqs.get(1).copied().unwrap_or(0.0);
        let last = self.freqs.len() - 1;
        // for even segment lengths the last bin is the unpaired Nyquist bin
        let nyquist_bin = self.segment_len > 0 && self.segment_len.is_multiple_of(2);
        let mut total = 0.0;
        for i in 1..=last {
            let weight = if i == last && nyquist_bin { 1.0 } else { 2.0 };
            total += weight * self.power[i];
        }
        total * df
    }

    /// CSV with header `f,power`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "f,power")?;
        for (f, p) in self.freqs.iter().zip(&self.power) {
            writeln!(out, "{},{}", fmt_g(*f), fmt_g(*p))?;
        }
        Ok(())
    }
}

/// Bartlett estimate from the empirical activity of `trace`, using every
/// complete segment of length `segment_t` from the start.
pub fn psd_bartlett(trace: &ActivityTrace, segment_t: f64) -> Result<Spectrum> {
    psd_bartlett_samples(&trace.activity, trace.dt, segment_t)
}

/// Averaged periodogram without windowing or detrending: per segment
/// `|dt * FFT(x)|^2 / segment_t`, averaged over non-overlapping segments.
pub fn psd_bartlett_samples(samples: &[f64], dt: f64, segment_t: f64) -> Result<Spectrum> {
    if !(dt > 0.0 && segment_t > 0.0) {
        return Err(Error::invalid("dt and segment length must be positive"));
    }
    let len_f = segment_t / dt;
    let len = len_f.round() as usize;
    if len < 2 || (len_f - len as f64).abs() > 1e-6 * len_f {
        return Err(Error::invalid("segment length must be a multiple of dt spanning >= 2 samples"));
    }
    let n_segments = samples.len() / len;
    if n_segments < 2 {
        return Err(Error::TooShort(format!(
            "{} samples hold fewer than two segments of {len}",
            samples.len()
        )));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);
    let half = len / 2;
    let mut power = vec![0.0; half + 1];
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    let t_seg = len as f64 * dt;
    for seg in samples.chunks_exact(len).take(n_segments) {
        for (b, &x) in buf.iter_mut().zip(seg) {
            *b = Complex::new(x, 0.0);
        }
        fft.process(&mut buf);
        for (p, c) in power.iter_mut().zip(&buf) {
            *p += (c * dt).norm_sqr() / t_seg;
        }
    }
    power.iter_mut().for_each(|p| *p /= n_segments as f64);
    Ok(Spectrum {
        freqs: (0..=half).map(|k| k as f64 / t_seg).collect(),
        power,
        segment_t: t_seg,
        segment_len: len,
        n_segments,
    })
}
