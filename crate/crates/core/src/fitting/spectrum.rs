use rustfft::num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    /// Frequencies `k / (N dt)` for `k = 0 ..= N/2` (Hz).
    pub freqs: Vec<T>,
    /// Density per Hz; `Σ power · Δf` equals the series variance.
    pub power: Vec<T>,
    /// Number of averaged segments.
    pub segments: usize,
}

impl<T: Real> Spectrum<T> {
    pub fn resolution(&self) -> T {
        self.freqs[1] - self.freqs[0]
    }

    /// Frequencies and powers without the DC bin.
    pub fn without_dc(&self) -> (Vec<T>, Vec<T>) {
        (self.freqs[1..].to_vec(), self.power[1..].to_vec())
    }
}

/// One-sided, mean-removed periodogram. Missing (NaN) entries are replaced
/// by the mean of the finite ones.
pub fn periodogram<T: Real + FftNum>(series: &[T], dt: T) -> Result<Spectrum<T>> {
    if series.len() < 16 {
        return Err(Error::InsufficientData(format!(
            "periodogram needs at least 16 points, got {}",
            series.len()
        )));
    }
    if !(dt > T::zero()) {
        return Err(Error::Domain("sampling interval must be positive".into()));
    }
    let finite: Vec<T> = series.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::InsufficientData("series has no finite values".into()));
    }
    let mean = finite.iter().copied().sum::<T>() / T::from_count(finite.len());
    let n = series.len();
    let mut buf: Vec<Complex<T>> = series
        .iter()
        .map(|&v| Complex::new(if v.is_finite() { v - mean } else { T::zero() }, T::zero()))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let nf = T::from_count(n);
    let half = n / 2;
    let two = T::lit(2.0);
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let p = c.norm_sqr() * dt / nf;
        let edge = k == 0 || (n.is_multiple_of(2) && k == half);
        power.push(if edge { p } else { two * p });
    }
    let freqs = (0..=half).map(|k| T::from_count(k) / (nf * dt)).collect();
    Ok(Spectrum {
        freqs,
        power,
        segments: 1,
    })
}

/// Average of periodograms over `segments` contiguous, non-overlapping,
/// equal-length segments (trailing remainder dropped).
pub fn welch<T: Real + FftNum>(series: &[T], dt: T, segments: usize) -> Result<Spectrum<T>> {
    if segments == 0 {
        return Err(Error::Domain("segment count must be positive".into()));
    }
    let len = series.len() / segments;
    let mut acc: Option<Spectrum<T>> = None;
    for s in 0..segments {
        let p = periodogram(&series[s * len..(s + 1) * len], dt)?;
        acc = Some(match acc {
            None => p,
            Some(mut a) => {
                for (x, y) in a.power.iter_mut().zip(&p.power) {
                    *x += *y;
                }
                a
            }
        });
    }
    let mut a = acc.expect("at least one segment");
    let k = T::from_count(segments);
    for x in &mut a.power {
        *x /= k;
    }
    a.segments = segments;
    Ok(a)
}
