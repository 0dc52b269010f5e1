use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::io::fmt9;
use crate::jumps::QubitState;

/// Which mean dwell enters the constant-rate prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanKind {
    /// Arithmetic mean over dwells.
    #[default]
    PerDwell,
    /// Mean over samples, i.e. each dwell weighted by its length.
    SampleWeighted,
}

/// Sample-weighted dwell histogram on logarithmic bins.
#[derive(Debug, Clone, PartialEq)]
pub struct DwellHistogram {
    pub state: QubitState,
    pub t_m: f64,
    pub bins_per_decade: usize,
    /// `len() == counts.len() + 1`, uniform in `log10`.
    pub edges: Vec<f64>,
    /// Samples in dwells whose duration falls in each bin.
    pub counts: Vec<u64>,
    pub total: u64,
    pub n_dwells: usize,
    /// Per-dwell mean duration (s).
    pub mean_dwell: f64,
    /// Sample-weighted mean duration (s).
    pub mean_dwell_weighted: f64,
}

impl DwellHistogram {
    /// Bin width in decades.
    pub fn log_width(&self) -> f64 {
        1.0 / self.bins_per_decade as f64
    }

    /// Geometric bin centers.
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect()
    }

    pub fn mean(&self, kind: MeanKind) -> f64 {
        match kind {
            MeanKind::PerDwell => self.mean_dwell,
            MeanKind::SampleWeighted => self.mean_dwell_weighted,
        }
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    /// CSV `bin_lo_s,bin_hi_s,M,P`.
    pub fn write_csv<W: Write>(&self, predicted: &[f64], mut w: W) -> io::Result<()> {
        writeln!(w, "bin_lo_s,bin_hi_s,M,P")?;
        for (i, c) in self.counts.iter().enumerate() {
            let p = predicted.get(i).copied().unwrap_or(f64::NAN);
            writeln!(
                w,
                "{},{},{},{}",
                fmt9(self.edges[i]),
                fmt9(self.edges[i + 1]),
                c,
                fmt9(p)
            )?;
        }
        Ok(())
    }
}

/// Histogram of dwells given as sample counts `k` (duration `k · t_m`) on
/// bins `t_m · 10^(i / bins_per_decade)` covering `[t_m, upper]`. A dwell
/// of `k` samples adds `k` counts to its bin.
pub fn log_histogram(
    state: QubitState,
    dwells: &[u64],
    t_m: f64,
    upper: f64,
    bins_per_decade: usize,
) -> Result<DwellHistogram> {
    if dwells.is_empty() {
        return Err(Error::InsufficientData("no dwells to histogram".into()));
    }
    if !(t_m > 0.0) || bins_per_decade == 0 {
        return Err(Error::Domain("t_m and bins per decade must be positive".into()));
    }
    let bpd = bins_per_decade as f64;
    let upper = upper.max(t_m * 10f64.powf(1.0 / bpd));
    let n_bins = ((upper / t_m).log10() * bpd - 1e-9).ceil().max(1.0) as usize;
    let edges: Vec<f64> = (0..=n_bins).map(|i| t_m * 10f64.powf(i as f64 / bpd)).collect();
    let mut counts = vec![0u64; n_bins];
    let mut total = 0u64;
    let mut sum_k = 0u64;
    let mut sum_k2 = 0.0f64;
    for &k in dwells {
        if k == 0 {
            continue;
        }
        let idx = (((k as f64).log10() * bpd + 1e-9).floor() as usize).min(n_bins - 1);
        counts[idx] += k;
        total += k;
        sum_k += k;
        sum_k2 += (k as f64) * (k as f64);
    }
    let n = dwells.len() as f64;
    Ok(DwellHistogram {
        state,
        t_m,
        bins_per_decade,
        edges,
        counts,
        total,
        n_dwells: dwells.len(),
        mean_dwell: sum_k as f64 * t_m / n,
        mean_dwell_weighted: sum_k2 / sum_k as f64 * t_m,
    })
}

/// Constant-rate prediction for each bin,
/// `P_i = Σ Δ' ln10 (τ_i/τ̄)² exp(-τ_i/τ̄)` at the geometric bin center.
pub fn poisson_prediction(hist: &DwellHistogram, mean: f64) -> Result<Vec<f64>> {
    if !(mean > 0.0) || hist.total == 0 {
        return Err(Error::Undefined("prediction needs a positive mean and counts".into()));
    }
    let scale = hist.total as f64 * hist.log_width() * std::f64::consts::LN_10;
    Ok(hist
        .centers()
        .into_iter()
        .map(|tau| {
            let u = tau / mean;
            scale * u * u * (-u).exp()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    pub fidelity: f64,
    pub one_minus_f: f64,
    pub predicted: Vec<f64>,
}

/// Bhattacharyya overlap `Σ √(M_i P_i) / Σ M_i`.
pub fn fidelity(measured: &[f64], predicted: &[f64]) -> Result<FidelityReport> {
    if measured.len() != predicted.len() {
        return Err(Error::Domain("histogram and prediction lengths differ".into()));
    }
    let total: f64 = measured.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Undefined("fidelity of an empty histogram".into()));
    }
    if predicted.iter().any(|&p| p < 0.0) {
        return Err(Error::Domain("negative predicted count".into()));
    }
    let overlap: f64 = measured.iter().zip(predicted).map(|(m, p)| (m * p).sqrt()).sum();
    let f = overlap / total;
    Ok(FidelityReport {
        fidelity: f,
        one_minus_f: 1.0 - f,
        predicted: predicted.to_vec(),
    })
}
