use std::io::{self, Write};

use rayon::prelude::*;

use super::dwell::extract_dwells;
use super::filter::StateEstimate;
use super::histogram::{fidelity, log_histogram, poisson_prediction, DwellHistogram, MeanKind};
use super::stats::polarization;
use crate::error::{Error, Result};
use crate::io::fmt9;
use crate::jumps::QubitState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    /// Window length (s).
    pub window: f64,
    pub bins_per_decade: usize,
    /// Windows with fewer interior dwells report no fidelity.
    pub min_dwells: usize,
    pub mean: MeanKind,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            window: 1.0,
            bins_per_decade: 10,
            min_dwells: 20,
            mean: MeanKind::PerDwell,
        }
    }
}

/// Statistics of one window; `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    /// Window start (s).
    pub t_s: f64,
    pub tau_g: Option<f64>,
    pub tau_e: Option<f64>,
    /// Ground-state histogram fidelity.
    pub fidelity: Option<f64>,
    pub fidelity_e: Option<f64>,
    pub sigma_z: Option<f64>,
    pub n_dwells_g: usize,
    pub n_dwells_e: usize,
    pub hist_g: Option<DwellHistogram>,
    pub pred_g: Vec<f64>,
    pub hist_e: Option<DwellHistogram>,
    pub pred_e: Vec<f64>,
}

impl WindowStats {
    pub fn one_minus_f(&self) -> Option<f64> {
        self.fidelity.map(|f| 1.0 - f)
    }
}

/// Dwell statistics, fidelity and polarization over consecutive
/// non-overlapping windows. A trailing partial window is dropped.
pub fn per_second_report(est: &StateEstimate, opts: &ReportOptions) -> Result<Vec<WindowStats>> {
    let per = (opts.window / est.t_m).round() as usize;
    if per < 100 {
        return Err(Error::Domain(format!(
            "window {} s is shorter than 100 samples",
            opts.window
        )));
    }
    let n_win = est.len() / per;
    if n_win == 0 {
        return Err(Error::InsufficientData(format!(
            "record of {} samples is shorter than one window",
            est.len()
        )));
    }
    let span = per as f64 * est.t_m;
    (0..n_win)
        .into_par_iter()
        .map(|w| {
            let sub = est.slice(w * per, (w + 1) * per);
            window_stats(&sub, w as f64 * span, span, opts)
        })
        .collect()
}

fn window_stats(sub: &StateEstimate, t_s: f64, span: f64, opts: &ReportOptions) -> Result<WindowStats> {
    let dwells = extract_dwells(sub);
    let one = |state: QubitState| -> Result<(Option<DwellHistogram>, Vec<f64>, Option<f64>)> {
        let d = dwells.samples(state);
        if d.is_empty() {
            return Ok((None, Vec::new(), None));
        }
        let h = log_histogram(state, d, sub.t_m, span, opts.bins_per_decade)?;
        let p = poisson_prediction(&h, h.mean(opts.mean))?;
        let f = if d.len() >= opts.min_dwells {
            Some(fidelity(&h.counts_f64(), &p)?.fidelity)
        } else {
            None
        };
        Ok((Some(h), p, f))
    };
    let (hist_g, pred_g, fidelity_g) = one(QubitState::Ground)?;
    let (hist_e, pred_e, fidelity_e) = one(QubitState::Excited)?;
    Ok(WindowStats {
        t_s,
        tau_g: hist_g.as_ref().map(|h| h.mean(opts.mean)),
        tau_e: hist_e.as_ref().map(|h| h.mean(opts.mean)),
        fidelity: fidelity_g,
        fidelity_e,
        sigma_z: polarization(sub).ok().map(|p| p.sigma_z),
        n_dwells_g: dwells.ground.len(),
        n_dwells_e: dwells.excited.len(),
        hist_g,
        pred_g,
        hist_e,
        pred_e,
    })
}

/// CSV `t_s,tau_g_s,tau_e_s,F,one_minus_F,sigma_z`; missing values are `nan`.
pub fn write_report_csv<W: Write>(rows: &[WindowStats], mut w: W) -> io::Result<()> {
    let v = |x: Option<f64>| fmt9(x.unwrap_or(f64::NAN));
    writeln!(w, "t_s,tau_g_s,tau_e_s,F,one_minus_F,sigma_z")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt9(r.t_s),
            v(r.tau_g),
            v(r.tau_e),
            v(r.fidelity),
            v(r.one_minus_f()),
            v(r.sigma_z)
        )?;
    }
    Ok(())
}
