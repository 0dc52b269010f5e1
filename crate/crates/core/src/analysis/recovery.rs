use super::filter::StateEstimate;
use crate::error::{Error, Result};
use crate::jumps::QubitState;

/// Statistics accumulated over all pulses for one bin of time since the end
/// of the dead interval.
#[derive(Debug, Clone, PartialEq)]
pub struct PostPulseBin {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Mean time since resume over the excited samples in the bin.
    pub t_mean_e: f64,
    /// Mean time since resume over all samples in the bin.
    pub t_mean: f64,
    pub samples: u64,
    pub samples_e: u64,
    /// Excited samples followed by an observed sample.
    pub at_risk_e: u64,
    /// Observed `e -> g` jumps, binned by the last excited sample.
    pub jumps_eg: u64,
}

impl PostPulseBin {
    /// Mean excited dwell as excited time at risk over `e -> g` jumps.
    pub fn tau_e(&self, t_m: f64) -> Option<f64> {
        (self.jumps_eg > 0).then(|| self.at_risk_e as f64 * t_m / self.jumps_eg as f64)
    }

    pub fn p_excited(&self) -> Option<f64> {
        (self.samples > 0).then(|| self.samples_e as f64 / self.samples as f64)
    }
}

/// Excited-state occupancy and decay counts versus time since each entry in
/// `resume` (the end of a pulse's dead interval), on `n_bins` log-spaced
/// bins from `t_min` to `t_max`. The first bin extends down to zero. Each
/// pulse's window stops at the next unobserved sample.
pub fn post_pulse_profile(
    est: &StateEstimate,
    resume: &[f64],
    t_min: f64,
    t_max: f64,
    n_bins: usize,
) -> Result<Vec<PostPulseBin>> {
    if !(t_min > 0.0 && t_max > t_min) || n_bins == 0 {
        return Err(Error::Domain("need 0 < t_min < t_max and at least one bin".into()));
    }
    let ratio = (t_max / t_min).ln() / n_bins as f64;
    let mut edges: Vec<f64> = (0..=n_bins).map(|i| t_min * (ratio * i as f64).exp()).collect();
    edges[0] = 0.0;
    let mut bins: Vec<PostPulseBin> = edges
        .windows(2)
        .map(|w| PostPulseBin {
            t_lo: w[0],
            t_hi: w[1],
            t_mean_e: 0.0,
            t_mean: 0.0,
            samples: 0,
            samples_e: 0,
            at_risk_e: 0,
            jumps_eg: 0,
        })
        .collect();
    let bin_of = |t: f64| -> Option<usize> {
        if !(0.0..t_max).contains(&t) {
            return None;
        }
        Some(edges.partition_point(|&e| e <= t).saturating_sub(1).min(n_bins - 1))
    };
    let t_m = est.t_m;
    for &r in resume {
        let mut k = (r / t_m - 1e-9).ceil().max(0.0) as usize;
        let mut prev: Option<(QubitState, usize)> = None;
        while k < est.len() {
            let Some(s) = est.states[k] else { break };
            let t_rel = (k as f64 + 0.5) * t_m - r;
            let Some(b) = bin_of(t_rel) else { break };
            if let Some((QubitState::Excited, pb)) = prev {
                bins[pb].at_risk_e += 1;
                if s == QubitState::Ground {
                    bins[pb].jumps_eg += 1;
                }
            }
            let bin = &mut bins[b];
            bin.samples += 1;
            bin.t_mean += t_rel;
            if s == QubitState::Excited {
                bin.samples_e += 1;
                bin.t_mean_e += t_rel;
            }
            prev = Some((s, b));
            k += 1;
        }
    }
    for b in &mut bins {
        if b.samples > 0 {
            b.t_mean /= b.samples as f64;
        }
        if b.samples_e > 0 {
            b.t_mean_e /= b.samples_e as f64;
        }
    }
    Ok(bins)
}
