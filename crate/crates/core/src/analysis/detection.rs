//! Calibration of the `e -> g` jump detection efficiency.
//!
//! At rates approaching `1/T_m` the filter misses short dwells, so the
//! observed hazard grows sublinearly with the true one. The response curve
//! is measured on constant-rate records at the same readout settings and
//! inverted by log-log interpolation.

use rayon::prelude::*;

use super::filter::{two_point_filter, StateEstimate};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::jumps::{iq_rng, simulate_joint, snr_separation, synthesize_iq, QubitState};

/// Observed `e -> g` hazard (1/s): jumps over excited samples that are
/// followed by an observed sample. `None` without any such sample.
pub fn excited_hazard(est: &StateEstimate) -> Option<f64> {
    let (mut at_risk, mut jumps) = (0u64, 0u64);
    for w in est.states.windows(2) {
        if let (Some(QubitState::Excited), Some(next)) = (w[0], w[1]) {
            at_risk += 1;
            if next == QubitState::Ground {
                jumps += 1;
            }
        }
    }
    (at_risk > 0).then(|| jumps as f64 / (at_risk as f64 * est.t_m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResponse {
    /// True downward rates (1/s), increasing.
    pub rates: Vec<f64>,
    /// Observed hazard at each rate.
    pub observed: Vec<f64>,
}

impl DetectionResponse {
    /// True rate producing the observed hazard `h`. Below the calibrated
    /// range the lowest efficiency is applied; above it, or where the curve
    /// stops increasing, the rate is not recoverable.
    pub fn true_rate(&self, h: f64) -> Option<f64> {
        if !(h > 0.0) {
            return None;
        }
        let first = self.observed[0];
        if h <= first {
            return Some(h * self.rates[0] / first);
        }
        let k = self.observed.partition_point(|&o| o < h);
        if k == self.observed.len() {
            return None;
        }
        let (o0, o1) = (self.observed[k - 1].ln(), self.observed[k].ln());
        let (r0, r1) = (self.rates[k - 1].ln(), self.rates[k].ln());
        Some((r0 + (h.ln() - o0) / (o1 - o0) * (r1 - r0)).exp())
    }
}

/// Measure the detection response of `base`'s readout on constant-rate
/// records at `n_rates` log-spaced rates in `[rate_min, rate_max]`, each
/// long enough for about `jumps` decays. The curve is truncated where it
/// stops increasing.
pub fn calibrate_detection(
    base: &ScenarioConfig,
    rate_min: f64,
    rate_max: f64,
    n_rates: usize,
    jumps: f64,
) -> Result<DetectionResponse> {
    if !(rate_min > 0.0 && rate_max > rate_min) || n_rates < 2 || !(jumps > 0.0) {
        return Err(Error::Domain(
            "need 0 < rate_min < rate_max, two rates and a positive jump target".into(),
        ));
    }
    let sep = snr_separation(&base.meas);
    let rates: Vec<f64> = (0..n_rates)
        .map(|i| rate_min * (rate_max / rate_min).powf(i as f64 / (n_rates - 1) as f64))
        .collect();
    let observed = rates
        .par_iter()
        .enumerate()
        .map(|(i, &rate)| {
            let mut c = base.clone();
            c.kinetics.g = 0.0;
            c.kinetics.s = 0.0;
            c.kinetics.r = 0.0;
            c.initial_qp = Some(0);
            c.pulses.clear();
            c.thermal = None;
            c.modulator = None;
            c.qubit.gamma_other = rate / c.qubit.relaxation_multiplier;
            c.duration = (jumps / rate).max(100.0 * c.meas.t_m);
            c.rng_seed = base.rng_seed.wrapping_add(i as u64 + 1);
            let sim = simulate_joint(&c);
            let iq = synthesize_iq(&sim.truth, &c.meas, &mut iq_rng(c.rng_seed));
            let est = two_point_filter(&iq, sep)?;
            excited_hazard(&est).ok_or_else(|| Error::InsufficientData(format!("no excited samples at rate {rate}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let keep = 1 + observed.windows(2).take_while(|w| w[1] > w[0]).count();
    Ok(DetectionResponse {
        rates: rates[..keep].to_vec(),
        observed: observed[..keep].to_vec(),
    })
}
