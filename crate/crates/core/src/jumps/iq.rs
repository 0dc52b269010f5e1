use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::rates::snr_separation;
use super::sim::{QubitState, TruthTrace};
use crate::params::MeasurementParams;

/// Integrated quadratures, one pair per measurement interval `t_m`, in
/// units of the single-sample noise σ. Unobserved samples are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct IqRecord {
    pub t_m: f64,
    pub i: Vec<f64>,
    pub q: Vec<f64>,
    /// Fraction of each interval spent in the ground state, when known.
    pub ground_fraction: Option<Vec<f64>>,
}

impl IqRecord {
    pub fn len(&self) -> usize {
        self.i.len()
    }

    pub fn is_empty(&self) -> bool {
        self.i.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.t_m * self.len() as f64
    }
}

/// Number of complete measurement intervals in `duration`.
pub fn sample_count(duration: f64, t_m: f64) -> usize {
    (duration / t_m + 1e-9).floor() as usize
}

/// Fraction of each of `n` consecutive intervals of length `t_m` spent in
/// the ground state.
pub fn ground_occupancy(truth: &TruthTrace, t_m: f64, n: usize) -> Vec<f64> {
    let mut occ = vec![0.0; n];
    let end = n as f64 * t_m;
    for (k, e) in truth.entries.iter().enumerate() {
        if e.state != QubitState::Ground {
            continue;
        }
        let a = e.time;
        let b = truth
            .entries
            .get(k + 1)
            .map_or(truth.duration, |next| next.time)
            .min(end);
        if b <= a {
            continue;
        }
        let first = (a / t_m).floor() as usize;
        let last = ((b / t_m).ceil() as usize).min(n);
        for (j, o) in occ.iter_mut().enumerate().take(last).skip(first) {
            let lo = (j as f64 * t_m).max(a);
            let hi = ((j + 1) as f64 * t_m).min(b);
            if hi > lo {
                *o += hi - lo;
            }
        }
    }
    for o in &mut occ {
        *o = (*o / t_m).clamp(0.0, 1.0);
    }
    occ
}

fn dead_mask(truth: &TruthTrace, t_m: f64, n: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &(a, b) in &truth.dead {
        let first = (a / t_m).floor() as usize;
        let last = ((b / t_m).ceil() as usize).min(n);
        for m in mask.iter_mut().take(last).skip(first) {
            *m = true;
        }
    }
    mask
}

/// Random stream for readout noise, independent of the chain's stream.
pub fn iq_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Readout record without noise: `I = (2 f_g - 1) · sep`, `Q = 0`.
pub fn synthesize_iq_noiseless(truth: &TruthTrace, meas: &MeasurementParams<f64>) -> IqRecord {
    let n = sample_count(truth.duration, meas.t_m);
    let sep = snr_separation(meas);
    let occ = ground_occupancy(truth, meas.t_m, n);
    let dead = dead_mask(truth, meas.t_m, n);
    let mut i = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for (f, d) in occ.iter().zip(&dead) {
        if *d {
            i.push(f64::NAN);
            q.push(f64::NAN);
        } else {
            i.push((2.0 * f - 1.0) * sep);
            q.push(0.0);
        }
    }
    IqRecord {
        t_m: meas.t_m,
        i,
        q,
        ground_fraction: Some(occ),
    }
}

/// Readout record with unit Gaussian noise on both quadratures.
pub fn synthesize_iq<R: Rng + ?Sized>(truth: &TruthTrace, meas: &MeasurementParams<f64>, rng: &mut R) -> IqRecord {
    let mut rec = synthesize_iq_noiseless(truth, meas);
    for (i, q) in rec.i.iter_mut().zip(rec.q.iter_mut()) {
        let ni: f64 = StandardNormal.sample(rng);
        let nq: f64 = StandardNormal.sample(rng);
        if !i.is_nan() {
            *i += ni;
            *q += nq;
        }
    }
    rec
}
