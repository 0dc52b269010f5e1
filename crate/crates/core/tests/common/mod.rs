//! Oracle computations shared by the core suite and the acceptance run.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use qpjumps::analysis::{extract_dwells, two_point_filter, StateEstimate};
use qpjumps::fitting::periodogram;
use qpjumps::jumps::{snr_separation, synthesize_iq_noiseless};
use qpjumps::kinetics::{evolve_ode, linearized, sample_birth_death, steady_state, tau_ss};
use qpjumps::{MeasurementParams, QpKineticsParams, QubitState, TruthEntry, TruthTrace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Largest relative gap between the integrated density and the analytic
/// linearization, starting 1e-6 above the steady state.
pub fn ode_linearization_error() -> f64 {
    let mut worst = 0.0f64;
    for (g, s, r) in [(3.2e-4, 8000.0, 0.0), (3.2e-4, 8000.0, 1e9), (1e-3, 2000.0, 5e10)] {
        let p = QpKineticsParams { g, s, r, n_cp: 3.75e7 };
        let xb = steady_state(&p).unwrap();
        let tau = tau_ss(&p, xb).unwrap();
        let x0 = xb * (1.0 + 1e-6);
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 * tau / 10.0).collect();
        let xs = evolve_ode(x0, &p, &grid).unwrap();
        for (x, t) in xs.iter().zip(&grid) {
            let lin = linearized(x0, xb, tau, *t);
            worst = worst.max(((x - lin) / lin).abs());
        }
    }
    worst
}

/// Stationary law of the QP number chain truncated at `n_max`, from the
/// null space of its generator.
pub fn stationary_oracle(p: &QpKineticsParams, n_max: usize) -> Vec<f64> {
    let n = n_max + 1;
    let mut q = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let up = p.g * p.n_cp / 2.0;
        let loss = p.s * kf;
        let recomb = p.r * kf * (kf - 1.0) / (2.0 * p.n_cp);
        if k + 2 < n {
            q[(k, k + 2)] += up;
            q[(k, k)] -= up;
        }
        if k >= 1 {
            q[(k, k - 1)] += loss;
            q[(k, k)] -= loss;
        }
        if k >= 2 {
            q[(k, k - 2)] += recomb;
            q[(k, k)] -= recomb;
        }
    }
    // π Q = 0 with Σπ = 1 replacing one balance equation
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b).expect("generator has a unique stationary law");
    pi.iter().copied().collect()
}

pub struct ChiSquare {
    pub stat: f64,
    pub cells: usize,
    pub p_value: f64,
}

/// Chi-square of `samples` QP numbers drawn 1 ms apart (about eight
/// relaxation times) against the generator oracle.
pub fn birth_death_chi_square(seed: u64, samples: usize) -> ChiSquare {
    let p = QpKineticsParams {
        g: 4e-2,
        s: 8000.0,
        r: 2e9,
        n_cp: 1e6,
    };
    let pi = stationary_oracle(&p, 50);
    assert!(pi[50] < 1e-12, "truncation must be negligible");

    let spacing = 1e-3;
    let burn_in = 5e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tr = sample_birth_death(5, &p, burn_in + spacing * samples as f64, &mut rng);
    let mut counts = vec![0u64; 51];
    for k in 0..samples {
        let n = tr.n_at(burn_in + spacing * k as f64) as usize;
        counts[n.min(50)] += 1;
    }

    // pool sparse cells so every expected count is at least 5
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut e_acc, mut o_acc) = (0.0, 0.0);
    for n in 0..=50 {
        e_acc += pi[n] * samples as f64;
        o_acc += counts[n] as f64;
        if e_acc >= 5.0 {
            cells.push((o_acc, e_acc));
            e_acc = 0.0;
            o_acc = 0.0;
        }
    }
    if let Some(last) = cells.last_mut() {
        last.0 += o_acc;
        last.1 += e_acc;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.len() - 1) as f64;
    ChiSquare {
        stat,
        cells: cells.len(),
        p_value: 1.0 - ChiSquared::new(df).unwrap().cdf(stat),
    }
}

pub fn trace_from_dwells(first: QubitState, dwells: &[f64]) -> TruthTrace {
    let mut entries = vec![TruthEntry {
        time: 0.0,
        state: first,
        n: 0,
    }];
    let mut t = 0.0;
    let mut s = first;
    for d in &dwells[..dwells.len() - 1] {
        t += d;
        s = s.flipped();
        entries.push(TruthEntry {
            time: t,
            state: s,
            n: 0,
        });
    }
    TruthTrace {
        entries,
        duration: dwells.iter().sum(),
        dead: Vec::new(),
    }
}

/// Filter the noiseless record of a truth with the given dwells.
pub fn filter_noiseless(first: QubitState, dwells: &[f64]) -> (TruthTrace, StateEstimate) {
    let meas = MeasurementParams::default();
    let truth = trace_from_dwells(first, dwells);
    let iq = synthesize_iq_noiseless(&truth, &meas);
    let est = two_point_filter(&iq, snr_separation(&meas)).unwrap();
    (truth, est)
}

/// Whether the filter reproduces a truth made of whole-sample dwells of
/// `lengths` samples, both per sample and as interior dwell lengths.
pub fn noise_free_filter_exact(first: QubitState, lengths: &[u32]) -> bool {
    let t_m = MeasurementParams::default().t_m;
    let dwells: Vec<f64> = lengths.iter().map(|&l| l as f64 * t_m).collect();
    let (_, est) = filter_noiseless(first, &dwells);

    let mut expected = Vec::new();
    let mut s = first;
    for &l in lengths {
        expected.extend(std::iter::repeat_n(Some(s), l as usize));
        s = s.flipped();
    }
    if est.states != expected {
        return false;
    }
    let d = extract_dwells(&est);
    let mut got: Vec<u64> = d.ground.iter().chain(&d.excited).copied().collect();
    let mut want: Vec<u64> = lengths[1..lengths.len() - 1].iter().map(|&l| u64::from(l)).collect();
    got.sort_unstable();
    want.sort_unstable();
    got == want
}

/// Largest relative mismatch between the integrated periodogram and the
/// series variance.
pub fn parseval_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for n in [1000usize, 1024, 4097] {
        let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        for k in 1..n {
            x[k] += 0.9 * x[k - 1];
        }
        let spec = periodogram(&x, 0.37).unwrap();
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let integral: f64 = spec.power.iter().sum::<f64>() * spec.resolution();
        worst = worst.max(((integral - var) / var).abs());
    }
    worst
}
