use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use super::rates::{gamma_eg, gamma_ge};
use super::thermal::thermal_transient;
use crate::config::{InitialState, InjectMode, ScenarioConfig};
use crate::kinetics::{steady_state, QpEvent, QpEventKind, QpEventTrace, QpPropensities};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QubitState {
    Ground,
    Excited,
}

impl QubitState {
    pub fn flipped(self) -> Self {
        match self {
            QubitState::Ground => QubitState::Excited,
            QubitState::Excited => QubitState::Ground,
        }
    }
}

impl fmt::Display for QubitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QubitState::Ground => "g",
            QubitState::Excited => "e",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthEntry {
    pub time: f64,
    pub state: QubitState,
    pub n: u64,
}

/// Ground-truth trajectory: the qubit state and QP count in force from each
/// entry's time until the next entry (or `duration`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTrace {
    pub entries: Vec<TruthEntry>,
    pub duration: f64,
    /// Unobserved intervals `[start, end)` (pulse plus post-pulse wait).
    pub dead: Vec<(f64, f64)>,
}

impl TruthTrace {
    pub fn initial(&self) -> TruthEntry {
        self.entries[0]
    }

    /// Entry in force at time `t`.
    pub fn at(&self, t: f64) -> TruthEntry {
        let idx = self.entries.partition_point(|e| e.time <= t);
        self.entries[idx.saturating_sub(1)]
    }

    /// Durations of completed sojourns in `state`, excluding the first and
    /// last sojourn of the trace.
    pub fn dwell_times(&self, state: QubitState) -> Vec<f64> {
        let mut flips = self
            .entries
            .windows(2)
            .filter(|w| w[0].state != w[1].state)
            .map(|w| (w[1].time, w[1].state));
        let mut out = Vec::new();
        let Some(mut prev) = flips.next() else {
            return out;
        };
        for next in flips {
            if prev.1 == state {
                out.push(next.0 - prev.0);
            }
            prev = next;
        }
        out
    }

    /// CSV `time_s,state,N`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,state,N")?;
        for e in &self.entries {
            writeln!(w, "{},{},{}", crate::io::fmt9(e.time), e.state, e.n)?;
        }
        Ok(())
    }
}

/// Everything produced by one run of the joint chain.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub truth: TruthTrace,
    pub qp_events: QpEventTrace,
    /// Modulator state changes `(time, in_alternate_state)`.
    pub modulator_switches: Vec<(f64, bool)>,
}

impl Simulation {
    /// Whether the generation modulator sits in its alternate state at `t`.
    pub fn modulator_alt_at(&self, t: f64) -> bool {
        let idx = self.modulator_switches.partition_point(|s| s.0 <= t);
        idx > 0 && self.modulator_switches[idx - 1].1
    }
}

/// Seeded random stream for the joint chain; stream 0 of the config seed.
pub(crate) fn truth_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exact-jump simulation of the coupled qubit and QP-number chain over
/// `[0, duration]`.
///
/// QP reactions use the kinetics propensities at the current generation
/// coefficient; the qubit flips at `gamma_eg(N)` / `gamma_ge(N, T(t))`.
/// After a pulse the bath temperature decays towards `t_eff`; the upward
/// rate is then time dependent and is sampled by thinning against its value
/// at the start of each step, which bounds it until the next scheduled event.
pub fn simulate_joint(cfg: &ScenarioConfig) -> Simulation {
    let mut rng = truth_rng(cfg.rng_seed);
    simulate_joint_with(cfg, &mut rng)
}

pub fn simulate_joint_with<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Simulation {
    let qubit = &cfg.qubit;
    let kin = &cfg.kinetics;
    let t_base = qubit.t_eff;

    let mut n = cfg.initial_qp.unwrap_or_else(|| {
        let x_bar = steady_state(kin).unwrap_or(0.0);
        (x_bar * kin.n_cp).round() as u64
    });
    let mut state = match cfg.initial_state {
        InitialState::Ground => QubitState::Ground,
        InitialState::Excited => QubitState::Excited,
        InitialState::Thermal => {
            if rng.random::<f64>() < qubit.thermal_excited_population() {
                QubitState::Excited
            } else {
                QubitState::Ground
            }
        }
    };

    let mut truth = TruthTrace {
        entries: vec![TruthEntry { time: 0.0, state, n }],
        duration: cfg.duration,
        dead: Vec::new(),
    };
    let mut qp_events = QpEventTrace {
        n0: n,
        events: Vec::new(),
    };
    let mut switches = Vec::new();

    let mut t = 0.0_f64;
    let mut mod_alt = false;
    // temperature excess above t_base, valid at time `excess_ref`
    let mut excess = 0.0_f64;
    let mut excess_ref = 0.0_f64;
    let tau_th = cfg.thermal.map(|th| th.tau_th).unwrap_or(1.0);
    let temperature = |now: f64, excess: f64, excess_ref: f64| {
        if excess == 0.0 {
            t_base
        } else {
            t_base + excess * (-(now - excess_ref) / tau_th).exp()
        }
    };
    let mut next_pulse = 0usize;

    loop {
        let (next_time, is_pulse) = match cfg.pulses.get(next_pulse) {
            Some(p) => (p.start + p.length, true),
            None => (cfg.duration, false),
        };

        let g_now = match (&cfg.modulator, mod_alt) {
            (Some(m), true) => m.g_alt,
            _ => kin.g,
        };
        let prop = QpPropensities::new(kin, g_now, n);
        let mod_rate = match &cfg.modulator {
            Some(m) if mod_alt => 1.0 / m.mean_alt,
            Some(m) => 1.0 / m.mean_base,
            None => 0.0,
        };
        let qubit_rate = match state {
            QubitState::Excited => gamma_eg(n, kin, qubit),
            QubitState::Ground => gamma_ge(n, kin, qubit, temperature(t, excess, excess_ref)),
        };
        let qp_total = prop.total();
        let total = qp_total + mod_rate + qubit_rate;

        let dt = if total > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / total
        } else {
            f64::INFINITY
        };

        if t + dt >= next_time {
            t = next_time;
            if !is_pulse {
                break;
            }
            let pulse = cfg.pulses[next_pulse];
            next_pulse += 1;
            let dead_end = (pulse.start + pulse.length + cfg.pulse_wait).min(cfg.duration);
            truth.dead.push((pulse.start, dead_end));

            let injected = match cfg.inject_mode {
                InjectMode::Exact => pulse.inject.round() as u64,
                InjectMode::Poisson if pulse.inject > 0.0 => {
                    Poisson::new(pulse.inject).map(|d| d.sample(rng) as u64).unwrap_or(0)
                }
                InjectMode::Poisson => 0,
            };
            if injected > 0 {
                n += injected;
                qp_events.events.push(QpEvent {
                    time: t,
                    kind: QpEventKind::Injection,
                    n,
                });
                truth.entries.push(TruthEntry { time: t, state, n });
            }
            if let Some(th) = &cfg.thermal {
                let rise = thermal_transient(th, pulse.length).delta_t;
                excess = temperature(t, excess, excess_ref) - t_base + rise;
                excess_ref = t;
            }
            continue;
        }

        t += dt;
        let u = rng.random::<f64>() * total;
        if u < qp_total {
            let kind = prop.fire(u, &mut n);
            qp_events.events.push(QpEvent { time: t, kind, n });
            truth.entries.push(TruthEntry { time: t, state, n });
        } else if u < qp_total + mod_rate {
            mod_alt = !mod_alt;
            switches.push((t, mod_alt));
        } else {
            let accept = match state {
                QubitState::Excited => true,
                QubitState::Ground if excess == 0.0 => true,
                QubitState::Ground => {
                    let now = gamma_ge(n, kin, qubit, temperature(t, excess, excess_ref));
                    rng.random::<f64>() * qubit_rate < now
                }
            };
            if accept {
                state = state.flipped();
                truth.entries.push(TruthEntry { time: t, state, n });
            }
        }
    }

    Simulation {
        truth,
        qp_events,
        modulator_switches: switches,
    }
}

/// Stationary excited population of the qubit at fixed temperature; it does
/// not depend on the QP number since both rates share the same prefactor.
pub fn stationary_excited_population(f_ge: f64, temperature: f64) -> f64 {
    let b = units::boltzmann_factor(f_ge, temperature);
    b / (1.0 + b)
}
