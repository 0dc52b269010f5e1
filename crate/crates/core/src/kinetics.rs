//! Quasiparticle density dynamics `dx/dt = g - s x - r x²`: steady state,
//! linearized relaxation, a fixed-step RK4 integrator, and an exact-jump
//! sampler of the discrete QP number.

use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::QpKineticsParams;
use crate::scalar::Real;

/// Unique non-negative root of `g - s x - r x² = 0`.
pub fn steady_state<T: Real>(p: &QpKineticsParams<T>) -> Result<T> {
    let zero = T::zero();
    if p.g == zero {
        return Ok(zero);
    }
    if p.s == zero && p.r == zero {
        return Err(Error::NoSteadyState { g: p.g.as_f64() });
    }
    if p.r == zero {
        return Ok(p.g / p.s);
    }
    // Rationalized root; avoids cancellation when 4 r g << s².
    let disc = (p.s * p.s + T::lit(4.0) * p.r * p.g).sqrt();
    Ok((p.g + p.g) / (p.s + disc))
}

/// Linearized relaxation time `1 / (s + 2 r x̄)` around the steady state.
pub fn tau_ss<T: Real>(p: &QpKineticsParams<T>, x_bar: T) -> Result<T> {
    let rate = p.s + T::lit(2.0) * p.r * x_bar;
    if rate <= T::zero() {
        return Err(Error::InfiniteRelaxation);
    }
    Ok(rate.recip())
}

/// `x̄ + (x₀ - x̄) exp(-t / τ)`.
#[inline]
pub fn linearized<T: Real>(x0: T, x_bar: T, tau: T, t: T) -> T {
    x_bar + (x0 - x_bar) * (-t / tau).exp()
}

#[inline]
fn rhs<T: Real>(p: &QpKineticsParams<T>, x: T) -> T {
    p.g - p.s * x - p.r * x * x
}

/// Integrate the rate equation with classical RK4, returning `x` at every
/// grid time. `x0` is the value at `t_grid[0]`. The step never exceeds
/// 1/100 of the local relaxation time.
pub fn evolve_ode<T: Real>(x0: T, p: &QpKineticsParams<T>, t_grid: &[T]) -> Result<Vec<T>> {
    if !(x0 >= T::zero()) || !x0.is_finite() {
        return Err(Error::Domain(format!("initial density {x0} must be non-negative")));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    let x_bar = steady_state(p).unwrap_or(T::zero());
    let x_max = if x0 > x_bar { x0 } else { x_bar };
    let fastest = p.s + T::lit(2.0) * p.r * x_max;
    let h_max = if fastest > T::zero() {
        fastest.recip() / T::lit(100.0)
    } else {
        T::infinity()
    };

    let two = T::lit(2.0);
    let six = T::lit(6.0);
    let mut out = Vec::with_capacity(t_grid.len());
    let mut x = x0;
    if !t_grid.is_empty() {
        out.push(x);
    }
    for w in t_grid.windows(2) {
        let span = w[1] - w[0];
        let steps = if h_max.is_finite() {
            (span / h_max).ceil().to_usize().unwrap_or(1).max(1)
        } else {
            1
        };
        let h = span / T::from_count(steps);
        for _ in 0..steps {
            let k1 = rhs(p, x);
            let k2 = rhs(p, x + h / two * k1);
            let k3 = rhs(p, x + h / two * k2);
            let k4 = rhs(p, x + h * k3);
            x += h / six * (k1 + two * k2 + two * k3 + k4);
            if x < T::zero() {
                x = T::zero();
            }
        }
        out.push(x);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpEventKind {
    /// A broken Cooper pair: N += 2.
    PairGeneration,
    /// Trapping or diffusion of one QP: N -= 1.
    SingleLoss,
    /// Two QPs recombine: N -= 2.
    Recombination,
    /// Pulse injection: N += injected count.
    Injection,
}

impl fmt::Display for QpEventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QpEventKind::PairGeneration => "pair_generation",
            QpEventKind::SingleLoss => "single_loss",
            QpEventKind::Recombination => "recombination",
            QpEventKind::Injection => "injection",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpEvent {
    pub time: f64,
    pub kind: QpEventKind,
    /// QP count after the event.
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct QpEventTrace {
    pub n0: u64,
    pub events: Vec<QpEvent>,
}

impl QpEventTrace {
    /// QP count in force at time `t`.
    pub fn n_at(&self, t: f64) -> u64 {
        let idx = self.events.partition_point(|e| e.time <= t);
        if idx == 0 {
            self.n0
        } else {
            self.events[idx - 1].n
        }
    }

    /// CSV `time_s,event,N`, starting with an `initial` row at t = 0.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,event,N")?;
        writeln!(w, "{},initial,{}", crate::io::fmt9(0.0), self.n0)?;
        for e in &self.events {
            writeln!(w, "{},{},{}", crate::io::fmt9(e.time), e.kind, e.n)?;
        }
        Ok(())
    }
}

/// Reaction propensities of the discrete QP population.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QpPropensities {
    pub pair_generation: f64,
    pub single_loss: f64,
    pub recombination: f64,
}

impl QpPropensities {
    pub fn new(p: &QpKineticsParams<f64>, g: f64, n: u64) -> Self {
        let nf = n as f64;
        Self {
            pair_generation: g * p.n_cp / 2.0,
            single_loss: p.s * nf,
            recombination: if n >= 2 {
                p.r * nf * (nf - 1.0) / (2.0 * p.n_cp)
            } else {
                0.0
            },
        }
    }

    pub fn total(&self) -> f64 {
        self.pair_generation + self.single_loss + self.recombination
    }

    /// Pick a channel given `u` uniform in `[0, total)` and apply it to `n`.
    pub fn fire(&self, u: f64, n: &mut u64) -> QpEventKind {
        if u < self.pair_generation {
            *n += 2;
            QpEventKind::PairGeneration
        } else if u < self.pair_generation + self.single_loss || self.recombination == 0.0 {
            *n = n.saturating_sub(1);
            QpEventKind::SingleLoss
        } else {
            *n = n.saturating_sub(2);
            QpEventKind::Recombination
        }
    }
}

/// Exact-jump sampling of the QP number over `[0, duration]`.
pub fn sample_birth_death<R: Rng + ?Sized>(
    n0: u64,
    p: &QpKineticsParams<f64>,
    duration: f64,
    rng: &mut R,
) -> QpEventTrace {
    let mut trace = QpEventTrace { n0, events: Vec::new() };
    let mut n = n0;
    let mut t = 0.0;
    loop {
        let prop = QpPropensities::new(p, p.g, n);
        let total = prop.total();
        if total <= 0.0 {
            break;
        }
        let dt: f64 = Exp1.sample(rng);
        t += dt / total;
        if t > duration {
            break;
        }
        let u = rng.random::<f64>() * total;
        let kind = prop.fire(u, &mut n);
        trace.events.push(QpEvent { time: t, kind, n });
    }
    trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(g: f64, s: f64, r: f64) -> QpKineticsParams<f64> {
        QpKineticsParams { g, s, r, n_cp: 3.75e7 }
    }

    #[test]
    fn steady_state_examples() {
        assert_relative_eq!(
            steady_state(&params(3.2e-4, 8000.0, 0.0)).unwrap(),
            4.0e-8,
            max_relative = 1e-12
        );
        assert_eq!(steady_state(&params(0.0, 10.0, 3.0)).unwrap(), 0.0);
        assert_relative_eq!(steady_state(&params(1.0, 0.0, 4.0)).unwrap(), 0.5, max_relative = 1e-15);
        assert!(matches!(
            steady_state(&params(1.0, 0.0, 0.0)),
            Err(Error::NoSteadyState { .. })
        ));
    }

    #[test]
    fn tau_ss_examples() {
        assert_relative_eq!(
            tau_ss(&params(0.0, 8000.0, 0.0), 4e-8).unwrap(),
            125e-6,
            max_relative = 1e-12
        );
        assert_relative_eq!(tau_ss(&params(0.0, 0.0, 4.0), 0.5).unwrap(), 0.25, max_relative = 1e-15);
        assert_relative_eq!(
            tau_ss(&params(0.0, 1000.0, 1e10), 1e-7).unwrap(),
            1.0 / 3000.0,
            max_relative = 1e-12
        );
        assert!(matches!(
            tau_ss(&params(0.0, 0.0, 0.0), 0.0),
            Err(Error::InfiniteRelaxation)
        ));
    }

    #[test]
    fn linearized_examples() {
        let (xb, tau) = (4e-8, 125e-6);
        assert_eq!(linearized(2.0 * xb, xb, tau, 0.0), 2.0 * xb);
        assert_relative_eq!(linearized(2.0 * xb, xb, tau, 1.0), xb, max_relative = 1e-12);
        assert_relative_eq!(
            linearized(2.0 * xb, xb, tau, tau),
            xb * (1.0 + (-1.0f64).exp()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn ode_fixed_point_and_frozen_dynamics() {
        let p = params(3.2e-4, 8000.0, 1e3);
        let xb = steady_state(&p).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 2e-5).collect();
        for x in evolve_ode(xb, &p, &grid).unwrap() {
            assert_relative_eq!(x, xb, max_relative = 1e-10);
        }
        let frozen = params(0.0, 0.0, 0.0);
        for x in evolve_ode(0.3, &frozen, &grid).unwrap() {
            assert_eq!(x, 0.3);
        }
    }

    #[test]
    fn ode_small_perturbation_matches_linear_solution() {
        let p = params(3.2e-4, 8000.0, 0.0);
        let xb = steady_state(&p).unwrap();
        let tau = tau_ss(&p, xb).unwrap();
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 2.5e-5).collect();
        let xs = evolve_ode(1.01 * xb, &p, &grid).unwrap();
        for (x, t) in xs.iter().zip(&grid) {
            assert_relative_eq!(*x, linearized(1.01 * xb, xb, tau, *t), max_relative = 1e-6);
        }
    }

    #[test]
    fn ode_rejects_negative_start_and_bad_grid() {
        let p = params(3.2e-4, 8000.0, 0.0);
        assert!(evolve_ode(-1e-9, &p, &[0.0, 1.0]).is_err());
        assert!(evolve_ode(1e-9, &p, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn ode_single_precision() {
        let p = QpKineticsParams::<f32> {
            g: 3.2e-4,
            s: 8000.0,
            r: 0.0,
            n_cp: 3.75e7,
        };
        let xs = evolve_ode(8e-8_f32, &p, &[0.0, 125e-6, 1e-3]).unwrap();
        assert!((xs[1] / (4e-8 * (1.0 + (-1.0f32).exp())) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn pure_decay_has_exponential_lifetime() {
        let p = QpKineticsParams {
            g: 0.0,
            s: 2000.0,
            r: 0.0,
            n_cp: 1e6,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let runs = 20_000;
        let mut sum = 0.0;
        for _ in 0..runs {
            let tr = sample_birth_death(1, &p, 1.0, &mut rng);
            assert_eq!(tr.events.len(), 1);
            assert_eq!(tr.events[0].kind, QpEventKind::SingleLoss);
            sum += tr.events[0].time;
        }
        let mean = sum / runs as f64;
        // standard error of an exponential mean is mean/sqrt(runs)
        assert!((mean - 5e-4).abs() < 3.0 * 5e-4 / (runs as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn no_generation_leaves_zero_absorbing() {
        let p = params(0.0, 8000.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tr = sample_birth_death(0, &p, 1.0, &mut rng);
        assert!(tr.events.is_empty());
    }

    #[test]
    fn default_regime_holds_one_to_two_qps() {
        let p = params(3.2e-4, 8000.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tr = sample_birth_death(0, &p, 2.0, &mut rng);
        // time-average of N after a burn-in of 10 relaxation times
        let (mut acc, mut t_prev, mut n_prev) = (0.0, 1.25e-3, tr.n_at(1.25e-3));
        for e in tr.events.iter().filter(|e| e.time > 1.25e-3) {
            acc += n_prev as f64 * (e.time - t_prev);
            t_prev = e.time;
            n_prev = e.n;
        }
        acc += n_prev as f64 * (2.0 - t_prev);
        let mean = acc / (2.0 - 1.25e-3);
        assert!((1.0..=2.0).contains(&mean), "mean N = {mean}");
    }

    #[test]
    fn csv_has_header_and_initial_row() {
        let tr = QpEventTrace {
            n0: 3,
            events: vec![QpEvent {
                time: 1e-4,
                kind: QpEventKind::SingleLoss,
                n: 2,
            }],
        };
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "time_s,event,N");
        assert!(lines[1].ends_with(",initial,3"));
        assert!(lines[2].ends_with(",single_loss,2"));
    }

    proptest::proptest! {
        #[test]
        fn steady_state_is_a_root(g in 1e-6f64..1.0, s in 0.0f64..1e4, r in 0.0f64..1e4) {
            proptest::prop_assume!(s > 0.0 || r > 0.0);
            let p = params(g, s, r);
            let x = steady_state(&p).unwrap();
            proptest::prop_assert!(x >= 0.0);
            proptest::prop_assert!((g - s * x - r * x * x).abs() < 1e-15 * g);
        }

        #[test]
        fn ode_converges_within_ten_relaxation_times(frac in 0.0f64..3.0, r in 0.0f64..1e12) {
            let p = params(3.2e-4, 8000.0, r);
            let xb = steady_state(&p).unwrap();
            let tau = tau_ss(&p, xb).unwrap();
            let xs = evolve_ode(frac * xb, &p, &[0.0, 10.0 * tau]).unwrap();
            proptest::prop_assert!(((xs[1] - xb) / xb).abs() < 1e-4);
        }

        #[test]
        fn linear_decay_leaves_e_minus_ten_of_initial_offset(frac in 0.0f64..10.0) {
            let p = params(3.2e-4, 8000.0, 0.0);
            let xb = steady_state(&p).unwrap();
            let tau = tau_ss(&p, xb).unwrap();
            let xs = evolve_ode(frac * xb, &p, &[0.0, 10.0 * tau]).unwrap();
            let expect = (frac - 1.0) * (-10.0f64).exp();
            proptest::prop_assert!(((xs[1] - xb) / xb - expect).abs() < 1e-9);
        }

        #[test]
        fn ode_approach_from_above_is_monotone(frac in 1.0f64..10.0) {
            let p = params(3.2e-4, 8000.0, 1e10);
            let xb = steady_state(&p).unwrap();
            let grid: Vec<f64> = (0..60).map(|i| i as f64 * 2e-5).collect();
            let xs = evolve_ode(frac * xb, &p, &grid).unwrap();
            for w in xs.windows(2) {
                proptest::prop_assert!(w[1] <= w[0] && w[1] >= xb * (1.0 - 1e-12));
            }
        }

        #[test]
        fn sampled_traces_respect_event_invariants(
            seed in proptest::num::u64::ANY,
            n0 in 0u64..20,
            g in 0.0f64..1e-3,
            s in 1.0f64..2e4,
            r in 0.0f64..1e9,
        ) {
            let p = params(g, s, r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tr = sample_birth_death(n0, &p, 2e-3, &mut rng);
            let mut prev_t = 0.0;
            let mut prev_n = n0 as i64;
            for e in &tr.events {
                proptest::prop_assert!(e.time > prev_t && e.time <= 2e-3);
                let dn = e.n as i64 - prev_n;
                match e.kind {
                    QpEventKind::PairGeneration => proptest::prop_assert_eq!(dn, 2),
                    QpEventKind::SingleLoss => proptest::prop_assert_eq!(dn, -1),
                    QpEventKind::Recombination => proptest::prop_assert_eq!(dn, -2),
                    QpEventKind::Injection => proptest::prop_assert!(dn >= 0),
                }
                prev_t = e.time;
                prev_n = e.n as i64;
            }
        }
    }
}
