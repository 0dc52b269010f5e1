use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::psd::std_columns;
use crate::error::{Error, Result};
use crate::jumps::qp_density_from_rate;
use crate::params::QubitParams;
use crate::scalar::Real;

/// `offset + amplitude · exp(-t / tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit<T> {
    pub offset: T,
    pub amplitude: T,
    /// NaN when not identifiable.
    pub tau: T,
    /// False when the data carry no decay (zero amplitude, or the best time
    /// constant sits on the edge of the search range).
    pub identifiable: bool,
    pub residual_norm: T,
    /// Fraction of the variance about the (weighted) mean explained by the
    /// fit; NaN for constant data.
    pub r_squared: T,
}

impl<T: Real> ExpFit<T> {
    pub fn eval(&self, t: T) -> T {
        if self.tau.is_nan() {
            self.offset + self.amplitude
        } else {
            self.offset + self.amplitude * (-t / self.tau).exp()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFitOptions<T> {
    /// Per-point least-squares weights; uniform when `None`.
    pub weights: Option<Vec<T>>,
    /// Residual-bootstrap resamples for standard errors (0 disables).
    pub bootstrap: usize,
    pub seed: u64,
}

impl<T> Default for DecayFitOptions<T> {
    fn default() -> Self {
        Self {
            weights: None,
            bootstrap: 200,
            seed: 0,
        }
    }
}

struct Decay<'a, T> {
    t: &'a [T],
    w: Vec<T>,
    nonneg: bool,
}

impl<T: Real> Decay<'_, T> {
    /// Best `(offset, amplitude, sse)` at fixed `tau`.
    fn linear(&self, tau: T, y: &[T]) -> (T, T, T) {
        let e: Vec<T> = self.t.iter().map(|&t| (-t / tau).exp()).collect();
        let (mut sw, mut se, mut see, mut sy, mut sey) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for ((&ei, &yi), &wi) in e.iter().zip(y).zip(&self.w) {
            sw += wi;
            se += wi * ei;
            see += wi * ei * ei;
            sy += wi * yi;
            sey += wi * ei * yi;
        }
        let sse = |c: T, a: T| -> T {
            e.iter()
                .zip(y)
                .zip(&self.w)
                .map(|((&ei, &yi), &wi)| {
                    let r = yi - c - a * ei;
                    wi * r * r
                })
                .sum()
        };
        let det = sw * see - se * se;
        let mut cands = Vec::with_capacity(4);
        if det > T::epsilon() * sw * see {
            let c = (see * sy - se * sey) / det;
            let a = (sw * sey - se * sy) / det;
            cands.push((c, a));
        }
        if self.nonneg || cands.is_empty() {
            cands.push((sy / sw, T::zero()));
            if see > T::zero() {
                cands.push((T::zero(), sey / see));
            }
            cands.push((T::zero(), T::zero()));
        }
        cands
            .into_iter()
            .filter(|&(c, a)| !self.nonneg || (c >= T::zero() && a >= T::zero()))
            .map(|(c, a)| (c, a, sse(c, a)))
            .fold((T::zero(), T::zero(), T::infinity()), |best, cur| {
                if cur.2 < best.2 {
                    cur
                } else {
                    best
                }
            })
    }

    fn fit(&self, y: &[T]) -> ExpFit<T> {
        let (t_lo, t_hi) = self.t.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &t| {
            (lo.min(t), hi.max(t))
        });
        let span = (t_hi - t_lo).max(T::epsilon());
        let mut gaps: Vec<T> = self
            .t
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .filter(|d| *d > T::zero())
            .collect();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let min_gap = gaps.first().copied().unwrap_or(span);
        let lo = (min_gap * T::lit(0.1)).ln();
        let hi = (span * T::lit(100.0)).ln();
        let n_grid = 400;
        let at = |k: usize| lo + (hi - lo) * T::from_count(k) / T::from_count(n_grid - 1);
        let prof = |s: T| self.linear(s.exp(), y).2;
        let mut k_best = 0;
        let mut f_best = T::infinity();
        for k in 0..n_grid {
            let f = prof(at(k));
            if f < f_best {
                f_best = f;
                k_best = k;
            }
        }
        let mut a = at(k_best.saturating_sub(1));
        let mut b = at((k_best + 1).min(n_grid - 1));
        // golden-section refinement in ln tau
        let inv_phi = T::lit(0.618_033_988_749_894_8);
        let mut x1 = b - inv_phi * (b - a);
        let mut x2 = a + inv_phi * (b - a);
        let (mut f1, mut f2) = (prof(x1), prof(x2));
        for _ in 0..200 {
            if (b - a).abs() < T::lit(1e-13) {
                break;
            }
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - inv_phi * (b - a);
                f1 = prof(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + inv_phi * (b - a);
                f2 = prof(x2);
            }
        }
        let s = if f1 <= f2 { x1 } else { x2 };
        let s = if prof(s) <= f_best { s } else { at(k_best) };
        let tau = s.exp();
        let (offset, amplitude, sse) = self.linear(tau, y);

        let sw: T = self.w.iter().copied().sum();
        let mean = y.iter().zip(&self.w).map(|(v, w)| *v * *w).sum::<T>() / sw;
        let sst: T = y.iter().zip(&self.w).map(|(v, w)| *w * (*v - mean) * (*v - mean)).sum();
        let scale = y.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let flat =
            amplitude.abs() <= T::lit(1e-9) * scale || sst <= T::epsilon() * scale * scale * T::from_count(y.len());
        let edge = k_best == 0 || k_best == n_grid - 1;
        let identifiable = !flat && !edge;
        let r_squared = if sst > T::zero() {
            T::one() - sse / sst
        } else {
            T::nan()
        };
        if flat {
            return ExpFit {
                offset: mean,
                amplitude: T::zero(),
                tau: T::nan(),
                identifiable: false,
                residual_norm: sst.max(T::zero()).sqrt(),
                r_squared,
            };
        }
        ExpFit {
            offset,
            amplitude,
            tau: if identifiable { tau } else { T::nan() },
            identifiable,
            residual_norm: sse.sqrt(),
            r_squared,
        }
    }
}

/// Least-squares exponential decay via variable projection: the offset and
/// amplitude are solved linearly for each time constant, which is found by
/// a log-spaced grid search and golden-section refinement. With `nonneg`
/// both linear coefficients are constrained to be non-negative. Returns the
/// fit and bootstrap standard errors of `(offset, amplitude, tau)`.
pub fn fit_exp_decay<T: Real>(
    t: &[T],
    y: &[T],
    nonneg: bool,
    opts: &DecayFitOptions<T>,
) -> Result<(ExpFit<T>, [T; 3])> {
    if t.len() != y.len() {
        return Err(Error::Domain("time and value lengths differ".into()));
    }
    if t.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Domain("times and values must be finite".into()));
    }
    let w = match &opts.weights {
        Some(w) if w.len() != t.len() || w.iter().any(|x| !(*x >= T::zero() && x.is_finite())) => {
            return Err(Error::Domain(
                "weights must be finite, non-negative and match the data".into(),
            ))
        }
        Some(w) => w.clone(),
        None => vec![T::one(); t.len()],
    };
    let d = Decay { t, w, nonneg };
    let fit = d.fit(y);
    let se = if opts.bootstrap > 0 && fit.identifiable {
        let model: Vec<T> = t.iter().map(|&ti| fit.eval(ti)).collect();
        // residuals scaled to unit weight so they are exchangeable
        let scale: Vec<T> = d.w.iter().map(|w| w.sqrt()).collect();
        let resid: Vec<T> = y
            .iter()
            .zip(&model)
            .zip(&scale)
            .filter(|(_, s)| **s > T::zero())
            .map(|((a, b), s)| (*a - *b) * *s)
            .collect();
        let rows: Vec<[T; 3]> = (0..opts.bootstrap)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(i as u64 + 1);
                let yb: Vec<T> = model
                    .iter()
                    .zip(&scale)
                    .map(|(m, s)| {
                        if *s > T::zero() {
                            *m + *resid.choose(&mut rng).expect("non-empty") / *s
                        } else {
                            *m
                        }
                    })
                    .collect();
                let f = d.fit(&yb);
                [f.offset, f.amplitude, f.tau]
            })
            .filter(|r: &[T; 3]| r[2].is_finite())
            .collect();
        std_columns(&rows)
    } else {
        [T::nan(); 3]
    };
    Ok((fit, se))
}

/// Relaxation of the QP density after injection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryFit<T> {
    /// NaN when not identifiable.
    pub tau_ss: T,
    pub x_bar: T,
    pub x0: T,
    /// Bootstrap standard errors of `(tau_ss, x_bar, x0)`.
    pub se: [T; 3],
    pub residual_norm: T,
    pub identifiable: bool,
}

impl<T: Real> RecoveryFit<T> {
    /// Effective generation coefficient `x̄ / τ_ss`.
    pub fn g_eff(&self) -> T {
        self.x_bar / self.tau_ss
    }

    pub fn eval(&self, t: T) -> T {
        if self.tau_ss.is_nan() {
            self.x_bar
        } else {
            self.x_bar + (self.x0 - self.x_bar) * (-t / self.tau_ss).exp()
        }
    }
}

/// Map mean excited dwells to QP densities and fit
/// `x̄ + (x₀ - x̄) exp(-t / τ_ss)` with `0 <= x̄ <= x₀`.
pub fn fit_recovery<T: Real>(times: &[T], tau_e: &[T], qubit: &QubitParams<T>) -> Result<RecoveryFit<T>> {
    fit_recovery_with(times, tau_e, qubit, &DecayFitOptions::default())
}

pub fn fit_recovery_with<T: Real>(
    times: &[T],
    tau_e: &[T],
    qubit: &QubitParams<T>,
    opts: &DecayFitOptions<T>,
) -> Result<RecoveryFit<T>> {
    if times.len() != tau_e.len() {
        return Err(Error::Domain("time and lifetime lengths differ".into()));
    }
    if times.len() < 5 {
        return Err(Error::InsufficientData(format!("{} time bins, need 5", times.len())));
    }
    let mut x = Vec::with_capacity(times.len());
    for (&t, &tau) in times.iter().zip(tau_e) {
        if !(tau > T::zero() && tau.is_finite()) {
            return Err(Error::Domain(format!(
                "mean excited dwell {tau} at t = {t} s must be positive"
            )));
        }
        let rate = T::one() / tau;
        if rate / qubit.relaxation_multiplier < qubit.gamma_other {
            return Err(Error::InconsistentBackground {
                time: t.as_f64(),
                rate: rate.as_f64(),
                gamma_other: qubit.gamma_other.as_f64(),
            });
        }
        x.push(qp_density_from_rate(rate, qubit));
    }
    let (fit, se) = fit_exp_decay(times, &x, true, opts)?;
    Ok(RecoveryFit {
        tau_ss: fit.tau,
        x_bar: fit.offset,
        x0: fit.offset + fit.amplitude,
        se: [se[2], se[0], (se[0] * se[0] + se[1] * se[1]).sqrt()],
        residual_norm: fit.residual_norm,
        identifiable: fit.identifiable,
    })
}

/// Exponential relaxation of the bath temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalFit<T> {
    pub t_base: T,
    pub delta_t: T,
    /// NaN when not identifiable.
    pub tau_th: T,
    /// Bootstrap standard errors of `(t_base, delta_t, tau_th)`.
    pub se: [T; 3],
    pub residual_norm: T,
    pub identifiable: bool,
    /// Set when the exponential explains less than half of the variance.
    pub warning: Option<String>,
}

impl<T: Real> ThermalFit<T> {
    pub fn eval(&self, t: T) -> T {
        if self.tau_th.is_nan() {
            self.t_base + self.delta_t
        } else {
            self.t_base + self.delta_t * (-t / self.tau_th).exp()
        }
    }
}

/// Fit `T_base + ΔT exp(-t / τ_th)`.
pub fn fit_thermal<T: Real>(times: &[T], temperatures: &[T]) -> Result<ThermalFit<T>> {
    fit_thermal_with(times, temperatures, &DecayFitOptions::default())
}

pub fn fit_thermal_with<T: Real>(times: &[T], temperatures: &[T], opts: &DecayFitOptions<T>) -> Result<ThermalFit<T>> {
    if times.len() < 4 {
        return Err(Error::InsufficientData(format!("{} points, need 4", times.len())));
    }
    let (fit, se) = fit_exp_decay(times, temperatures, false, opts)?;
    let warning = (fit.r_squared < T::lit(0.5)).then(|| {
        format!(
            "data are not dominated by a monotone decay (R² = {:.3})",
            fit.r_squared.as_f64()
        )
    });
    Ok(ThermalFit {
        t_base: fit.offset,
        delta_t: fit.amplitude,
        tau_th: fit.tau,
        se,
        residual_norm: fit.residual_norm,
        identifiable: fit.identifiable,
        warning,
    })
}
