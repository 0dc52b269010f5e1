use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::simplex::{nelder_mead, Minimum, SimplexOptions};
use crate::error::{Error, Result};
use crate::scalar::Real;

const ALPHA_MIN: f64 = 0.5;
const ALPHA_MAX: f64 = 3.0;
/// Grid points refined by Nelder–Mead.
const SIMPLEX_STARTS: usize = 4;

/// `A / (B + (2πf)^α) + C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdFit<T> {
    pub a: T,
    pub b: T,
    pub alpha: T,
    pub c: T,
    /// Bootstrap standard errors of `(a, b, alpha, c)`; NaN without resamples.
    pub se: [T; 4],
    /// Root-sum-square of the log-power residuals.
    pub residual_norm: T,
}

impl<T: Real> PsdFit<T> {
    pub fn eval(&self, f: T) -> T {
        psd_model(f, self.a, self.b, self.alpha, self.c)
    }
}

pub fn psd_model<T: Real>(f: T, a: T, b: T, alpha: T, c: T) -> T {
    a / (b + (T::TAU() * f).powf(alpha)) + c
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdFitOptions<T> {
    /// Segments averaged into each power value, used to remove the mean
    /// offset of a log periodogram (`ψ(K) - ln K`). `None` for an exact
    /// spectrum.
    pub periodogram_segments: Option<usize>,
    pub bootstrap: usize,
    pub seed: u64,
    pub simplex: SimplexOptions<T>,
}

impl<T: Real> Default for PsdFitOptions<T> {
    fn default() -> Self {
        Self {
            periodogram_segments: None,
            bootstrap: 200,
            seed: 0,
            simplex: SimplexOptions {
                ftol_abs: T::lit(1e-20),
                ftol_rel: T::lit(1e-12),
                ..SimplexOptions::default()
            },
        }
    }
}

/// Expected value of `ln(χ²_{2K} / 2K)`: `ψ(K) - ln K`.
pub fn log_periodogram_bias(segments: usize) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    let harmonic: f64 = (1..segments).map(|j| 1.0 / j as f64).sum();
    -EULER_GAMMA + harmonic - (segments as f64).ln()
}

struct Problem<T> {
    ln_omega: Vec<T>,
    ln_p: Vec<T>,
    ln_omega_lo: T,
    ln_omega_hi: T,
}

/// Outer parameters: `u` (α = 0.5 + 2.5 σ(u)) and `v`, the log of the knee
/// angular frequency, so `B = exp(α v)`.
impl<T: Real> Problem<T> {
    fn alpha(u: T) -> T {
        T::lit(ALPHA_MIN) + T::lit(ALPHA_MAX - ALPHA_MIN) / (T::one() + (-u).exp())
    }

    fn feasible(&self, v: T) -> bool {
        v <= self.ln_omega_hi && v >= self.ln_omega_lo - T::lit(3.0 * std::f64::consts::LN_10)
    }

    /// Shape `1 / (B + ω^α)` at each point.
    fn shape(&self, alpha: T, v: T) -> Vec<T> {
        self.ln_omega
            .iter()
            .map(|&lw| {
                // 1 / (e^{αv} + e^{α lw}) without overflow
                let (hi, lo) = if v > lw { (v, lw) } else { (lw, v) };
                (-(alpha * hi)).exp() / (T::one() + (alpha * (lo - hi)).exp())
            })
            .collect()
    }

    /// Non-negative `(A, C)` minimizing the log residuals for a fixed shape,
    /// and the resulting sum of squares.
    fn inner(&self, h: &[T], y: &[T]) -> (T, T, T) {
        let sse = |a: T, c: T| -> T {
            h.iter()
                .zip(y)
                .map(|(&hk, &yk)| {
                    let r = yk - (a * hk + c).ln();
                    r * r
                })
                .sum()
        };
        // start from relative-error weighted linear least squares
        let (mut s_hh, mut s_h, mut s_1, mut s_hp, mut s_p) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for (&hk, &yk) in h.iter().zip(y) {
            let p = yk.exp();
            let w = T::one() / (p * p);
            s_hh += w * hk * hk;
            s_h += w * hk;
            s_1 += w;
            s_hp += w * hk * p;
            s_p += w * p;
        }
        let det = s_hh * s_1 - s_h * s_h;
        let (mut a, mut c) = if det > T::zero() {
            ((s_1 * s_hp - s_h * s_p) / det, (s_hh * s_p - s_h * s_hp) / det)
        } else {
            (T::zero(), s_p / s_1)
        };
        let tiny = T::min_positive_value().sqrt();
        if a <= T::zero() || c <= T::zero() {
            let a_only = s_hp / s_hh;
            let c_only = s_p / s_1;
            if sse(a_only, tiny) < sse(tiny, c_only) {
                a = a_only;
                c = tiny;
            } else {
                a = tiny;
                c = c_only;
            }
        }
        let mut f = sse(a, c);
        // projected Gauss-Newton in (A, C)
        for _ in 0..100 {
            let (mut jaa, mut jac, mut jcc, mut ga, mut gc) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
            for (&hk, &yk) in h.iter().zip(y) {
                let m = a * hk + c;
                let r = yk - m.ln();
                let da = hk / m;
                let dc = T::one() / m;
                jaa += da * da;
                jac += da * dc;
                jcc += dc * dc;
                ga += da * r;
                gc += dc * r;
            }
            let det = jaa * jcc - jac * jac;
            if !(det > T::zero()) {
                break;
            }
            let step_a = (jcc * ga - jac * gc) / det;
            let step_c = (jaa * gc - jac * ga) / det;
            let mut t = T::one();
            let mut improved = false;
            for _ in 0..60 {
                let na = (a + t * step_a).max(tiny);
                let nc = (c + t * step_c).max(tiny);
                let nf = sse(na, nc);
                if nf <= f {
                    let rel = ((na - a) / a).abs().max(((nc - c) / c).abs());
                    improved = f - nf > T::lit(1e-13) * f && rel > T::lit(1e-10);
                    a = na;
                    c = nc;
                    f = nf;
                    break;
                }
                t *= T::lit(0.5);
            }
            if !improved {
                break;
            }
        }
        (a, c, f)
    }

    fn objective(&self, p: &[T], y: &[T]) -> T {
        if !self.feasible(p[1]) {
            return T::infinity();
        }
        let h = self.shape(Self::alpha(p[0]), p[1]);
        self.inner(&h, y).2
    }

    fn solve(&self, p: &[T], y: &[T]) -> (T, T, T, T, T) {
        let alpha = Self::alpha(p[0]);
        let h = self.shape(alpha, p[1]);
        let (a, c, f) = self.inner(&h, y);
        (a, (alpha * p[1]).exp(), alpha, c, f)
    }

    fn minimize(&self, y: &[T], start: &[T], opts: &SimplexOptions<T>) -> Result<Minimum<T>> {
        let step = [T::lit(0.5), T::lit(0.5)];
        nelder_mead(|p| self.objective(p, y), start, &step, opts)
    }
}

/// Fit of an exact (noise-free) spectrum with default options.
pub fn fit_power_law<T: Real>(freqs: &[T], power: &[T]) -> Result<PsdFit<T>> {
    fit_power_law_with(freqs, power, &PsdFitOptions::default())
}

/// Least squares in log power. For each trial exponent and knee the
/// non-negative amplitudes `A`, `C` are solved directly; the exponent and
/// knee are screened on a grid with `α = 0.5, 0.75, ..., 3.0`, and the best
/// few grid points are refined by Nelder–Mead. The knee
/// `B^(1/α)` is kept at or below the top angular frequency.
pub fn fit_power_law_with<T: Real>(freqs: &[T], power: &[T], opts: &PsdFitOptions<T>) -> Result<PsdFit<T>> {
    if freqs.len() != power.len() {
        return Err(Error::Domain("frequency and power lengths differ".into()));
    }
    if freqs.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "{} frequency points, need 8",
            freqs.len()
        )));
    }
    if freqs.iter().chain(power).any(|v| !(*v > T::zero() && v.is_finite())) {
        return Err(Error::Domain(
            "frequencies and powers must be positive and finite".into(),
        ));
    }
    let (f_lo, f_hi) = freqs
        .iter()
        .fold((T::infinity(), T::zero()), |(lo, hi), &f| (lo.min(f), hi.max(f)));
    if (f_hi / f_lo).log10() < T::lit(1.5) - T::lit(1e-9) {
        return Err(Error::InsufficientData("frequencies span less than 1.5 decades".into()));
    }
    let bias = T::lit(opts.periodogram_segments.map_or(0.0, log_periodogram_bias));
    let prob = Problem {
        ln_omega: freqs.iter().map(|f| (T::TAU() * *f).ln()).collect(),
        ln_p: power.iter().map(|p| p.ln() - bias).collect(),
        ln_omega_lo: (T::TAU() * f_lo).ln(),
        ln_omega_hi: (T::TAU() * f_hi).ln(),
    };

    let mut grid = Vec::new();
    for k in 0..=10 {
        let alpha = T::lit(ALPHA_MIN + 0.25 * k as f64);
        let frac = ((alpha - T::lit(ALPHA_MIN)) / T::lit(ALPHA_MAX - ALPHA_MIN))
            .max(T::lit(0.02))
            .min(T::lit(0.98));
        let u = (frac / (T::one() - frac)).ln();
        for q in [0.0, 0.1, 0.25, 0.5, 0.75] {
            let v = prob.ln_omega_lo + T::lit(q) * (prob.ln_omega_hi - prob.ln_omega_lo);
            grid.push((prob.objective(&[u, v], &prob.ln_p), vec![u, v]));
        }
    }
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let starts: Vec<Vec<T>> = grid.into_iter().take(SIMPLEX_STARTS).map(|(_, x)| x).collect();
    let results: Vec<Result<Minimum<T>>> = starts
        .par_iter()
        .map(|s| prob.minimize(&prob.ln_p, s, &opts.simplex))
        .collect();
    let mut best: Option<Minimum<T>> = None;
    let mut failure = None;
    for r in results {
        match r {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.f < b.f) {
                    best = Some(m);
                }
            }
            Err(e) => failure = Some(e),
        }
    }
    let best = match (best, failure) {
        (Some(b), _) => b,
        (None, Some(e)) => return Err(e),
        (None, None) => unreachable!("at least one start"),
    };
    let (a, b, alpha, c, sse) = prob.solve(&best.x, &prob.ln_p);

    let se = if opts.bootstrap > 0 {
        let h = prob.shape(alpha, best.x[1]);
        let fitted: Vec<T> = h.iter().map(|&hk| (a * hk + c).ln()).collect();
        let resid: Vec<T> = prob.ln_p.iter().zip(&fitted).map(|(y, m)| *y - *m).collect();
        // standard errors do not need the point estimate's precision
        let refit = SimplexOptions {
            ftol_rel: opts.simplex.ftol_rel.max(T::lit(1e-8)),
            xtol: opts.simplex.xtol.max(T::lit(1e-6)),
            restarts: 0,
            ..opts.simplex
        };
        let samples: Vec<[T; 4]> = (0..opts.bootstrap)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
                rng.set_stream(i as u64 + 1);
                let y: Vec<T> = fitted
                    .iter()
                    .map(|m| *m + *resid.choose(&mut rng).expect("non-empty"))
                    .collect();
                let x = match prob.minimize(&y, &best.x, &refit) {
                    Ok(m) => m.x,
                    Err(Error::NonConvergence { best, .. }) => best.into_iter().map(T::lit).collect(),
                    Err(_) => best.x.clone(),
                };
                let (a, b, al, c, _) = prob.solve(&x, &y);
                [a, b, al, c]
            })
            .collect();
        std_columns(&samples)
    } else {
        [T::nan(); 4]
    };

    Ok(PsdFit {
        a,
        b,
        alpha,
        c,
        se,
        residual_norm: sse.sqrt(),
    })
}

pub(crate) fn std_columns<T: Real, const N: usize>(rows: &[[T; N]]) -> [T; N] {
    let n = T::from_count(rows.len());
    let mut out = [T::nan(); N];
    if rows.len() < 2 {
        return out;
    }
    for (j, o) in out.iter_mut().enumerate() {
        let mean = rows.iter().map(|r| r[j]).sum::<T>() / n;
        let var = rows.iter().map(|r| (r[j] - mean) * (r[j] - mean)).sum::<T>() / (n - T::one());
        *o = var.sqrt();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, f0: f64, f1: f64) -> Vec<f64> {
        (0..n).map(|k| f0 * (f1 / f0).powf(k as f64 / (n - 1) as f64)).collect()
    }

    fn no_boot() -> PsdFitOptions<f64> {
        PsdFitOptions {
            bootstrap: 0,
            ..Default::default()
        }
    }

    #[test]
    fn exact_spectrum_round_trip() {
        let f = grid(200, 1e-4, 0.5);
        let (a, b, alpha, c) = (2.0, (std::f64::consts::TAU * 3e-3f64).powf(1.4), 1.4, 1e-2);
        let p: Vec<f64> = f.iter().map(|&x| psd_model(x, a, b, alpha, c)).collect();
        let fit = fit_power_law_with(&f, &p, &no_boot()).unwrap();
        assert!((fit.alpha - 1.4).abs() < 1e-3, "{fit:?}");
        assert!(fit.residual_norm < 1e-6);
    }

    #[test]
    fn bias_matches_exponential_law() {
        assert!((log_periodogram_bias(1) + 0.5772156649).abs() < 1e-9);
        assert!(log_periodogram_bias(100).abs() < 0.006);
    }

    #[test]
    fn too_few_points_or_decades() {
        let f = grid(7, 1e-3, 1.0);
        assert!(fit_power_law(&f, &[1.0; 7]).is_err());
        let f = grid(20, 1e-2, 0.3);
        assert!(matches!(fit_power_law(&f, &[1.0; 20]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn bootstrap_gives_finite_errors() {
        let f = grid(60, 1e-3, 1.0);
        let p: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(k, &x)| psd_model(x, 1.0, 1.0, 2.0, 1e-3) * (1.0 + 0.2 * ((k * 37 % 11) as f64 / 10.0 - 0.5)))
            .collect();
        let opts = PsdFitOptions {
            bootstrap: 40,
            seed: 9,
            ..Default::default()
        };
        let a = fit_power_law_with(&f, &p, &opts).unwrap();
        let b = fit_power_law_with(&f, &p, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.se.iter().all(|s| s.is_finite() && *s >= 0.0));
        assert!(a.se[2] > 0.0 && a.se[2] < 0.2);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn refit_is_a_projection(
            alpha in 0.8f64..2.7,
            knee in 1e-3f64..3e-2,
            ln_c in -6.0f64..-2.0,
        ) {
            let f = grid(120, 1e-4, 0.5);
            let b = (std::f64::consts::TAU * knee).powf(alpha);
            let p: Vec<f64> = f.iter().map(|&x| psd_model(x, 1.0, b, alpha, ln_c.exp())).collect();
            let fit = fit_power_law_with(&f, &p, &no_boot()).unwrap();
            let p2: Vec<f64> = f.iter().map(|&x| fit.eval(x)).collect();
            let fit2 = fit_power_law_with(&f, &p2, &no_boot()).unwrap();
            for (x, y) in [(fit.a, fit2.a), (fit.b, fit2.b), (fit.alpha, fit2.alpha), (fit.c, fit2.c)] {
                proptest::prop_assert!(((x - y) / x).abs() < 1e-6, "{:?} vs {:?}", fit, fit2);
            }
        }

        #[test]
        fn alpha_invariant_under_scaling(scale in 1e-3f64..1e3) {
            let f = grid(100, 1e-4, 0.5);
            let b = (std::f64::consts::TAU * 5e-3f64).powf(1.7);
            let p: Vec<f64> = f.iter().map(|&x| psd_model(x, 1.0, b, 1.7, 1e-3)).collect();
            let ps: Vec<f64> = p.iter().map(|v| v * scale).collect();
            let f1 = fit_power_law_with(&f, &p, &no_boot()).unwrap();
            let f2 = fit_power_law_with(&f, &ps, &no_boot()).unwrap();
            proptest::prop_assert!((f1.alpha - f2.alpha).abs() < 1e-6);
            proptest::prop_assert!((f2.c / f1.c / scale - 1.0).abs() < 1e-5);
        }
    }
}
