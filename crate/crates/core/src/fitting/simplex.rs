use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions<T> {
    /// Cap on objective evaluations per restart.
    pub max_evals: usize,
    /// Converged when the simplex spread in `f` falls below
    /// `ftol_abs + ftol_rel |f_best|` ...
    pub ftol_abs: T,
    pub ftol_rel: T,
    /// ... and every vertex lies within `xtol` of the best in each coordinate.
    pub xtol: T,
    /// Restarts from the best point with a fresh simplex.
    pub restarts: usize,
}

impl<T: Real> Default for SimplexOptions<T> {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            ftol_abs: T::lit(1e-30),
            ftol_rel: T::lit(1e-14),
            xtol: T::lit(1e-10),
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub f: T,
    pub evals: usize,
}

/// Nelder–Mead minimization of `f` from `x0` with initial simplex steps
/// `step`. Non-finite objective values count as `+inf`.
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], step: &[T], opts: &SimplexOptions<T>) -> Result<Minimum<T>>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let mut eval = |x: &[T]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::infinity()
        }
    };
    let mut best = x0.to_vec();
    let mut best_f = eval(&best);
    let mut total_evals = 1;
    for round in 0..=opts.restarts {
        let (x, fx, evals, converged) = run(&mut eval, &best, step, opts);
        total_evals += evals;
        let improved = fx < best_f;
        if fx <= best_f {
            best = x;
            best_f = fx;
        }
        if !converged {
            return Err(Error::NonConvergence {
                iterations: total_evals,
                objective: best_f.as_f64(),
                best: best.iter().map(|v| v.as_f64()).collect(),
            });
        }
        if round > 0 && !improved {
            break;
        }
    }
    Ok(Minimum {
        x: best,
        f: best_f,
        evals: total_evals,
    })
}

fn run<T, F>(eval: &mut F, x0: &[T], step: &[T], opts: &SimplexOptions<T>) -> (Vec<T>, T, usize, bool)
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let mut pts: Vec<Vec<T>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    let mut vals: Vec<T> = pts.iter().map(|p| eval(p)).collect();
    let mut evals = n + 1;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let spread_f = vals[n] - vals[0];
        let spread_x = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (*a - *b).abs()))
            .fold(T::zero(), T::max);
        if spread_f <= opts.ftol_abs + opts.ftol_rel * vals[0].abs() && spread_x <= opts.xtol {
            return (pts[0].clone(), vals[0], evals, true);
        }
        if evals >= opts.max_evals {
            return (pts[0].clone(), vals[0], evals, false);
        }

        let mut centroid = vec![T::zero(); n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += *v;
            }
        }
        let nf = T::from_count(n);
        for c in &mut centroid {
            *c /= nf;
        }
        let along = |t: T| -> Vec<T> { centroid.iter().zip(&pts[n]).map(|(c, w)| *c + t * (*w - *c)).collect() };

        let xr = along(-T::one());
        let fr = eval(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = along(-two);
            let fe = eval(&xe);
            evals += 1;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let x = along(-half);
            let v = eval(&x);
            (x, v)
        } else {
            let x = along(half);
            let v = eval(&x);
            (x, v)
        };
        evals += 1;
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<T> = pts[i].iter().zip(&pts[0]).map(|(p, b)| *b + half * (*p - *b)).collect();
            vals[i] = eval(&shrunk);
            pts[i] = shrunk;
        }
        evals += n;
    }
}
