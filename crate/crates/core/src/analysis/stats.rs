use super::filter::StateEstimate;
use crate::error::{Error, Result};
use crate::jumps::QubitState;
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polarization {
    pub p_excited: f64,
    /// `p_g - p_e`.
    pub sigma_z: f64,
    pub samples: usize,
}

/// Excited fraction and mean polarization over the observed samples.
pub fn polarization(est: &StateEstimate) -> Result<Polarization> {
    let mut n = 0usize;
    let mut n_e = 0usize;
    for s in est.states.iter().flatten() {
        n += 1;
        if *s == QubitState::Excited {
            n_e += 1;
        }
    }
    if n == 0 {
        return Err(Error::InsufficientData("no observed samples".into()));
    }
    let p_e = n_e as f64 / n as f64;
    Ok(Polarization {
        p_excited: p_e,
        sigma_z: units::sigma_z_from_excited(p_e),
        samples: n,
    })
}

/// Normalized cross-correlation with population standard deviations.
pub fn cross_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Domain("series must have equal length >= 2".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Undefined("cross-correlation of a constant series".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::filter::FilterThresholds;

    fn est(n_g: usize, n_e: usize) -> StateEstimate {
        let mut states = vec![Some(QubitState::Ground); n_g];
        states.extend(vec![Some(QubitState::Excited); n_e]);
        states.push(None);
        StateEstimate {
            t_m: 5e-6,
            states,
            thresholds: FilterThresholds {
                separation: 2.59,
                margin: 0.5,
            },
        }
    }

    #[test]
    fn polarization_examples() {
        assert_eq!(polarization(&est(10, 0)).unwrap().sigma_z, 1.0);
        assert_eq!(polarization(&est(5, 5)).unwrap().sigma_z, 0.0);
        let p = polarization(&est(67, 33)).unwrap();
        assert!((p.sigma_z - 0.34).abs() < 1e-12);
        let t = units::polarization_to_temperature(p.p_excited, 665e6).unwrap();
        assert!((t - 0.045).abs() < 0.5e-3);
        assert!(polarization(&est(0, 0)).is_err());
    }

    #[test]
    fn correlation_examples() {
        let a = [1.0, 2.0, 3.0];
        assert!((cross_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((cross_correlation(&a, &[-1.0, -2.0, -3.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!((cross_correlation(&a, &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(cross_correlation(&a, &[1.0; 3]), Err(Error::Undefined(_))));
    }

    proptest::proptest! {
        #[test]
        fn correlation_affine_invariant(
            ab in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..50),
            alpha in 0.01f64..100.0,
            beta in -100.0f64..100.0,
        ) {
            let a: Vec<f64> = ab.iter().map(|p| p.0).collect();
            let b: Vec<f64> = ab.iter().map(|p| p.1).collect();
            if let Ok(c1) = cross_correlation(&a, &b) {
                let a2: Vec<f64> = a.iter().map(|x| alpha * x + beta).collect();
                let c2 = cross_correlation(&a2, &b).unwrap();
                proptest::prop_assert!((c1 - c2).abs() < 1e-9);
                proptest::prop_assert!((-1.0..=1.0).contains(&c1));
            }
        }
    }
}
