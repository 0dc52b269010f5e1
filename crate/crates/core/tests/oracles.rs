//! Independent oracles for the kinetics, the QP number sampler, the state
//! filter and the periodogram.

mod common;

use common::*;
use proptest::prelude::*;
use qpjumps::{MeasurementParams, QubitState};

#[test]
fn ode_matches_linearization_near_steady_state() {
    let err = ode_linearization_error();
    assert!(err < 1e-6, "{err}");
}

#[test]
fn birth_death_stationary_distribution_matches_generator_oracle() {
    let c = birth_death_chi_square(2024, 10_000);
    assert!(c.cells >= 6, "too few cells: {}", c.cells);
    assert!(
        c.p_value > 0.01,
        "chi2 = {} on {} cells, p = {}",
        c.stat,
        c.cells,
        c.p_value
    );
}

#[test]
fn parseval_holds_for_correlated_series() {
    let err = parseval_error(99);
    assert!(err < 1e-9, "{err}");
}

fn first_state(excited: bool) -> QubitState {
    if excited {
        QubitState::Excited
    } else {
        QubitState::Ground
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn noise_free_filter_recovers_sample_aligned_truth(
        lengths in proptest::collection::vec(2u32..40, 3..40),
        excited_first in any::<bool>(),
    ) {
        prop_assert!(noise_free_filter_exact(first_state(excited_first), &lengths));
    }

    #[test]
    fn noise_free_filter_finds_every_unaligned_jump_within_one_sample(
        lengths in proptest::collection::vec(2.0f64..40.0, 3..40),
        excited_first in any::<bool>(),
    ) {
        let t_m = MeasurementParams::default().t_m;
        let dwells: Vec<f64> = lengths.iter().map(|&l| l * t_m).collect();
        let (truth, est) = filter_noiseless(first_state(excited_first), &dwells);

        let detected: Vec<usize> = est
            .states
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0] != w[1])
            .map(|(k, _)| k + 1)
            .collect();
        let n = est.len();
        let true_jumps: Vec<f64> = truth.entries[1..]
            .iter()
            .map(|e| e.time / t_m)
            .filter(|&x| x < n as f64 - 1.0)
            .collect();
        prop_assert_eq!(detected.len(), true_jumps.len());
        for (k, x) in detected.iter().zip(&true_jumps) {
            let lag = *k as f64 - x;
            prop_assert!((-1.0..=1.0 + 1e-9).contains(&lag), "jump at {} detected at {}", x, k);
        }
    }
}
