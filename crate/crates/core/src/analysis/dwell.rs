use super::filter::StateEstimate;
use crate::jumps::QubitState;

/// Interior dwells, as sample counts, per state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dwells {
    pub t_m: f64,
    pub ground: Vec<u64>,
    pub excited: Vec<u64>,
}

impl Dwells {
    pub fn samples(&self, state: QubitState) -> &[u64] {
        match state {
            QubitState::Ground => &self.ground,
            QubitState::Excited => &self.excited,
        }
    }

    pub fn durations(&self, state: QubitState) -> Vec<f64> {
        self.samples(state).iter().map(|&k| k as f64 * self.t_m).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty() && self.excited.is_empty()
    }
}

/// Maximal runs of one state bounded by jumps on both sides.
///
/// Runs touching the record edges or an unobserved gap are discarded, so
/// each observed segment with fewer than three runs contributes nothing.
pub fn extract_dwells(est: &StateEstimate) -> Dwells {
    let mut out = Dwells {
        t_m: est.t_m,
        ..Default::default()
    };
    // (state, length, bounded on the left by a jump)
    let mut run: Option<(QubitState, u64, bool)> = None;
    for s in &est.states {
        match (*s, run) {
            (None, _) => run = None,
            (Some(s), None) => run = Some((s, 1, false)),
            (Some(s), Some((r, k, left))) if s == r => run = Some((r, k + 1, left)),
            (Some(s), Some((r, k, left))) => {
                if left {
                    match r {
                        QubitState::Ground => out.ground.push(k),
                        QubitState::Excited => out.excited.push(k),
                    }
                }
                run = Some((s, 1, true));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::filter::FilterThresholds;
    use QubitState::{Excited as E, Ground as G};

    fn est(states: Vec<Option<QubitState>>) -> StateEstimate {
        StateEstimate {
            t_m: 5e-6,
            states,
            thresholds: FilterThresholds {
                separation: 2.59,
                margin: 0.5,
            },
        }
    }

    fn some(v: &[QubitState]) -> Vec<Option<QubitState>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn single_interior_dwell() {
        let d = extract_dwells(&est(some(&[G, G, E, E, E, G])));
        assert!(d.ground.is_empty());
        assert_eq!(d.excited, vec![3]);
        assert!((d.durations(E)[0] - 15e-6).abs() < 1e-18);
    }

    #[test]
    fn constant_record_is_empty() {
        assert!(extract_dwells(&est(some(&[G; 8]))).is_empty());
        assert!(extract_dwells(&est(some(&[G, G, E]))).is_empty());
    }

    #[test]
    fn alternating_gives_unit_dwells() {
        let d = extract_dwells(&est(some(&[G, E, G, E, G, E])));
        assert_eq!(d.excited, vec![1, 1]);
        assert_eq!(d.ground, vec![1, 1]);
    }

    #[test]
    fn gaps_censor_adjacent_runs() {
        let mut s = some(&[G, E, E, G, G]);
        s.push(None);
        s.extend(some(&[G, E, G]));
        let d = extract_dwells(&est(s));
        assert_eq!(d.excited, vec![2, 1]);
        assert!(d.ground.is_empty());
    }
}
