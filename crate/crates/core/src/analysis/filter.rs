use crate::error::{Error, Result};
use crate::jumps::{IqRecord, QubitState};

/// Hysteresis thresholds in units of the per-sample noise σ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterThresholds {
    /// Pointer-state position `I/σ`; ground sits at `+separation`.
    pub separation: f64,
    /// Distance of each threshold from its destination state (σ/2).
    pub margin: f64,
}

impl FilterThresholds {
    /// `g -> e` is declared below this value.
    pub fn to_excited(&self) -> f64 {
        -self.separation + self.margin
    }

    /// `e -> g` is declared above this value.
    pub fn to_ground(&self) -> f64 {
        self.separation - self.margin
    }
}

/// Estimated qubit state per sample; `None` where the record is unobserved.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEstimate {
    pub t_m: f64,
    pub states: Vec<Option<QubitState>>,
    pub thresholds: FilterThresholds,
}

impl StateEstimate {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Sub-estimate over samples `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> StateEstimate {
        StateEstimate {
            t_m: self.t_m,
            states: self.states[start..end].to_vec(),
            thresholds: self.thresholds,
        }
    }
}

/// Two-point hysteresis filter on the I quadrature.
///
/// The state is initialized from the sign of the first observed sample and
/// only changes when a sample crosses the threshold placed σ/2 from the
/// destination state. Unobserved (NaN) samples map to `None` and the next
/// observed sample re-initializes the filter.
pub fn two_point_filter(iq: &IqRecord, separation: f64) -> Result<StateEstimate> {
    if !(separation > 1.0) {
        return Err(Error::Domain(format!(
            "separation {separation} must exceed 1 for distinct thresholds"
        )));
    }
    let th = FilterThresholds {
        separation,
        margin: 0.5,
    };
    let mut prev: Option<QubitState> = None;
    let states =
        iq.i.iter()
            .map(|&x| {
                if x.is_nan() {
                    prev = None;
                    return None;
                }
                let next = match prev {
                    None if x >= 0.0 => QubitState::Ground,
                    None => QubitState::Excited,
                    Some(QubitState::Ground) if x < th.to_excited() => QubitState::Excited,
                    Some(QubitState::Excited) if x > th.to_ground() => QubitState::Ground,
                    Some(s) => s,
                };
                prev = Some(next);
                prev
            })
            .collect();
    Ok(StateEstimate {
        t_m: iq.t_m,
        states,
        thresholds: th,
    })
}
