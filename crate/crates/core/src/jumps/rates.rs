use crate::params::{MeasurementParams, QpKineticsParams, QubitParams};
use crate::scalar::Real;
use crate::units;

/// Peak half-separation over the per-sample noise, `I/σ`, of the two
/// readout pointer states.
pub fn snr_separation<T: Real>(m: &MeasurementParams<T>) -> T {
    let two = T::lit(2.0);
    (two * m.n_bar * m.kappa * m.t_m * m.eta).sqrt() * m.chi.abs() / (m.chi * m.chi + m.kappa * m.kappa).sqrt()
}

/// Downward rate at relative QP density `x`.
pub fn gamma_eg_density<T: Real>(x: T, qubit: &QubitParams<T>) -> T {
    qubit.relaxation_multiplier * (x * qubit.qp_rate_coefficient() + qubit.gamma_other)
}

/// Downward rate `e -> g` with `n` QPs in the array.
pub fn gamma_eg<T: Real>(n: u64, qp: &QpKineticsParams<T>, qubit: &QubitParams<T>) -> T {
    let x = T::from_u64(n).expect("QP count representable") / qp.n_cp;
    gamma_eg_density(x, qubit)
}

/// Upward rate `g -> e`: detailed balance at temperature `t_now`.
pub fn gamma_ge<T: Real>(n: u64, qp: &QpKineticsParams<T>, qubit: &QubitParams<T>, t_now: T) -> T {
    gamma_eg(n, qp, qubit) * units::boltzmann_factor(qubit.f_ge, t_now)
}

/// Inverse of [`gamma_eg_density`]: the QP density implied by a measured
/// downward rate.
pub fn qp_density_from_rate<T: Real>(rate: T, qubit: &QubitParams<T>) -> T {
    (rate / qubit.relaxation_multiplier - qubit.gamma_other) / qubit.qp_rate_coefficient()
}
