//! Physical constants, frequency conventions and the polarization/temperature
//! conversion.
//!
//! Energies are carried as frequencies (`E / h`, in Hz) and times in seconds.
//! Angular quantities (`kappa`, `chi`) are in rad/s; `2π` is the only factor
//! used to move between the two.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

#[inline]
pub fn angular<T: Real>(linear_hz: T) -> T {
    linear_hz * T::TAU()
}

#[inline]
pub fn linear<T: Real>(angular: T) -> T {
    angular / T::TAU()
}

/// `h f / k_B`: the temperature equivalent of a frequency (K).
#[inline]
pub fn frequency_to_kelvin<T: Real>(f_hz: T) -> T {
    f_hz * T::lit(PLANCK / BOLTZMANN)
}

/// Gap frequency `Δ/h` from the gap voltage `V_2Δ = 2Δ/e`.
#[inline]
pub fn gap_frequency_from_voltage<T: Real>(v_2delta: T) -> T {
    v_2delta * T::lit(ELEMENTARY_CHARGE / (2.0 * PLANCK))
}

/// Pair-breaking energy `2Δ` in joules from the gap voltage.
#[inline]
pub fn pair_breaking_energy<T: Real>(v_2delta: T) -> T {
    v_2delta * T::lit(ELEMENTARY_CHARGE)
}

/// Boltzmann factor `exp(-h f / k_B T)`; zero at `T = 0`.
pub fn boltzmann_factor<T: Real>(f_hz: T, temperature: T) -> T {
    if temperature <= T::zero() {
        return T::zero();
    }
    (-frequency_to_kelvin(f_hz) / temperature).exp()
}

/// Effective temperature of a two-level system whose excited-state
/// population is `p_excited`.
pub fn polarization_to_temperature<T: Real>(p_excited: T, f_ge: T) -> Result<T> {
    if !(p_excited > T::zero() && p_excited < T::lit(0.5)) {
        return Err(Error::Domain(format!(
            "excited population {p_excited} must lie in (0, 0.5) for a positive temperature"
        )));
    }
    if !(f_ge > T::zero()) {
        return Err(Error::Domain(format!("transition frequency {f_ge} must be positive")));
    }
    let ratio = (T::one() - p_excited) / p_excited;
    Ok(frequency_to_kelvin(f_ge) / ratio.ln())
}

/// Thermal excited-state population at `temperature`; the inverse of
/// [`polarization_to_temperature`].
pub fn temperature_to_polarization<T: Real>(temperature: T, f_ge: T) -> Result<T> {
    if temperature < T::zero() {
        return Err(Error::Domain(format!("temperature {temperature} is negative")));
    }
    let b = boltzmann_factor(f_ge, temperature);
    Ok(b / (T::one() + b))
}

/// Mean polarization `<σ_z> = p_g - p_e` from the excited population.
#[inline]
pub fn sigma_z_from_excited<T: Real>(p_excited: T) -> T {
    T::one() - p_excited - p_excited
}
