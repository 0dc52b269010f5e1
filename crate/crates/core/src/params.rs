//! Physical parameter sets for the qubit, readout, QP kinetics and pulse
//! heating, with their invariants and default values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::units;

/// Qubit parameters. All energies are frequencies `E/h` in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitParams<T> {
    pub f_ge: T,
    /// Superconducting gap `Δ/h`.
    pub f_gap: T,
    /// Inductive energy `E_L/h`. The default of 0.5 GHz is an assumption
    /// chosen so that `x_qp = 4e-8` gives a lifetime of order 100 μs.
    pub f_el: T,
    /// Relaxation rate from non-QP channels (1/s).
    pub gamma_other: T,
    /// Effective bath temperature (K).
    pub t_eff: T,
    /// Multiplier on the downward rate, standing in for readout-induced
    /// lifetime reduction. 1 disables it.
    pub relaxation_multiplier: T,
}

impl<T: Real> QubitParams<T> {
    pub fn validate(&self) -> Result<()> {
        positive("f_ge", self.f_ge)?;
        positive("f_gap", self.f_gap)?;
        positive("f_el", self.f_el)?;
        non_negative("gamma_other", self.gamma_other)?;
        positive("t_eff", self.t_eff)?;
        positive("relaxation_multiplier", self.relaxation_multiplier)?;
        if self.f_ge >= self.f_gap + self.f_gap {
            return Err(Error::config(
                "f_ge",
                format!(
                    "{} Hz must stay below 2 f_gap = {} Hz",
                    self.f_ge,
                    self.f_gap + self.f_gap
                ),
            ));
        }
        Ok(())
    }

    /// Downward rate per unit `x_qp`: `sqrt(2 f_gap / f_ge) 4π² f_EL`.
    pub fn qp_rate_coefficient(&self) -> T {
        let four_pi_sq = T::lit(4.0) * T::PI() * T::PI();
        ((self.f_gap + self.f_gap) / self.f_ge).sqrt() * four_pi_sq * self.f_el
    }

    /// Stationary excited population at the base temperature.
    pub fn thermal_excited_population(&self) -> T {
        let b = units::boltzmann_factor(self.f_ge, self.t_eff);
        b / (T::one() + b)
    }
}

impl<T: Real> Default for QubitParams<T> {
    fn default() -> Self {
        Self {
            f_ge: T::lit(665e6),
            f_gap: units::gap_frequency_from_voltage(T::lit(0.4e-3)),
            f_el: T::lit(0.5e9),
            gamma_other: T::zero(),
            t_eff: T::lit(0.045),
            relaxation_multiplier: T::one(),
        }
    }
}

/// Dispersive readout parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementParams<T> {
    pub n_bar: T,
    /// Cavity linewidth (rad/s).
    pub kappa: T,
    /// Dispersive shift (rad/s).
    pub chi: T,
    /// Integration time per sample (s).
    pub t_m: T,
    pub eta: T,
}

impl<T: Real> MeasurementParams<T> {
    pub fn validate(&self) -> Result<()> {
        non_negative("n_bar", self.n_bar)?;
        positive("kappa", self.kappa)?;
        finite("chi", self.chi)?;
        positive("t_m", self.t_m)?;
        if !(self.eta > T::zero() && self.eta <= T::one()) {
            return Err(Error::config("eta", format!("{} must lie in (0, 1]", self.eta)));
        }
        Ok(())
    }
}

impl<T: Real> Default for MeasurementParams<T> {
    fn default() -> Self {
        Self {
            n_bar: T::lit(2.5),
            kappa: units::angular(T::lit(4.7e6)),
            chi: units::angular(T::lit(1.0e6)),
            t_m: T::lit(5e-6),
            eta: T::lit(0.21),
        }
    }
}

/// Coefficients of `dx/dt = g - s x - r x²` and the Cooper-pair count used to
/// map `x` onto a discrete QP number `N = x N_cp`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpKineticsParams<T> {
    /// Generation coefficient (1/s).
    pub g: T,
    /// Single-QP trapping / diffusion rate (1/s).
    pub s: T,
    /// Recombination coefficient (1/s, acting on x²).
    pub r: T,
    /// Cooper pairs in the junction array. Default 3.75e7 is back-computed
    /// from 1.5 QPs at `x = 4e-8`.
    pub n_cp: T,
}

impl<T: Real> QpKineticsParams<T> {
    pub fn validate(&self) -> Result<()> {
        non_negative("g", self.g)?;
        non_negative("s", self.s)?;
        non_negative("r", self.r)?;
        if self.n_cp < T::one() || !self.n_cp.is_finite() {
            return Err(Error::config("n_cp", format!("{} must be >= 1", self.n_cp)));
        }
        if self.g > T::zero() && self.s == T::zero() && self.r == T::zero() {
            return Err(Error::config(
                "g",
                "positive generation needs s > 0 or r > 0 for a steady state",
            ));
        }
        Ok(())
    }
}

impl<T: Real> Default for QpKineticsParams<T> {
    fn default() -> Self {
        Self {
            g: T::lit(3.2e-4),
            s: T::lit(8000.0),
            r: T::zero(),
            n_cp: T::lit(3.75e7),
        }
    }
}

/// Pulse heating and QP generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalParams<T> {
    /// Dissipated power during a pulse (W).
    pub p_diss: T,
    /// Substrate specific heat (J g⁻¹ K⁻¹).
    pub c_heat: T,
    /// Substrate mass (g).
    pub mass: T,
    /// Thermal equilibration time (s).
    pub tau_th: T,
    /// Substrate heat conductivity (W m⁻¹ K⁻¹) at the same temperature as
    /// `c_heat`.
    pub cond_g: Option<T>,
    /// Cross-section to the thermal sink (m²).
    pub area: Option<T>,
    /// Distance to the thermal sink (m).
    pub length: Option<T>,
    /// Junction critical current (A).
    pub i_c: T,
    /// Gap voltage `2Δ/e` (V).
    pub v_2delta: T,
    /// Fraction of generated QPs that end up in the junction array.
    pub capture_fraction: T,
}

impl<T: Real> ThermalParams<T> {
    pub fn validate(&self) -> Result<()> {
        positive("p_diss", self.p_diss)?;
        positive("c_heat", self.c_heat)?;
        positive("mass", self.mass)?;
        positive("tau_th", self.tau_th)?;
        for (k, v) in [("cond_g", self.cond_g), ("area", self.area), ("length", self.length)] {
            if let Some(v) = v {
                positive(k, v)?;
            }
        }
        positive("i_c", self.i_c)?;
        positive("v_2delta", self.v_2delta)?;
        if !(self.capture_fraction >= T::zero() && self.capture_fraction <= T::one()) {
            return Err(Error::config(
                "capture_fraction",
                format!("{} must lie in [0, 1]", self.capture_fraction),
            ));
        }
        Ok(())
    }
}

impl<T: Real> Default for ThermalParams<T> {
    fn default() -> Self {
        Self {
            p_diss: T::lit(1e-10),
            c_heat: T::lit(1e-11),
            mass: T::lit(0.1),
            tau_th: T::lit(3e-3),
            // Back-computed so that C l m / (G A) = 20 μs with the other
            // defaults; no literature conductivity is used.
            cond_g: Some(T::lit(6e-5)),
            area: Some(T::lit(2.5e-6)),
            length: Some(T::lit(3e-3)),
            i_c: T::lit(280e-9),
            v_2delta: T::lit(0.4e-3),
            capture_fraction: T::lit(1e-8),
        }
    }
}

fn positive<T: Real>(key: &str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("{v} must be positive and finite")))
    }
}

fn non_negative<T: Real>(key: &str, v: T) -> Result<()> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("{v} must be non-negative and finite")))
    }
}

fn finite<T: Real>(key: &str, v: T) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("{v} must be finite")))
    }
}
