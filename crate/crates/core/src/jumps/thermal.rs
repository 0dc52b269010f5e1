use crate::params::ThermalParams;
use crate::scalar::Real;
use crate::units;

/// Bath temperature rise after a pulse and its exponential decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalTransient<T> {
    pub delta_t: T,
    pub tau_th: T,
}

impl<T: Real> ThermalTransient<T> {
    /// `T_base + ΔT exp(-t / τ_th)` at time `t` after the pulse.
    pub fn temperature(&self, t_base: T, t: T) -> T {
        t_base + self.delta_t * (-t / self.tau_th).exp()
    }
}

/// Heating by a pulse of length `t_g`: `ΔT = P t_G / (C m)`.
pub fn thermal_transient<T: Real>(th: &ThermalParams<T>, t_g: T) -> ThermalTransient<T> {
    let energy = th.p_diss * t_g.max(T::zero());
    ThermalTransient {
        delta_t: energy / (th.c_heat * th.mass),
        tau_th: th.tau_th,
    }
}

/// Power dissipated by junctions switched into the gap: `I_c V_2Δ`.
pub fn pulse_power<T: Real>(i_c: T, v_2delta: T) -> T {
    i_c * v_2delta
}

/// QPs generated per second during a pulse, `P / 2Δ`.
pub fn qp_generation_rate<T: Real>(th: &ThermalParams<T>) -> T {
    th.p_diss / units::pair_breaking_energy(th.v_2delta)
}

/// QPs reaching the array during a pulse of length `t_g`.
pub fn qp_generation_count<T: Real>(th: &ThermalParams<T>, t_g: T) -> T {
    qp_generation_rate(th) * t_g.max(T::zero()) * th.capture_fraction
}

/// Substrate thermalization time `C l m / (G A)`.
pub fn thermal_decay_constant<T: Real>(c_heat: T, length: T, mass: T, cond_g: T, area: T) -> T {
    c_heat * length * mass / (cond_g * area)
}
