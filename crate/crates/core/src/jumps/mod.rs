//! Joint qubit / QP-number Markov chain, pulse heating and the synthesized
//! dispersive readout record.

mod iq;
mod rates;
mod sim;
mod thermal;

pub use iq::{ground_occupancy, iq_rng, sample_count, synthesize_iq, synthesize_iq_noiseless, IqRecord};
pub use rates::{gamma_eg, gamma_eg_density, gamma_ge, qp_density_from_rate, snr_separation};
pub use sim::{
    simulate_joint, simulate_joint_with, stationary_excited_population, QubitState, Simulation, TruthEntry, TruthTrace,
};
pub use thermal::{
    pulse_power, qp_generation_count, qp_generation_rate, thermal_decay_constant, thermal_transient, ThermalTransient,
};
