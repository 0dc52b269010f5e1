//! Simulation and analysis of quasiparticle-driven quantum jumps in a
//! low-frequency superconducting qubit.
//!
//! The closed-form physics, kinetics and fitting routines are generic over
//! [`Real`] (`f32` or `f64`); the aliases below fix them to `f64`.

// `!(x > 0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fitting;
pub mod io;
pub mod jumps;
pub mod kinetics;
pub mod params;
pub mod scalar;
pub mod units;

pub use config::{InitialState, InjectMode, Modulator, Pulse, ScenarioConfig};
pub use error::{Error, Result};
pub use jumps::{simulate_joint, IqRecord, QubitState, Simulation, TruthEntry, TruthTrace};
pub use kinetics::{QpEvent, QpEventKind, QpEventTrace};
pub use scalar::Real;

pub type QubitParams = params::QubitParams<f64>;
pub type MeasurementParams = params::MeasurementParams<f64>;
pub type QpKineticsParams = params::QpKineticsParams<f64>;
pub type ThermalParams = params::ThermalParams<f64>;
