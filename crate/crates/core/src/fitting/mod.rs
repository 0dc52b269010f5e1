//! Least-squares estimation: power-law spectra, post-pulse QP recovery and
//! thermal relaxation, with the periodogram front end.

mod decay;
mod psd;
mod simplex;
mod spectrum;

pub use decay::{
    fit_exp_decay, fit_recovery, fit_recovery_with, fit_thermal, fit_thermal_with, DecayFitOptions, ExpFit,
    RecoveryFit, ThermalFit,
};
pub use psd::{fit_power_law, fit_power_law_with, log_periodogram_bias, psd_model, PsdFit, PsdFitOptions};
pub use simplex::{nelder_mead, Minimum, SimplexOptions};
pub use spectrum::{periodogram, welch, Spectrum};
