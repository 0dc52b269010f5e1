//! Jump statistics recovered from readout records: state estimation,
//! dwell-time histograms and their comparison with the constant-rate
//! prediction, polarization and windowed reports.

mod detection;
mod dwell;
mod filter;
mod histogram;
mod recovery;
mod report;
mod stats;

pub use detection::{calibrate_detection, excited_hazard, DetectionResponse};
pub use dwell::{extract_dwells, Dwells};
pub use filter::{two_point_filter, FilterThresholds, StateEstimate};
pub use histogram::{fidelity, log_histogram, poisson_prediction, DwellHistogram, FidelityReport, MeanKind};
pub use recovery::{post_pulse_profile, PostPulseBin};
pub use report::{per_second_report, write_report_csv, ReportOptions, WindowStats};
pub use stats::{cross_correlation, polarization, Polarization};
