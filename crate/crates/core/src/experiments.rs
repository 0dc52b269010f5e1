//! Named experiment presets and the analysis chains that turn their
//! simulated records into figure data.
//!
//! Every preset is an ordinary [`ScenarioConfig`]; user overrides are applied
//! on top before any preset-derived pulse schedule is filled in.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::analysis::{
    calibrate_detection, cross_correlation, extract_dwells, per_second_report, post_pulse_profile, two_point_filter,
    write_report_csv, DetectionResponse, PostPulseBin, ReportOptions, StateEstimate, WindowStats,
};
use crate::config::{Modulator, Pulse, ScenarioConfig};
use crate::error::{Error, Result};
use crate::fitting::{
    fit_power_law_with, fit_recovery_with, fit_thermal_with, periodogram, psd_model, DecayFitOptions, PsdFit,
    PsdFitOptions, RecoveryFit, Spectrum, ThermalFit,
};
use crate::io::fmt9;
use crate::jumps::{iq_rng, qp_generation_count, simulate_joint, snr_separation, synthesize_iq, IqRecord, Simulation};
use crate::params::{MeasurementParams, ThermalParams};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    QuietNoisy,
    QpPulses,
    FieldCool,
    Recovery,
    Psd,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::QuietNoisy,
        Experiment::QpPulses,
        Experiment::FieldCool,
        Experiment::Recovery,
        Experiment::Psd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::QuietNoisy => "quiet-noisy",
            Experiment::QpPulses => "qp-pulses",
            Experiment::FieldCool => "field-cool",
            Experiment::Recovery => "recovery",
            Experiment::Psd => "psd",
        }
    }

    pub fn available() -> String {
        Self::ALL.map(Experiment::name).join(", ")
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            Error::config(
                "experiment",
                format!("unknown experiment `{s}`; available: {}", Self::available()),
            )
        })
    }
}

/// Analysis settings shared by the experiment chains.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    pub report: ReportOptions,
    /// A window is quiet when its mean ground dwell exceeds this (s).
    pub quiet_threshold: f64,
    pub bootstrap: usize,
    /// Log-spaced post-pulse bins for the recovery profile.
    pub recovery_bins: usize,
    /// Minimum `e -> g` jumps for a post-pulse bin to enter the fit.
    pub recovery_min_jumps: u64,
    /// Bins starting earlier than this many samples after a pulse are left
    /// out of the fit while the filter settles.
    pub recovery_skip_samples: u32,
    /// Correct post-pulse hazards for missed jumps with a simulated
    /// detection response.
    pub recovery_calibrate: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            report: ReportOptions::default(),
            quiet_threshold: 8e-4,
            bootstrap: 200,
            recovery_bins: 24,
            recovery_min_jumps: 50,
            recovery_skip_samples: 4,
            recovery_calibrate: true,
        }
    }
}

/// A named CSV produced by an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentOutput {
    pub tables: Vec<Table>,
    /// Key-value report, written as `summary.csv`.
    pub summary: Vec<(String, String)>,
    /// Fit warnings; a non-empty list maps to the "warned" exit status.
    pub warnings: Vec<String>,
    /// Per-stage record counts for the run manifest.
    pub counts: Vec<(String, u64)>,
}

impl ExperimentOutput {
    fn put(&mut self, key: &str, value: impl fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn put_f(&mut self, key: &str, value: f64) {
        self.put(key, fmt9(value));
    }

    fn table(&mut self, name: &str, csv: String) {
        self.tables.push(Table {
            name: name.to_string(),
            csv,
        });
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("key,value\n");
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k},{v}");
        }
        s
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Fixed experiment settings not expressible in the scenario config.
const PULSE_LENGTH: f64 = 50e-6;
const PULSED_PERIOD: f64 = 5e-3;
const RECOVERY_PERIOD: f64 = 10e-3;
const FIRST_PULSE: f64 = 1e-3;
const FIELD_COOL_TRAPPING: f64 = 5.0;
const PSD_POINTS: usize = 4096;
const PSD_DT: f64 = 1.0;
const PSD_ALPHA: f64 = 1.4;
/// Telegraph switching rate of the `psd` experiment (1/s each way); slow
/// against the sample rate so bin averaging barely bends the Lorentzian.
const PSD_TELEGRAPH_RATE: f64 = 0.003;

fn noisy_quiet_base(seed: u64, duration: f64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::with_defaults(seed, duration);
    cfg.qubit.gamma_other = 1500.0;
    cfg.modulator = Some(Modulator {
        g_alt: cfg.kinetics.g / 300.0,
        mean_base: 0.1,
        mean_alt: 0.2,
    });
    cfg
}

fn pulse_thermal() -> ThermalParams<f64> {
    ThermalParams {
        capture_fraction: 6e-8,
        ..Default::default()
    }
}

/// Base configuration of a preset before user overrides.
pub fn preset_base(exp: Experiment, seed: u64) -> ScenarioConfig {
    match exp {
        Experiment::QuietNoisy => noisy_quiet_base(seed, 120.0),
        Experiment::QpPulses => {
            let mut c = noisy_quiet_base(seed, 60.0);
            c.thermal = Some(pulse_thermal());
            c
        }
        Experiment::FieldCool => noisy_quiet_base(seed, 120.0),
        Experiment::Recovery => {
            let mut c = ScenarioConfig::with_defaults(seed, 100.0 + FIRST_PULSE);
            c.thermal = Some(pulse_thermal());
            c
        }
        Experiment::Psd => ScenarioConfig::with_defaults(seed, 1.0),
    }
}

fn pulse_train(cfg: &ScenarioConfig, period: f64) -> Vec<Pulse> {
    let inject = cfg
        .thermal
        .map(|th| qp_generation_count(&th, PULSE_LENGTH))
        .unwrap_or(0.0);
    let mut pulses = Vec::new();
    let mut start = FIRST_PULSE;
    while start + PULSE_LENGTH + cfg.pulse_wait <= cfg.duration {
        pulses.push(Pulse {
            start,
            length: PULSE_LENGTH,
            inject,
        });
        start += period;
    }
    pulses
}

/// Preset with overrides applied. Pulsed presets fill the duration with a
/// periodic pulse train unless the overrides define pulses themselves.
pub fn preset(exp: Experiment, seed: u64, overrides: &[(String, String)]) -> Result<ScenarioConfig> {
    let mut cfg = preset_base(exp, seed).with_overrides(overrides)?;
    let user_pulses = overrides.iter().any(|(k, _)| k == "pulse" || k == "pulse_train");
    if !user_pulses {
        let period = match exp {
            Experiment::QpPulses => Some(PULSED_PERIOD),
            Experiment::Recovery => Some(RECOVERY_PERIOD),
            _ => None,
        };
        if let Some(p) = period {
            cfg.pulses = pulse_train(&cfg, p);
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Joint simulation and the noisy readout record for a configuration.
pub fn simulate_record(cfg: &ScenarioConfig) -> (Simulation, IqRecord) {
    let sim = simulate_joint(cfg);
    let iq = synthesize_iq(&sim.truth, &cfg.meas, &mut iq_rng(cfg.rng_seed));
    (sim, iq)
}

/// Filter a record and compute the windowed report.
pub fn analyze_record(
    iq: &IqRecord,
    meas: &MeasurementParams<f64>,
    opts: &ReportOptions,
) -> Result<(StateEstimate, Vec<WindowStats>)> {
    if iq.is_empty() {
        return Err(Error::InsufficientData("record has no samples".into()));
    }
    let est = two_point_filter(iq, snr_separation(meas))?;
    let rows = per_second_report(&est, opts)?;
    Ok((est, rows))
}

/// Windows that are quiet: mean ground dwell above `threshold`.
pub fn quiet_fraction(rows: &[WindowStats], threshold: f64) -> f64 {
    let valid: Vec<f64> = rows.iter().filter_map(|r| r.tau_g).collect();
    if valid.is_empty() {
        return f64::NAN;
    }
    valid.iter().filter(|&&t| t > threshold).count() as f64 / valid.len() as f64
}

/// Correlation of per-window mean ground dwell with `-log10(1 - F)`.
pub fn dwell_fidelity_correlation(rows: &[WindowStats]) -> Result<f64> {
    let (a, b): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| match (r.tau_g, r.one_minus_f()) {
            (Some(t), Some(d)) if d > 0.0 => Some((t, -d.log10())),
            _ => None,
        })
        .unzip();
    cross_correlation(&a, &b)
}

pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Constant-rate scenario (no QP dynamics, `N = 0`) whose ground dwells
/// have mean `tau_g` at the same temperature.
pub fn matched_constant_rate(cfg: &ScenarioConfig, tau_g: f64) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.kinetics.g = 0.0;
    c.kinetics.s = 0.0;
    c.kinetics.r = 0.0;
    c.modulator = None;
    c.pulses.clear();
    c.thermal = None;
    c.initial_qp = Some(0);
    let b = units::boltzmann_factor(c.qubit.f_ge, c.qubit.t_eff);
    c.qubit.gamma_other = 1.0 / (b * tau_g * c.qubit.relaxation_multiplier);
    c
}

/// Per-dwell mean ground dwell over the whole estimate.
pub fn overall_mean_ground_dwell(est: &StateEstimate) -> f64 {
    let d = extract_dwells(est);
    d.ground.iter().sum::<u64>() as f64 * est.t_m / d.ground.len() as f64
}

fn report_csv(rows: &[WindowStats]) -> String {
    let mut buf = Vec::new();
    write_report_csv(rows, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("ascii")
}

fn histogram_csv(row: &WindowStats) -> Option<String> {
    let h = row.hist_g.as_ref()?;
    let mut buf = Vec::new();
    h.write_csv(&row.pred_g, &mut buf).expect("in-memory write");
    Some(String::from_utf8(buf).expect("ascii"))
}

fn add_record_counts(out: &mut ExperimentOutput, prefix: &str, sim: &Simulation, iq: &IqRecord, rows: &[WindowStats]) {
    out.counts
        .push((format!("{prefix}truth_entries"), sim.truth.entries.len() as u64));
    out.counts
        .push((format!("{prefix}qp_events"), sim.qp_events.events.len() as u64));
    out.counts.push((format!("{prefix}iq_samples"), iq.len() as u64));
    out.counts.push((format!("{prefix}windows"), rows.len() as u64));
}

/// Run a named experiment on its (overridden) configuration.
pub fn run_experiment(exp: Experiment, cfg: &ScenarioConfig, opts: &ExperimentOptions) -> Result<ExperimentOutput> {
    match exp {
        Experiment::QuietNoisy => quiet_noisy(cfg, opts),
        Experiment::QpPulses => qp_pulses(cfg, opts),
        Experiment::FieldCool => field_cool(cfg, opts),
        Experiment::Recovery => recovery(cfg, opts),
        Experiment::Psd => psd(cfg.rng_seed, opts),
    }
}

fn quiet_noisy(cfg: &ScenarioConfig, opts: &ExperimentOptions) -> Result<ExperimentOutput> {
    let (sim, iq) = simulate_record(cfg);
    let (_est, rows) = analyze_record(&iq, &cfg.meas, &opts.report)?;
    let mut out = ExperimentOutput::default();
    add_record_counts(&mut out, "", &sim, &iq, &rows);
    out.table("per_second.csv", report_csv(&rows));

    let by_tau = |pick_max: bool| {
        rows.iter().filter(|r| r.fidelity.is_some()).max_by(|a, b| {
            let (x, y) = (a.tau_g.unwrap_or(0.0), b.tau_g.unwrap_or(0.0));
            if pick_max {
                x.total_cmp(&y)
            } else {
                y.total_cmp(&x)
            }
        })
    };
    if let Some(r) = by_tau(true) {
        if let Some(csv) = histogram_csv(r) {
            out.table("histogram_quiet.csv", csv);
        }
        out.put_f("quiet_window_t_s", r.t_s);
    }
    if let Some(r) = by_tau(false) {
        if let Some(csv) = histogram_csv(r) {
            out.table("histogram_noisy.csv", csv);
        }
        out.put_f("noisy_window_t_s", r.t_s);
    }
    out.put("windows", rows.len());
    out.put_f("median_tau_g_s", median(rows.iter().filter_map(|r| r.tau_g)));
    out.put_f(
        "median_one_minus_F",
        median(rows.iter().filter_map(|r| r.one_minus_f())),
    );
    out.put_f("quiet_fraction", quiet_fraction(&rows, opts.quiet_threshold));
    out.put_f(
        "correlation_tau_g_log_fidelity",
        dwell_fidelity_correlation(&rows).unwrap_or(f64::NAN),
    );
    Ok(out)
}

fn qp_pulses(cfg: &ScenarioConfig, opts: &ExperimentOptions) -> Result<ExperimentOutput> {
    let mut base_cfg = cfg.clone();
    base_cfg.pulses.clear();
    let (base_sim, base_iq) = simulate_record(&base_cfg);
    let (_, base_rows) = analyze_record(&base_iq, &base_cfg.meas, &opts.report)?;
    let (sim, iq) = simulate_record(cfg);
    let (_, rows) = analyze_record(&iq, &cfg.meas, &opts.report)?;

    let quiet_level = median(
        base_rows
            .iter()
            .filter_map(|r| r.tau_g)
            .filter(|&t| t > opts.quiet_threshold),
    );
    let pulsed_max = rows.iter().filter_map(|r| r.tau_g).fold(f64::NAN, f64::max);
    let all_below = rows.iter().all(|r| r.tau_g.is_some_and(|t| t < quiet_level));

    let mut out = ExperimentOutput::default();
    add_record_counts(&mut out, "baseline_", &base_sim, &base_iq, &base_rows);
    add_record_counts(&mut out, "pulsed_", &sim, &iq, &rows);
    out.counts.push(("pulses".into(), cfg.pulses.len() as u64));
    out.table("per_second_baseline.csv", report_csv(&base_rows));
    out.table("per_second_pulsed.csv", report_csv(&rows));
    out.put("pulses", cfg.pulses.len());
    out.put_f("quiet_level_tau_g_s", quiet_level);
    out.put_f(
        "baseline_quiet_fraction",
        quiet_fraction(&base_rows, opts.quiet_threshold),
    );
    out.put_f("pulsed_quiet_fraction", quiet_fraction(&rows, opts.quiet_threshold));
    out.put_f("pulsed_max_tau_g_s", pulsed_max);
    out.put_f("pulsed_median_tau_g_s", median(rows.iter().filter_map(|r| r.tau_g)));
    out.put("all_pulsed_windows_below_quiet_level", all_below);
    Ok(out)
}

fn field_cool(cfg: &ScenarioConfig, opts: &ExperimentOptions) -> Result<ExperimentOutput> {
    let (base_sim, base_iq) = simulate_record(cfg);
    let (_, base_rows) = analyze_record(&base_iq, &cfg.meas, &opts.report)?;
    let mut cooled = cfg.clone();
    cooled.kinetics.s *= FIELD_COOL_TRAPPING;
    let (sim, iq) = simulate_record(&cooled);
    let (_, rows) = analyze_record(&iq, &cooled.meas, &opts.report)?;

    let mut out = ExperimentOutput::default();
    add_record_counts(&mut out, "baseline_", &base_sim, &base_iq, &base_rows);
    add_record_counts(&mut out, "field_cooled_", &sim, &iq, &rows);
    out.table("per_second_baseline.csv", report_csv(&base_rows));
    out.table("per_second_field_cooled.csv", report_csv(&rows));
    out.put_f("trapping_multiplier", FIELD_COOL_TRAPPING);
    out.put_f(
        "baseline_quiet_fraction",
        quiet_fraction(&base_rows, opts.quiet_threshold),
    );
    out.put_f(
        "field_cooled_quiet_fraction",
        quiet_fraction(&rows, opts.quiet_threshold),
    );
    out.put_f(
        "baseline_median_tau_g_s",
        median(base_rows.iter().filter_map(|r| r.tau_g)),
    );
    out.put_f(
        "field_cooled_median_tau_g_s",
        median(rows.iter().filter_map(|r| r.tau_g)),
    );
    Ok(out)
}

/// Post-pulse profile of a pulsed record and the fits to it.
pub struct RecoveryAnalysis {
    pub bins: Vec<PostPulseBin>,
    /// Detection-corrected downward rate per bin; `None` without decays or
    /// outside the calibrated range.
    pub rates: Vec<Option<f64>>,
    pub response: Option<DetectionResponse>,
    pub fit: Result<RecoveryFit<f64>>,
    pub thermal: Result<ThermalFit<f64>>,
}

/// Lifetime and temperature versus time after each pulse, and their fits.
pub fn analyze_recovery(
    est: &StateEstimate,
    cfg: &ScenarioConfig,
    opts: &ExperimentOptions,
) -> Result<RecoveryAnalysis> {
    if cfg.pulses.is_empty() {
        return Err(Error::config("pulse", "recovery analysis needs at least one pulse"));
    }
    let resume: Vec<f64> = cfg.pulses.iter().map(|p| p.start + p.length + cfg.pulse_wait).collect();
    let gap = cfg
        .pulses
        .windows(2)
        .map(|w| w[1].start - (w[0].start + w[0].length + cfg.pulse_wait))
        .fold(cfg.duration - resume[resume.len() - 1], f64::min);
    let bins = post_pulse_profile(est, &resume, 2.0 * est.t_m, gap, opts.recovery_bins)?;

    let response = if opts.recovery_calibrate {
        let top = bins
            .iter()
            .filter_map(|b| b.tau_e(est.t_m))
            .fold(0.0, |m: f64, t| m.max(1.0 / t));
        let bottom = bins
            .iter()
            .filter_map(|b| b.tau_e(est.t_m))
            .fold(f64::INFINITY, |m: f64, t| m.min(1.0 / t));
        let hi = (4.0 * top).min(0.5 / est.t_m);
        let lo = (0.5 * bottom).min(0.25 * hi);
        Some(calibrate_detection(cfg, lo, hi, 14, 20_000.0)?)
    } else {
        None
    };
    let rates: Vec<Option<f64>> = bins
        .iter()
        .map(|b| {
            let h = 1.0 / b.tau_e(est.t_m)?;
            match &response {
                Some(r) => r.true_rate(h),
                None => Some(h),
            }
        })
        .collect();

    let skip = f64::from(opts.recovery_skip_samples) * est.t_m;
    let mut times = Vec::new();
    let mut tau_e = Vec::new();
    let mut weights = Vec::new();
    for (b, rate) in bins.iter().zip(&rates) {
        let Some(rate) = *rate else { continue };
        if b.jumps_eg < opts.recovery_min_jumps || b.t_lo < skip {
            continue;
        }
        // relative error of a hazard is 1/sqrt(jumps)
        let x = crate::jumps::qp_density_from_rate(rate, &cfg.qubit);
        times.push(b.t_mean_e);
        tau_e.push(1.0 / rate);
        weights.push(b.jumps_eg as f64 / (x * x));
    }
    let fit = fit_recovery_with(
        &times,
        &tau_e,
        &cfg.qubit,
        &DecayFitOptions {
            weights: Some(weights),
            bootstrap: opts.bootstrap,
            seed: cfg.rng_seed,
        },
    );

    // relaxation after the hottest bin; the rise before it is the qubit
    // catching up with the bath
    let temps: Vec<(f64, f64)> = bins
        .iter()
        .filter(|b| b.samples >= 1000)
        .filter_map(|b| {
            let p = b.p_excited()?;
            units::polarization_to_temperature(p, cfg.qubit.f_ge)
                .ok()
                .map(|t| (b.t_mean, t))
        })
        .collect();
    let peak = temps
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map_or(0, |(i, _)| i);
    let (tt, temp): (Vec<f64>, Vec<f64>) = temps[peak..].iter().copied().unzip();
    let thermal = fit_thermal_with(
        &tt,
        &temp,
        &DecayFitOptions {
            weights: None,
            bootstrap: opts.bootstrap,
            seed: cfg.rng_seed,
        },
    );
    Ok(RecoveryAnalysis {
        bins,
        rates,
        response,
        fit,
        thermal,
    })
}

fn recovery(cfg: &ScenarioConfig, opts: &ExperimentOptions) -> Result<ExperimentOutput> {
    let (sim, iq) = simulate_record(cfg);
    let est = two_point_filter(&iq, snr_separation(&cfg.meas))?;
    let ra = analyze_recovery(&est, cfg, opts)?;
    let mut out = ExperimentOutput::default();
    out.counts
        .push(("truth_entries".into(), sim.truth.entries.len() as u64));
    out.counts.push(("iq_samples".into(), iq.len() as u64));
    out.counts.push(("pulses".into(), cfg.pulses.len() as u64));

    let mut csv = String::from("t_lo_s,t_hi_s,t_s,tau_e_s,tau_e_corrected_s,x_qp,jumps_eg,p_e,t_eff_k\n");
    for (b, rate) in ra.bins.iter().zip(&ra.rates) {
        let p = b.p_excited();
        let temp = p.and_then(|p| units::polarization_to_temperature(p, cfg.qubit.f_ge).ok());
        let x = rate.map(|r| crate::jumps::qp_density_from_rate(r, &cfg.qubit));
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            fmt9(b.t_lo),
            fmt9(b.t_hi),
            fmt9(b.t_mean_e),
            fmt9(b.tau_e(est.t_m).unwrap_or(f64::NAN)),
            fmt9(rate.map_or(f64::NAN, |r| 1.0 / r)),
            fmt9(x.unwrap_or(f64::NAN)),
            b.jumps_eg,
            fmt9(p.unwrap_or(f64::NAN)),
            fmt9(temp.unwrap_or(f64::NAN))
        );
    }
    out.table("recovery_profile.csv", csv);
    if let Some(r) = &ra.response {
        let mut c = String::from("rate_per_s,observed_per_s\n");
        for (a, o) in r.rates.iter().zip(&r.observed) {
            let _ = writeln!(c, "{},{}", fmt9(*a), fmt9(*o));
        }
        out.table("detection_response.csv", c);
    }
    out.put("pulses", cfg.pulses.len());

    let fit = ra.fit?;
    if !fit.identifiable {
        out.warnings.push("recovery time constant is not identifiable".into());
    }
    let mut model = String::from("t_s,x_qp_model\n");
    for b in &ra.bins {
        let _ = writeln!(model, "{},{}", fmt9(b.t_mean_e), fmt9(fit.eval(b.t_mean_e)));
    }
    out.table("recovery_model.csv", model);
    out.put_f("tau_ss_s", fit.tau_ss);
    out.put_f("tau_ss_se_s", fit.se[0]);
    out.put_f("x_bar", fit.x_bar);
    out.put_f("x_bar_se", fit.se[1]);
    out.put_f("x0", fit.x0);
    out.put_f("x0_se", fit.se[2]);
    out.put_f("g_eff_per_s", fit.g_eff());

    match ra.thermal {
        Ok(th) => {
            out.put_f("t_base_k", th.t_base);
            out.put_f("delta_t_k", th.delta_t);
            out.put_f("tau_th_s", th.tau_th);
            out.put_f("tau_th_se_s", th.se[2]);
            if let Some(w) = th.warning {
                out.warnings.push(format!("thermal fit: {w}"));
            }
        }
        Err(e) => out.warnings.push(format!("thermal fit skipped: {e}")),
    }
    Ok(out)
}

/// Gaussian series whose spectrum is `A / (B + ω^α) + C`, built from random
/// Fourier amplitudes.
pub fn synthesize_power_law_series<R: Rng + ?Sized>(
    n: usize,
    dt: f64,
    a: f64,
    b: f64,
    alpha: f64,
    c: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut spec = vec![Complex::new(0.0, 0.0); n];
    let nf = n as f64;
    for k in 1..=n / 2 {
        let f = k as f64 / (nf * dt);
        // one-sided density S relates to |X_k|² = S N / (2 dt)
        let var = psd_model(f, a, b, alpha, c) * nf / (2.0 * dt);
        let (re, im): (f64, f64) = (StandardNormal.sample(rng), StandardNormal.sample(rng));
        if 2 * k == n {
            spec[k] = Complex::new(re * (2.0 * var).sqrt(), 0.0);
        } else {
            let z = Complex::new(re, im) * (0.5 * var).sqrt();
            spec[k] = z;
            spec[n - k] = z.conj();
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|z| z.re / nf).collect()
}

/// Bin-averaged symmetric random telegraph signal with switching rate
/// `rate` (1/s each way), values 0 and 1.
pub fn synthesize_telegraph_series<R: Rng + ?Sized>(n: usize, dt: f64, rate: f64, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(rate).expect("positive rate");
    let mut state = rng.random::<bool>();
    let mut next = exp.sample(rng);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (t0, t1) = (k as f64 * dt, (k + 1) as f64 * dt);
        let mut t = t0;
        let mut high = 0.0;
        while next < t1 {
            if state {
                high += next - t;
            }
            t = next;
            state = !state;
            next += exp.sample(rng);
        }
        if state {
            high += t1 - t;
        }
        out.push(high / dt);
    }
    out
}

/// Spectrum without the DC and Nyquist bins, fitted as a raw periodogram.
pub fn fit_periodogram(spec: &Spectrum<f64>, bootstrap: usize, seed: u64) -> Result<PsdFit<f64>> {
    let hi = if spec.freqs.len() > 2 {
        spec.freqs.len() - 1
    } else {
        spec.freqs.len()
    };
    let opts = PsdFitOptions {
        periodogram_segments: Some(spec.segments),
        bootstrap,
        seed,
        ..Default::default()
    };
    fit_power_law_with(&spec.freqs[1..hi], &spec.power[1..hi], &opts)
}

/// Series used by the `psd` experiment: a power law with `α = 1.4` plus a
/// white floor, and a telegraph signal plus white noise.
pub fn psd_series(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = (std::f64::consts::TAU * 2e-3f64).powf(PSD_ALPHA);
    let power_law = synthesize_power_law_series(PSD_POINTS, PSD_DT, 1.0, b, PSD_ALPHA, 0.05, &mut rng);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let telegraph: Vec<f64> = synthesize_telegraph_series(PSD_POINTS, PSD_DT, PSD_TELEGRAPH_RATE, &mut rng)
        .into_iter()
        .map(|v| {
            let z: f64 = StandardNormal.sample(&mut rng);
            v + 0.02 * z
        })
        .collect();
    (power_law, telegraph)
}

fn spectrum_csv(spec: &Spectrum<f64>, fit: &PsdFit<f64>) -> String {
    let mut s = String::from("f_hz,power,model\n");
    for (f, p) in spec.freqs.iter().zip(&spec.power).skip(1) {
        let _ = writeln!(s, "{},{},{}", fmt9(*f), fmt9(*p), fmt9(fit.eval(*f)));
    }
    s
}

fn psd(seed: u64, opts: &ExperimentOptions) -> Result<ExperimentOutput> {
    let (power_law, telegraph) = psd_series(seed);
    let mut out = ExperimentOutput::default();
    out.counts.push(("series_points".into(), 2 * PSD_POINTS as u64));
    for (name, series) in [("power_law", &power_law), ("telegraph", &telegraph)] {
        let spec = periodogram(series, PSD_DT)?;
        let fit = fit_periodogram(&spec, opts.bootstrap, seed)?;
        let mut ts = String::from("t_s,value\n");
        for (k, v) in series.iter().enumerate() {
            let _ = writeln!(ts, "{},{}", fmt9(k as f64 * PSD_DT), fmt9(*v));
        }
        out.table(&format!("{name}_series.csv"), ts);
        out.table(&format!("{name}_spectrum.csv"), spectrum_csv(&spec, &fit));
        out.put_f(&format!("{name}_alpha"), fit.alpha);
        out.put_f(&format!("{name}_alpha_se"), fit.se[2]);
        out.put_f(&format!("{name}_a"), fit.a);
        out.put_f(&format!("{name}_b"), fit.b);
        out.put_f(&format!("{name}_c"), fit.c);
    }
    out.put_f("injected_alpha", PSD_ALPHA);
    out.put_f("telegraph_rate_hz", PSD_TELEGRAPH_RATE);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip_and_unknown_lists_all() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        let err = "nope".parse::<Experiment>().unwrap_err().to_string();
        for e in Experiment::ALL {
            assert!(err.contains(e.name()));
        }
    }

    #[test]
    fn presets_validate_and_fill_pulses() {
        for e in Experiment::ALL {
            preset(e, 1, &[]).unwrap();
        }
        let r = preset(Experiment::Recovery, 1, &[]).unwrap();
        assert_eq!(r.pulses.len(), 10_000);
        assert!((r.pulses[0].inject - 4.68).abs() < 0.05);
        let short = preset(Experiment::QpPulses, 1, &[("duration".into(), "0.1".into())]).unwrap();
        assert_eq!(short.pulses.len(), 20);
    }

    #[test]
    fn matched_constant_rate_gives_requested_mean() {
        let base = preset(Experiment::QuietNoisy, 1, &[]).unwrap();
        let c = matched_constant_rate(&base, 5e-4);
        let up = crate::jumps::gamma_ge(0, &c.kinetics, &c.qubit, c.qubit.t_eff);
        assert!((1.0 / up - 5e-4).abs() < 1e-15);
    }

    #[test]
    fn synthesized_power_law_has_requested_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4096;
        let x = synthesize_power_law_series(n, 1.0, 0.0, 1.0, 2.0, 3.0, &mut rng);
        let m = x.iter().sum::<f64>() / n as f64;
        let v = x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / n as f64;
        // white density 3 over 0.5 Hz
        assert!((v / 1.5 - 1.0).abs() < 0.08, "{v}");
    }

    #[test]
    fn telegraph_occupancy_is_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = synthesize_telegraph_series(20_000, 1.0, 0.5, &mut rng);
        let m = x.iter().sum::<f64>() / x.len() as f64;
        assert!((m - 0.5).abs() < 0.03);
        assert!(x.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
