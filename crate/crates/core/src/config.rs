//! Scenario configuration: a flat `key = value` text format.
//!
//! One assignment per line, `#` starts a comment. Values are SI unless a
//! unit suffix is given (`us`, `ms`, `MHz`, `mK`, ...). For the angular keys
//! `kappa` and `chi` a bare number is rad/s while a frequency suffix means the
//! linear frequency `κ/2π`. `pulse` may be repeated; `pulse_train` expands to
//! a list of `pulse` entries.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{MeasurementParams, QpKineticsParams, QubitParams, ThermalParams};

/// One QP-generation pulse: the qubit is not observed during
/// `[start, start + length + wait)`; QPs are injected and the bath heated at
/// `start + length`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub start: f64,
    pub length: f64,
    /// Injected QP count (mean, when `inject_mode = poisson`).
    pub inject: f64,
}

/// How a pulse's `inject` value becomes an integer QP count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InjectMode {
    /// Poisson draw with mean `inject`.
    Poisson,
    /// `inject` rounded to the nearest integer.
    Exact,
}

/// Slow two-state telegraph modulation of the generation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Modulator {
    /// Generation coefficient in the alternate state (1/s).
    pub g_alt: f64,
    /// Mean sojourn in the base state (s).
    pub mean_base: f64,
    /// Mean sojourn in the alternate state (s).
    pub mean_alt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InitialState {
    Ground,
    Excited,
    /// Drawn from the thermal population at `t_eff`.
    Thermal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub qubit: QubitParams<f64>,
    pub meas: MeasurementParams<f64>,
    pub kinetics: QpKineticsParams<f64>,
    pub thermal: Option<ThermalParams<f64>>,
    pub modulator: Option<Modulator>,
    /// Total simulated time (s).
    pub duration: f64,
    pub pulses: Vec<Pulse>,
    /// Dead time after each pulse (s).
    pub pulse_wait: f64,
    pub inject_mode: InjectMode,
    /// Initial QP count; `None` uses the rounded steady-state mean.
    pub initial_qp: Option<u64>,
    pub initial_state: InitialState,
    pub rng_seed: u64,
}

impl ScenarioConfig {
    /// Defaults for every key, with the two required keys supplied.
    pub fn with_defaults(rng_seed: u64, duration: f64) -> Self {
        Self {
            qubit: QubitParams::default(),
            meas: MeasurementParams::default(),
            kinetics: QpKineticsParams::default(),
            thermal: None,
            modulator: None,
            duration,
            pulses: Vec::new(),
            pulse_wait: 5e-6,
            inject_mode: InjectMode::Poisson,
            initial_qp: None,
            initial_state: InitialState::Thermal,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.qubit.validate()?;
        self.meas.validate()?;
        self.kinetics.validate()?;
        if let Some(th) = &self.thermal {
            th.validate()?;
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::config("duration", format!("{} must be positive", self.duration)));
        }
        if !(self.pulse_wait >= 0.0 && self.pulse_wait.is_finite()) {
            return Err(Error::config("pulse_wait", "must be non-negative"));
        }
        if let Some(m) = &self.modulator {
            if !(m.g_alt >= 0.0 && m.g_alt.is_finite()) {
                return Err(Error::config("mod_g_alt", "must be non-negative"));
            }
            if m.g_alt > 0.0 && self.kinetics.s == 0.0 && self.kinetics.r == 0.0 {
                return Err(Error::config("mod_g_alt", "positive generation needs s > 0 or r > 0"));
            }
            if !(m.mean_base > 0.0 && m.mean_base.is_finite()) {
                return Err(Error::config("mod_mean_base", "must be positive"));
            }
            if !(m.mean_alt > 0.0 && m.mean_alt.is_finite()) {
                return Err(Error::config("mod_mean_alt", "must be positive"));
            }
        }
        let mut busy_until = 0.0_f64;
        for (i, p) in self.pulses.iter().enumerate() {
            if !(p.start >= 0.0 && p.length > 0.0 && p.inject >= 0.0 && p.inject.is_finite()) {
                return Err(Error::config(
                    "pulse",
                    format!("pulse {i}: start >= 0, length > 0, inject >= 0 required"),
                ));
            }
            if i > 0 && p.start < busy_until {
                return Err(Error::config(
                    "pulse",
                    format!("pulse {i} at {} s overlaps the previous pulse and its wait", p.start),
                ));
            }
            if p.start + p.length > self.duration {
                return Err(Error::config("pulse", format!("pulse {i} ends after duration")));
            }
            busy_until = p.start + p.length + self.pulse_wait;
        }
        Ok(())
    }

    /// Parse and validate the flat key-value text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::with_defaults(0, 1.0);
        let mut seen = BTreeSet::new();
        let mut thermal = ThermalParams::default();
        let mut thermal_on = false;
        let mut modulator = Modulator {
            g_alt: 0.0,
            mean_base: 1.0,
            mean_alt: 1.0,
        };
        let mut modulator_on = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::ConfigSyntax(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            let spec = KEYS
                .iter()
                .find(|k| k.name == key)
                .ok_or_else(|| Error::config(&key, "unknown key"))?;
            if !spec.repeatable && !seen.insert(key.clone()) {
                return Err(Error::config(&key, "given more than once"));
            }
            seen.insert(key.clone());
            let num = |v: &str| parse_quantity(&key, v, spec.dim);
            match key.as_str() {
                "rng_seed" => {
                    cfg.rng_seed = value
                        .parse::<u64>()
                        .map_err(|_| Error::config(&key, format!("`{value}` is not an unsigned integer")))?
                }
                "duration" => cfg.duration = num(value)?,
                "f_ge" => cfg.qubit.f_ge = num(value)?,
                "f_gap" => cfg.qubit.f_gap = num(value)?,
                "f_el" => cfg.qubit.f_el = num(value)?,
                "gamma_other" => cfg.qubit.gamma_other = num(value)?,
                "t_eff" => cfg.qubit.t_eff = num(value)?,
                "relaxation_multiplier" => cfg.qubit.relaxation_multiplier = num(value)?,
                "n_bar" => cfg.meas.n_bar = num(value)?,
                "kappa" => cfg.meas.kappa = num(value)?,
                "chi" => cfg.meas.chi = num(value)?,
                "t_m" => cfg.meas.t_m = num(value)?,
                "eta" => cfg.meas.eta = num(value)?,
                "g" => cfg.kinetics.g = num(value)?,
                "s" => cfg.kinetics.s = num(value)?,
                "r" => cfg.kinetics.r = num(value)?,
                "n_cp" => cfg.kinetics.n_cp = num(value)?,
                "initial_qp" => {
                    cfg.initial_qp = Some(
                        value
                            .parse::<u64>()
                            .map_err(|_| Error::config(&key, format!("`{value}` is not an unsigned integer")))?,
                    )
                }
                "initial_state" => {
                    cfg.initial_state = match value {
                        "g" | "ground" => InitialState::Ground,
                        "e" | "excited" => InitialState::Excited,
                        "thermal" => InitialState::Thermal,
                        _ => return Err(Error::config(&key, "expected g, e or thermal")),
                    }
                }
                "thermal" => {
                    thermal_on = parse_bool(&key, value)?;
                }
                "p_diss" => {
                    thermal.p_diss = num(value)?;
                    thermal_on = true;
                }
                "c_heat" => {
                    thermal.c_heat = num(value)?;
                    thermal_on = true;
                }
                "mass" => {
                    thermal.mass = num(value)?;
                    thermal_on = true;
                }
                "tau_th" => {
                    thermal.tau_th = num(value)?;
                    thermal_on = true;
                }
                "cond_g" => {
                    thermal.cond_g = Some(num(value)?);
                    thermal_on = true;
                }
                "area" => {
                    thermal.area = Some(num(value)?);
                    thermal_on = true;
                }
                "length" => {
                    thermal.length = Some(num(value)?);
                    thermal_on = true;
                }
                "i_c" => {
                    thermal.i_c = num(value)?;
                    thermal_on = true;
                }
                "v_2delta" => {
                    thermal.v_2delta = num(value)?;
                    thermal_on = true;
                }
                "capture_fraction" => {
                    thermal.capture_fraction = num(value)?;
                    thermal_on = true;
                }
                "mod_g_alt" => {
                    modulator.g_alt = num(value)?;
                    modulator_on = true;
                }
                "mod_mean_base" => {
                    modulator.mean_base = num(value)?;
                    modulator_on = true;
                }
                "mod_mean_alt" => {
                    modulator.mean_alt = num(value)?;
                    modulator_on = true;
                }
                "pulse_wait" => cfg.pulse_wait = num(value)?,
                "inject_mode" => {
                    cfg.inject_mode = match value {
                        "poisson" => InjectMode::Poisson,
                        "exact" => InjectMode::Exact,
                        _ => return Err(Error::config(&key, "expected poisson or exact")),
                    }
                }
                "pulse" => {
                    let f = fields(&key, value, 3)?;
                    cfg.pulses.push(Pulse {
                        start: parse_quantity(&key, f[0], Dim::Time)?,
                        length: parse_quantity(&key, f[1], Dim::Time)?,
                        inject: parse_quantity(&key, f[2], Dim::Plain)?,
                    });
                }
                "pulse_train" => {
                    let f = fields(&key, value, 5)?;
                    let first = parse_quantity(&key, f[0], Dim::Time)?;
                    let period = parse_quantity(&key, f[1], Dim::Time)?;
                    let length = parse_quantity(&key, f[2], Dim::Time)?;
                    let inject = parse_quantity(&key, f[3], Dim::Plain)?;
                    let count = f[4]
                        .parse::<usize>()
                        .map_err(|_| Error::config(&key, "pulse count must be an unsigned integer"))?;
                    if !(period > 0.0) {
                        return Err(Error::config(&key, "period must be positive"));
                    }
                    cfg.pulses.extend((0..count).map(|i| Pulse {
                        start: first + i as f64 * period,
                        length,
                        inject,
                    }));
                }
                _ => unreachable!("key table and parser out of sync: {key}"),
            }
        }

        for required in ["rng_seed", "duration"] {
            if !seen.contains(required) {
                return Err(Error::config(required, "required key is missing"));
            }
        }
        cfg.thermal = thermal_on.then_some(thermal);
        cfg.modulator = modulator_on.then_some(modulator);
        cfg.pulses.sort_by(|a, b| a.start.total_cmp(&b.start));
        cfg.validate()?;
        Ok(cfg)
    }

    /// Canonical text form; `parse(serialize(c))` reproduces `c` exactly.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("rng_seed", self.rng_seed.to_string());
        kv("duration", fmt_f64(self.duration));
        kv("f_ge", fmt_f64(self.qubit.f_ge));
        kv("f_gap", fmt_f64(self.qubit.f_gap));
        kv("f_el", fmt_f64(self.qubit.f_el));
        kv("gamma_other", fmt_f64(self.qubit.gamma_other));
        kv("t_eff", fmt_f64(self.qubit.t_eff));
        kv("relaxation_multiplier", fmt_f64(self.qubit.relaxation_multiplier));
        kv("n_bar", fmt_f64(self.meas.n_bar));
        kv("kappa", fmt_f64(self.meas.kappa));
        kv("chi", fmt_f64(self.meas.chi));
        kv("t_m", fmt_f64(self.meas.t_m));
        kv("eta", fmt_f64(self.meas.eta));
        kv("g", fmt_f64(self.kinetics.g));
        kv("s", fmt_f64(self.kinetics.s));
        kv("r", fmt_f64(self.kinetics.r));
        kv("n_cp", fmt_f64(self.kinetics.n_cp));
        if let Some(n) = self.initial_qp {
            kv("initial_qp", n.to_string());
        }
        kv(
            "initial_state",
            match self.initial_state {
                InitialState::Ground => "g",
                InitialState::Excited => "e",
                InitialState::Thermal => "thermal",
            }
            .to_string(),
        );
        if let Some(th) = &self.thermal {
            kv("thermal", "true".into());
            kv("p_diss", fmt_f64(th.p_diss));
            kv("c_heat", fmt_f64(th.c_heat));
            kv("mass", fmt_f64(th.mass));
            kv("tau_th", fmt_f64(th.tau_th));
            if let Some(v) = th.cond_g {
                kv("cond_g", fmt_f64(v));
            }
            if let Some(v) = th.area {
                kv("area", fmt_f64(v));
            }
            if let Some(v) = th.length {
                kv("length", fmt_f64(v));
            }
            kv("i_c", fmt_f64(th.i_c));
            kv("v_2delta", fmt_f64(th.v_2delta));
            kv("capture_fraction", fmt_f64(th.capture_fraction));
        }
        if let Some(m) = &self.modulator {
            kv("mod_g_alt", fmt_f64(m.g_alt));
            kv("mod_mean_base", fmt_f64(m.mean_base));
            kv("mod_mean_alt", fmt_f64(m.mean_alt));
        }
        kv("pulse_wait", fmt_f64(self.pulse_wait));
        kv(
            "inject_mode",
            match self.inject_mode {
                InjectMode::Poisson => "poisson",
                InjectMode::Exact => "exact",
            }
            .to_string(),
        );
        for p in &self.pulses {
            kv(
                "pulse",
                format!("{}, {}, {}", fmt_f64(p.start), fmt_f64(p.length), fmt_f64(p.inject)),
            );
        }
        out
    }

    /// Apply `key=value` overrides on top of this configuration. Any
    /// `pulse` or `pulse_train` override replaces the existing pulse list.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut text = self.serialize();
        let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
        let replaces_pulses = overrides.iter().any(|(k, _)| {
            let k = k.trim().to_ascii_lowercase();
            k == "pulse" || k == "pulse_train"
        });
        if replaces_pulses {
            lines.retain(|l| !l.starts_with("pulse ="));
        }
        for (k, v) in overrides {
            let key = k.trim().to_ascii_lowercase();
            if key == "pulse" || key == "pulse_train" {
                lines.push(format!("{key} = {v}"));
                continue;
            }
            let prefix = format!("{key} =");
            lines.retain(|l| !l.starts_with(&prefix));
            lines.push(format!("{key} = {v}"));
        }
        text = lines.join("\n");
        Self::parse(&text)
    }
}

/// Split config text into `(key, value)` assignments without interpreting
/// them, for use with [`ScenarioConfig::with_overrides`].
pub fn parse_assignments(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::ConfigSyntax(format!("line {}: expected `key = value`", lineno + 1)))?;
        out.push((k.trim().to_ascii_lowercase(), v.trim().to_string()));
    }
    Ok(out)
}

/// Shortest representation that parses back to the same `f64`.
fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("`{v}` is not a boolean"))),
    }
}

fn fields<'a>(key: &str, value: &'a str, n: usize) -> Result<Vec<&'a str>> {
    let f: Vec<&str> = value.split(',').map(str::trim).collect();
    if f.len() != n {
        return Err(Error::config(
            key,
            format!("expected {n} comma-separated fields, got {}", f.len()),
        ));
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Time,
    Frequency,
    Angular,
    Temperature,
    Rate,
    Power,
    Plain,
}

impl Dim {
    fn suffixes(self) -> &'static [(&'static str, f64)] {
        const TAU: f64 = std::f64::consts::TAU;
        match self {
            Dim::Time => &[("ms", 1e-3), ("us", 1e-6), ("µs", 1e-6), ("ns", 1e-9), ("s", 1.0)],
            Dim::Frequency => &[("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)],
            Dim::Angular => &[
                ("rad/s", 1.0),
                ("GHz", 1e9 * TAU),
                ("MHz", 1e6 * TAU),
                ("kHz", 1e3 * TAU),
                ("Hz", TAU),
            ],
            Dim::Temperature => &[("mK", 1e-3), ("K", 1.0)],
            Dim::Rate => &[("1/s", 1.0), ("1/ms", 1e3), ("1/us", 1e6)],
            Dim::Power => &[("pW", 1e-12), ("nW", 1e-9), ("W", 1.0)],
            Dim::Plain => &[],
        }
    }

    fn label(self) -> &'static str {
        match self {
            Dim::Time => "time (s; ms, us, ns)",
            Dim::Frequency => "frequency (Hz; kHz, MHz, GHz)",
            Dim::Angular => "angular frequency (rad/s; Hz-family suffix means value/2π)",
            Dim::Temperature => "temperature (K; mK)",
            Dim::Rate => "rate (1/s)",
            Dim::Power => "power (W; nW, pW)",
            Dim::Plain => "number (SI)",
        }
    }
}

fn parse_quantity(key: &str, value: &str, dim: Dim) -> Result<f64> {
    let value = value.trim();
    let bad = || {
        Error::config(
            key,
            format!("`{value}` is not a number with a valid unit for {}", dim.label()),
        )
    };
    if let Ok(x) = value.parse::<f64>() {
        return if x.is_finite() { Ok(x) } else { Err(bad()) };
    }
    for (suffix, scale) in dim.suffixes() {
        if let Some(num) = value.strip_suffix(suffix) {
            if let Ok(x) = num.trim().parse::<f64>() {
                if x.is_finite() {
                    return Ok(x * scale);
                }
            }
        }
    }
    Err(bad())
}

struct KeySpec {
    name: &'static str,
    dim: Dim,
    default: &'static str,
    doc: &'static str,
    repeatable: bool,
}

const fn key(name: &'static str, dim: Dim, default: &'static str, doc: &'static str) -> KeySpec {
    KeySpec {
        name,
        dim,
        default,
        doc,
        repeatable: false,
    }
}

const KEYS: &[KeySpec] = &[
    key("rng_seed", Dim::Plain, "required", "64-bit seed of the random stream."),
    key("duration", Dim::Time, "required", "Total simulated time."),
    key("f_ge", Dim::Frequency, "665 MHz", "Qubit transition frequency."),
    key(
        "f_gap",
        Dim::Frequency,
        "48.36 GHz",
        "Superconducting gap Δ/h (from V_2Δ = 0.4 mV).",
    ),
    key(
        "f_el",
        Dim::Frequency,
        "0.5 GHz",
        "Inductive energy E_L/h. Assumed value, not a measured one.",
    ),
    key("gamma_other", Dim::Rate, "0", "Background (non-QP) relaxation rate."),
    key("t_eff", Dim::Temperature, "45 mK", "Effective bath temperature."),
    key(
        "relaxation_multiplier",
        Dim::Plain,
        "1",
        "Multiplier on the downward rate (readout-induced lifetime reduction).",
    ),
    key("n_bar", Dim::Plain, "2.5", "Mean readout cavity photon number."),
    key("kappa", Dim::Angular, "2π × 4.7 MHz", "Cavity linewidth."),
    key("chi", Dim::Angular, "2π × 1 MHz", "Dispersive shift."),
    key("t_m", Dim::Time, "5 us", "Integration time per I/Q sample."),
    key("eta", Dim::Plain, "0.21", "Total measurement efficiency, in (0, 1]."),
    key("g", Dim::Rate, "3.2e-4", "QP generation coefficient."),
    key("s", Dim::Rate, "8000", "Single-QP trapping/diffusion rate."),
    key("r", Dim::Rate, "0", "Recombination coefficient (acts on x²)."),
    key(
        "n_cp",
        Dim::Plain,
        "3.75e7",
        "Cooper pairs in the junction array (derived from 1.5 QPs at x = 4e-8).",
    ),
    key("initial_qp", Dim::Plain, "round(g n_cp / s)", "Initial QP count."),
    key(
        "initial_state",
        Dim::Plain,
        "thermal",
        "Initial qubit state: g, e or thermal.",
    ),
    key(
        "thermal",
        Dim::Plain,
        "false",
        "Enable pulse heating; implied by any thermal key.",
    ),
    key("p_diss", Dim::Power, "1e-10 W", "Power dissipated during a pulse."),
    key("c_heat", Dim::Plain, "1e-11", "Substrate specific heat (J/g/K)."),
    key("mass", Dim::Plain, "0.1", "Substrate mass (g)."),
    key(
        "tau_th",
        Dim::Time,
        "3 ms",
        "Thermal equilibration time of the bath after a pulse.",
    ),
    key(
        "cond_g",
        Dim::Plain,
        "6e-5",
        "Substrate heat conductivity (W/m/K); back-computed default.",
    ),
    key("area", Dim::Plain, "2.5e-6", "Cross-section to the thermal sink (m²)."),
    key("length", Dim::Plain, "3e-3", "Distance to the thermal sink (m)."),
    key("i_c", Dim::Plain, "280e-9", "Antenna junction critical current (A)."),
    key("v_2delta", Dim::Plain, "0.4e-3", "Gap voltage 2Δ/e (V)."),
    key(
        "capture_fraction",
        Dim::Plain,
        "1e-8",
        "Fraction of generated QPs captured by the array.",
    ),
    key(
        "mod_g_alt",
        Dim::Rate,
        "off",
        "Alternate generation coefficient of the slow telegraph modulator.",
    ),
    key(
        "mod_mean_base",
        Dim::Time,
        "1 s",
        "Mean sojourn of the modulator at `g`.",
    ),
    key(
        "mod_mean_alt",
        Dim::Time,
        "1 s",
        "Mean sojourn of the modulator at `mod_g_alt`.",
    ),
    key(
        "pulse_wait",
        Dim::Time,
        "5 us",
        "Dead time after each pulse before readout resumes.",
    ),
    key(
        "inject_mode",
        Dim::Plain,
        "poisson",
        "`poisson` (draw count) or `exact` (round).",
    ),
    KeySpec {
        name: "pulse",
        dim: Dim::Plain,
        default: "none",
        doc: "`start, length, inject`; repeatable.",
        repeatable: true,
    },
    KeySpec {
        name: "pulse_train",
        dim: Dim::Plain,
        default: "none",
        doc: "`first_start, period, length, inject, count`; expands to `pulse` lines.",
        repeatable: true,
    },
];

/// Markdown reference page for every configuration key.
pub fn config_reference() -> String {
    let mut out = String::from(
        "# Scenario configuration keys\n\n\
         Generated from the key table in `crates/core/src/config.rs`.\n\n\
         One `key = value` per line; `#` starts a comment. Values are SI unless a unit \
         suffix is attached. For `kappa` and `chi` a bare number is rad/s and a \
         frequency suffix means the linear frequency (value is multiplied by 2π).\n\n\
         | key | unit | default | meaning |\n|---|---|---|---|\n",
    );
    for k in KEYS {
        let _ = writeln!(out, "| `{}` | {} | {} | {} |", k.name, k.dim.label(), k.default, k.doc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_takes_defaults() {
        let c = ScenarioConfig::parse("rng_seed = 7\nduration = 1\n").unwrap();
        assert_eq!(c.rng_seed, 7);
        assert_eq!(c.duration, 1.0);
        assert_eq!(c.qubit, QubitParams::default());
        assert_eq!(c.meas, MeasurementParams::default());
        assert!(c.thermal.is_none() && c.modulator.is_none() && c.pulses.is_empty());
    }

    #[test]
    fn bad_eta_names_key() {
        let err = ScenarioConfig::parse("rng_seed = 1\nduration = 1\neta = 1.5\n").unwrap_err();
        assert!(err.to_string().contains("eta"), "{err}");
    }

    #[test]
    fn missing_required_key_is_named() {
        let err = ScenarioConfig::parse("duration = 1\n").unwrap_err();
        assert!(err.to_string().contains("rng_seed"), "{err}");
    }

    #[test]
    fn non_numeric_value_is_named() {
        let err = ScenarioConfig::parse("rng_seed = 1\nduration = soon\n").unwrap_err();
        assert!(err.to_string().contains("duration"), "{err}");
    }

    #[test]
    fn readout_defaults_in_suffix_form_are_accepted() {
        let text = "rng_seed = 3\nduration = 10ms\n\
                    n_bar = 2.5\nkappa = 4.7 MHz\nchi = 1MHz # angular from linear\n\
                    t_m = 5us\neta = 0.21\nt_eff = 45 mK\n";
        let c = ScenarioConfig::parse(text).unwrap();
        assert!((c.meas.kappa / 2.953e7 - 1.0).abs() < 5e-4);
        assert!((c.meas.chi - 2.0 * std::f64::consts::PI * 1e6).abs() < 1e-6);
        assert!((c.meas.t_m - 5e-6).abs() < 1e-18);
        assert!((c.duration - 1e-2).abs() < 1e-15);
        assert!((c.qubit.t_eff - 0.045).abs() < 1e-15);
    }

    #[test]
    fn pulse_train_expands_and_checks_overlap() {
        let c = ScenarioConfig::parse("rng_seed = 1\nduration = 1\npulse_train = 0, 10.105ms, 100us, 4, 5\n").unwrap();
        assert_eq!(c.pulses.len(), 5);
        assert!((c.pulses[4].start - 4.0 * 10.105e-3).abs() < 1e-12);

        let err = ScenarioConfig::parse("rng_seed = 1\nduration = 1\npulse = 0, 100us, 1\npulse = 102us, 10us, 1\n")
            .unwrap_err();
        assert!(err.to_string().contains("pulse"), "{err}");
    }

    #[test]
    fn pulse_past_duration_is_rejected() {
        assert!(ScenarioConfig::parse("rng_seed = 1\nduration = 1ms\npulse = 0.95ms, 100us, 1\n").is_err());
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        assert!(ScenarioConfig::parse("rng_seed = 1\nduration = 1\nfoo = 2\n").is_err());
        assert!(ScenarioConfig::parse("rng_seed = 1\nduration = 1\nduration = 2\n").is_err());
    }

    #[test]
    fn wrong_unit_is_rejected() {
        let err = ScenarioConfig::parse("rng_seed = 1\nduration = 3 MHz\n").unwrap_err();
        assert!(err.to_string().contains("duration"));
    }

    #[test]
    fn overrides_replace_values() {
        let c = ScenarioConfig::with_defaults(1, 1.0);
        let o = c
            .with_overrides(&[("s".into(), "40000".into()), ("duration".into(), "2".into())])
            .unwrap();
        assert_eq!(o.kinetics.s, 40000.0);
        assert_eq!(o.duration, 2.0);
    }

    #[test]
    fn reference_lists_every_key() {
        let page = config_reference();
        for k in KEYS {
            assert!(page.contains(&format!("`{}`", k.name)));
        }
    }

    proptest::proptest! {
        #[test]
        fn serialize_parse_is_a_fixed_point(
            seed in proptest::num::u64::ANY,
            duration in 1e-3f64..100.0,
            g in 0.0f64..1e-3,
            s in 1.0f64..1e5,
            eta in 0.01f64..1.0,
            t_eff in 0.01f64..0.2,
            with_thermal in proptest::bool::ANY,
            n_pulses in 0usize..4,
            g_alt in proptest::option::of(0.0f64..1e-3),
        ) {
            let text = {
                let mut t = format!(
                    "rng_seed = {seed}\nduration = {duration}\ng = {g}\ns = {s}\neta = {eta}\nt_eff = {t_eff}\n"
                );
                if with_thermal { t.push_str("thermal = true\ntau_th = 2ms\n"); }
                if let Some(a) = g_alt { t.push_str(&format!("mod_g_alt = {a}\nmod_mean_alt = 3\n")); }
                for i in 0..n_pulses {
                    let start = duration * (i as f64) / 4.0;
                    t.push_str(&format!("pulse = {start}, {}, 1.5\n", duration / 100.0));
                }
                t
            };
            let first = ScenarioConfig::parse(&text).unwrap();
            let once = first.serialize();
            let second = ScenarioConfig::parse(&once).unwrap();
            proptest::prop_assert_eq!(&first, &second);
            proptest::prop_assert_eq!(once, second.serialize());
        }
    }
}
