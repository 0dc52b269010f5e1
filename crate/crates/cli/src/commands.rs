use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qpjumps::analysis::{
    per_second_report, polarization, two_point_filter, write_report_csv, MeanKind, ReportOptions, StateEstimate,
};
use qpjumps::config::parse_assignments;
use qpjumps::experiments::{self, fit_periodogram, Experiment, ExperimentOptions};
use qpjumps::fitting::{
    fit_power_law_with, fit_recovery_with, fit_thermal_with, periodogram, welch, DecayFitOptions, PsdFit,
    PsdFitOptions, Spectrum,
};
use qpjumps::io::{fmt9, read_iq_file, truth_path, write_atomic, write_iq};
use qpjumps::jumps::{qp_density_from_rate, snr_separation, IqRecord};
use qpjumps::{Error, Result, ScenarioConfig};

use crate::manifest::{sha256_hex, RunManifest};

/// Settings shared by all subcommands.
pub struct Common {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub emit_truth: bool,
    pub set: Vec<(String, String)>,
}

/// Outcome of a command: warnings turn a success into the "warned" status.
pub struct Outcome {
    pub warnings: Vec<String>,
}

/// Collects outputs of one command and writes the manifest last.
struct Run<'a> {
    common: &'a Common,
    manifest: RunManifest,
    started: std::time::Instant,
}

impl<'a> Run<'a> {
    fn new(common: &'a Common, command: &str) -> Result<Self> {
        fs::create_dir_all(&common.out)?;
        Ok(Self {
            common,
            manifest: RunManifest::new(command),
            started: std::time::Instant::now(),
        })
    }

    fn input(&mut self, p: &Path) {
        self.manifest.inputs.push(p.display().to_string());
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        self.bytes(name, body.as_bytes())
    }

    fn bytes(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let path = self.common.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        write_atomic(&path, |w| w.write_all(body))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn config(&mut self, cfg: &ScenarioConfig) -> Result<()> {
        let text = cfg.serialize();
        self.manifest.config_hash = Some(sha256_hex(text.as_bytes()));
        self.manifest.rng_seed = Some(cfg.rng_seed);
        self.text("config.txt", &text)
    }

    fn count(&mut self, stage: &str, n: u64) {
        self.manifest.counts.insert(stage.to_string(), n);
    }

    fn finish(mut self, warnings: Vec<String>) -> Result<Outcome> {
        self.manifest.wall_clock_s = self.started.elapsed().as_secs_f64();
        self.manifest.warnings = warnings.clone();
        self.manifest.write(&self.common.out)?;
        Ok(Outcome { warnings })
    }
}

fn kv_csv(rows: &[(&str, String)]) -> String {
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        let _ = writeln!(s, "{k},{v}");
    }
    s
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Scenario from `--config` (or defaults when `required` is false),
/// then `--set` overrides, then `--seed`.
pub fn scenario(common: &Common, required: bool) -> Result<ScenarioConfig> {
    let base = match &common.config {
        Some(p) => ScenarioConfig::parse(&read_text(p)?)?,
        None if required => {
            return Err(Error::Config {
                key: "config".into(),
                reason: "this command needs --config".into(),
            })
        }
        None => ScenarioConfig::with_defaults(0, 1.0),
    };
    let mut overrides = common.set.clone();
    if let Some(seed) = common.seed {
        overrides.push(("rng_seed".into(), seed.to_string()));
    }
    if overrides.is_empty() {
        Ok(base)
    } else {
        base.with_overrides(&overrides)
    }
}

fn record_to_bytes(iq: &IqRecord) -> Vec<u8> {
    let mut buf = Vec::with_capacity(24 + 16 * iq.len());
    write_iq(iq, &mut buf).expect("in-memory write");
    buf
}

pub fn simulate(common: &Common) -> Result<Outcome> {
    let cfg = scenario(common, true)?;
    let mut run = Run::new(common, "simulate")?;
    if let Some(p) = &common.config {
        run.input(p);
    }
    let (sim, iq) = experiments::simulate_record(&cfg);
    run.bytes("record.qjiq", &record_to_bytes(&iq))?;
    if common.emit_truth {
        let mut buf = Vec::new();
        sim.truth.write_csv(&mut buf)?;
        let name = truth_path(Path::new("record.qjiq"));
        run.bytes(&name.display().to_string(), &buf)?;
        let mut ev = Vec::new();
        sim.qp_events.write_csv(&mut ev)?;
        run.bytes("qp_events.csv", &ev)?;
    }
    run.config(&cfg)?;
    run.count("truth_entries", sim.truth.entries.len() as u64);
    run.count("qp_events", sim.qp_events.events.len() as u64);
    run.count("iq_samples", iq.len() as u64);
    run.finish(Vec::new())
}

fn separation(common: &Common, explicit: Option<f64>) -> Result<f64> {
    match explicit {
        Some(s) => Ok(s),
        None => Ok(snr_separation(&scenario(common, false)?.meas)),
    }
}

fn states_csv(est: &StateEstimate) -> String {
    let mut s = String::with_capacity(24 * est.len() + 16);
    s.push_str("t_s,state\n");
    for (k, st) in est.states.iter().enumerate() {
        let label = st.map_or(String::new(), |q| q.to_string());
        let _ = writeln!(s, "{},{label}", fmt9((k as f64 + 0.5) * est.t_m));
    }
    s
}

pub fn filter(common: &Common, record: &Path, sep: Option<f64>) -> Result<Outcome> {
    let iq = read_iq_file(record)?;
    let sep = separation(common, sep)?;
    let est = two_point_filter(&iq, sep)?;
    let mut run = Run::new(common, "filter")?;
    run.input(record);
    run.text("states.csv", &states_csv(&est))?;
    let pol = polarization(&est)?;
    let th = est.thresholds;
    run.text(
        "filter_summary.csv",
        &kv_csv(&[
            ("separation", fmt9(th.separation)),
            ("margin", fmt9(th.margin)),
            ("to_excited_threshold", fmt9(th.to_excited())),
            ("to_ground_threshold", fmt9(th.to_ground())),
            ("p_excited", fmt9(pol.p_excited)),
            ("sigma_z", fmt9(pol.sigma_z)),
        ]),
    )?;
    run.count("iq_samples", iq.len() as u64);
    run.count("observed_samples", pol.samples as u64);
    run.finish(Vec::new())
}

pub struct StatsArgs {
    pub window: f64,
    pub bins_per_decade: usize,
    pub min_dwells: usize,
    pub sample_weighted: bool,
    pub separation: Option<f64>,
}

pub fn stats(common: &Common, record: &Path, a: &StatsArgs) -> Result<Outcome> {
    let iq = read_iq_file(record)?;
    if iq.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{}: record has no samples",
            record.display()
        )));
    }
    let sep = separation(common, a.separation)?;
    let opts = ReportOptions {
        window: a.window,
        bins_per_decade: a.bins_per_decade,
        min_dwells: a.min_dwells,
        mean: if a.sample_weighted {
            MeanKind::SampleWeighted
        } else {
            MeanKind::PerDwell
        },
    };
    let est = two_point_filter(&iq, sep)?;
    let rows = per_second_report(&est, &opts)?;
    let mut run = Run::new(common, "stats")?;
    run.input(record);
    let mut buf = Vec::new();
    write_report_csv(&rows, &mut buf)?;
    run.bytes("per_second.csv", &buf)?;
    for (i, r) in rows.iter().enumerate() {
        for (tag, h, p) in [("g", &r.hist_g, &r.pred_g), ("e", &r.hist_e, &r.pred_e)] {
            if let Some(h) = h {
                let mut b = Vec::new();
                h.write_csv(p, &mut b)?;
                run.bytes(&format!("histograms/window_{i:05}_{tag}.csv"), &b)?;
            }
        }
    }
    let med = |f: &dyn Fn(&qpjumps::analysis::WindowStats) -> Option<f64>| {
        fmt9(experiments::median(rows.iter().filter_map(f)))
    };
    run.text(
        "stats_summary.csv",
        &kv_csv(&[
            ("windows", rows.len().to_string()),
            ("median_tau_g_s", med(&|r| r.tau_g)),
            ("median_tau_e_s", med(&|r| r.tau_e)),
            ("median_F", med(&|r| r.fidelity)),
            ("median_one_minus_F", med(&|r| r.one_minus_f())),
        ]),
    )?;
    run.count("iq_samples", iq.len() as u64);
    run.count("windows", rows.len() as u64);
    run.finish(Vec::new())
}

/// Two numeric columns of a CSV file, selected by header name. Rows where
/// either value is not finite are dropped.
fn read_columns(path: &Path, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let fmt_err = |offset: u64, reason: String| Error::Format {
        offset,
        reason: format!("{}: {reason}", path.display()),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(fs::File::open(path)?);
    let headers = rdr.headers().map_err(|e| fmt_err(0, e.to_string()))?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            fmt_err(
                0,
                format!(
                    "no column `{name}` (have: {})",
                    headers.iter().collect::<Vec<_>>().join(", ")
                ),
            )
        })
    };
    let (ix, iy) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| fmt_err(e.position().map_or(0, |p| p.byte()), e.to_string()))?;
        let offset = rec.position().map_or(0, |p| p.byte());
        let get = |i: usize| {
            rec.get(i).and_then(qpjumps::io::parse_float).ok_or_else(|| {
                fmt_err(
                    offset,
                    format!("non-numeric value in line {}", rec.position().map_or(0, |p| p.line())),
                )
            })
        };
        let (a, b) = (get(ix)?, get(iy)?);
        if a.is_finite() && b.is_finite() {
            xs.push(a);
            ys.push(b);
        }
    }
    Ok((xs, ys))
}

pub struct PsdArgs {
    pub spectrum: bool,
    pub segments: Option<usize>,
    pub bootstrap: usize,
    pub time_column: String,
    pub value_column: String,
}

fn psd_outputs(run: &mut Run, fit: &PsdFit<f64>, freqs: &[f64], power: &[f64]) -> Result<()> {
    let knee = fit.b.powf(1.0 / fit.alpha) / std::f64::consts::TAU;
    run.text(
        "fit_psd.csv",
        &kv_csv(&[
            ("a", fmt9(fit.a)),
            ("a_se", fmt9(fit.se[0])),
            ("b", fmt9(fit.b)),
            ("b_se", fmt9(fit.se[1])),
            ("alpha", fmt9(fit.alpha)),
            ("alpha_se", fmt9(fit.se[2])),
            ("c", fmt9(fit.c)),
            ("c_se", fmt9(fit.se[3])),
            ("knee_hz", fmt9(knee)),
            ("residual_norm", fmt9(fit.residual_norm)),
        ]),
    )?;
    let mut s = String::from("f_hz,power,model,log_residual\n");
    for (f, p) in freqs.iter().zip(power) {
        let m = fit.eval(*f);
        let _ = writeln!(s, "{},{},{},{}", fmt9(*f), fmt9(*p), fmt9(m), fmt9(p.ln() - m.ln()));
    }
    run.text("residuals.csv", &s)
}

pub fn fit_psd(common: &Common, input: &Path, a: &PsdArgs) -> Result<Outcome> {
    let seed = common.seed.unwrap_or(0);
    let mut run = Run::new(common, "fit-psd")?;
    run.input(input);
    run.manifest.rng_seed = Some(seed);
    let (fit, freqs, power) = if a.spectrum {
        let (f, p) = read_columns(input, &a.time_column, &a.value_column)?;
        let opts = PsdFitOptions {
            periodogram_segments: a.segments,
            bootstrap: a.bootstrap,
            seed,
            ..Default::default()
        };
        (fit_power_law_with(&f, &p, &opts)?, f, p)
    } else {
        let (t, v) = read_columns(input, &a.time_column, &a.value_column)?;
        if t.len() < 2 {
            return Err(Error::InsufficientData("series needs at least two samples".into()));
        }
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        if t.windows(2).any(|w| ((w[1] - w[0]) / dt - 1.0).abs() > 1e-6) {
            return Err(Error::Format {
                offset: 0,
                reason: format!("{}: samples are not uniformly spaced", input.display()),
            });
        }
        let spec: Spectrum<f64> = match a.segments {
            Some(k) if k > 1 => welch(&v, dt, k)?,
            _ => periodogram(&v, dt)?,
        };
        let fit = fit_periodogram(&spec, a.bootstrap, seed)?;
        let hi = spec.freqs.len() - 1;
        (fit, spec.freqs[1..hi].to_vec(), spec.power[1..hi].to_vec())
    };
    psd_outputs(&mut run, &fit, &freqs, &power)?;
    run.count("spectrum_points", freqs.len() as u64);
    run.finish(Vec::new())
}

pub struct DecayArgs {
    pub bootstrap: usize,
    pub time_column: String,
    pub value_column: String,
}

pub fn fit_recovery(common: &Common, input: &Path, a: &DecayArgs) -> Result<Outcome> {
    let cfg = scenario(common, false)?;
    let (t, tau) = read_columns(input, &a.time_column, &a.value_column)?;
    let fit = fit_recovery_with(
        &t,
        &tau,
        &cfg.qubit,
        &DecayFitOptions {
            weights: None,
            bootstrap: a.bootstrap,
            seed: cfg.rng_seed,
        },
    )?;
    let mut run = Run::new(common, "fit-recovery")?;
    run.input(input);
    run.config(&cfg)?;
    run.text(
        "fit_recovery.csv",
        &kv_csv(&[
            ("tau_ss_s", fmt9(fit.tau_ss)),
            ("tau_ss_se_s", fmt9(fit.se[0])),
            ("x_bar", fmt9(fit.x_bar)),
            ("x_bar_se", fmt9(fit.se[1])),
            ("x0", fmt9(fit.x0)),
            ("x0_se", fmt9(fit.se[2])),
            ("g_eff_per_s", fmt9(fit.g_eff())),
            ("identifiable", fit.identifiable.to_string()),
            ("residual_norm", fmt9(fit.residual_norm)),
        ]),
    )?;
    let mut s = String::from("t_s,x_qp,model,residual\n");
    for (ti, ta) in t.iter().zip(&tau) {
        let x = qp_density_from_rate(1.0 / ta, &cfg.qubit);
        let m = fit.eval(*ti);
        let _ = writeln!(s, "{},{},{},{}", fmt9(*ti), fmt9(x), fmt9(m), fmt9(x - m));
    }
    run.text("residuals.csv", &s)?;
    run.count("points", t.len() as u64);
    let warnings = if fit.identifiable {
        Vec::new()
    } else {
        vec!["recovery time constant is not identifiable".to_string()]
    };
    run.finish(warnings)
}

pub fn fit_thermal(common: &Common, input: &Path, a: &DecayArgs) -> Result<Outcome> {
    let (t, temp) = read_columns(input, &a.time_column, &a.value_column)?;
    let seed = common.seed.unwrap_or(0);
    let fit = fit_thermal_with(
        &t,
        &temp,
        &DecayFitOptions {
            weights: None,
            bootstrap: a.bootstrap,
            seed,
        },
    )?;
    let mut run = Run::new(common, "fit-thermal")?;
    run.input(input);
    run.manifest.rng_seed = Some(seed);
    run.text(
        "fit_thermal.csv",
        &kv_csv(&[
            ("t_base_k", fmt9(fit.t_base)),
            ("t_base_se_k", fmt9(fit.se[0])),
            ("delta_t_k", fmt9(fit.delta_t)),
            ("delta_t_se_k", fmt9(fit.se[1])),
            ("tau_th_s", fmt9(fit.tau_th)),
            ("tau_th_se_s", fmt9(fit.se[2])),
            ("identifiable", fit.identifiable.to_string()),
            ("residual_norm", fmt9(fit.residual_norm)),
        ]),
    )?;
    let mut s = String::from("t_s,t_eff_k,model,residual\n");
    for (ti, yi) in t.iter().zip(&temp) {
        let m = fit.eval(*ti);
        let _ = writeln!(s, "{},{},{},{}", fmt9(*ti), fmt9(*yi), fmt9(m), fmt9(yi - m));
    }
    run.text("residuals.csv", &s)?;
    run.count("points", t.len() as u64);
    let mut warnings: Vec<String> = fit.warning.into_iter().collect();
    if !fit.identifiable {
        warnings.push("thermal time constant is not identifiable".into());
    }
    run.finish(warnings)
}

pub fn snr(common: &Common) -> Result<Outcome> {
    let cfg = scenario(common, false)?;
    let s = snr_separation(&cfg.meas);
    println!("I/sigma = {s:.4}");
    println!("2I/sigma = {:.4}", 2.0 * s);
    let mut run = Run::new(common, "snr")?;
    run.config(&cfg)?;
    run.text(
        "snr.csv",
        &kv_csv(&[("i_over_sigma", fmt9(s)), ("peak_separation_sigma", fmt9(2.0 * s))]),
    )?;
    run.finish(Vec::new())
}

pub fn experiment(common: &Common, name: &str, opts: &ExperimentOptions) -> Result<Outcome> {
    let exp: Experiment = name.parse()?;
    let mut overrides = match &common.config {
        Some(p) => parse_assignments(&read_text(p)?)?,
        None => Vec::new(),
    };
    overrides.extend(common.set.iter().cloned());
    let file_seed = overrides
        .iter()
        .rev()
        .find(|(k, _)| k == "rng_seed")
        .and_then(|(_, v)| v.parse::<u64>().ok());
    let seed = common.seed.or(file_seed).unwrap_or(0);
    overrides.retain(|(k, _)| k != "rng_seed");
    let cfg = experiments::preset(exp, seed, &overrides)?;
    let out = experiments::run_experiment(exp, &cfg, opts)?;
    let mut run = Run::new(common, &format!("experiment {exp}"))?;
    if let Some(p) = &common.config {
        run.input(p);
    }
    for t in &out.tables {
        run.text(&t.name, &t.csv)?;
    }
    run.text("summary.csv", &out.summary_csv())?;
    run.config(&cfg)?;
    for (k, n) in &out.counts {
        run.count(k, *n);
    }
    run.finish(out.warnings)
}
