//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod oracle;

use std::cell::OnceCell;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use qpjumps::experiments::{
    analyze_record, matched_constant_rate, median, overall_mean_ground_dwell, preset, run_experiment, simulate_record,
    Experiment, ExperimentOptions,
};
use qpjumps::jumps::{pulse_power, qp_generation_rate, snr_separation, thermal_decay_constant, thermal_transient};
use qpjumps::kinetics::{steady_state, tau_ss};
use qpjumps::params::ThermalParams;
use qpjumps::units::polarization_to_temperature;
use qpjumps::{MeasurementParams, QpKineticsParams, QubitState, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn within(name: &str, value: f64, target: f64, tol: f64) -> Check {
    let msg = format!("{name} = {value:.6e} (target {target:.6e} ± {tol:.2e})");
    if (value - target).abs() <= tol {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn all(parts: Vec<Check>) -> Check {
    let ok = parts.iter().all(Result::is_ok);
    let text = parts
        .into_iter()
        .map(|p| p.unwrap_or_else(|e| format!("{e} <- out of tolerance")))
        .collect::<Vec<_>>()
        .join("; ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn summary_f(out: &qpjumps::experiments::ExperimentOutput, key: &str) -> Result<f64, String> {
    out.get(key)
        .ok_or_else(|| format!("{key} missing from summary"))?
        .parse()
        .map_err(|e| format!("{key}: {e}"))
}

fn snr() -> Check {
    let sep = 2.0 * snr_separation(&MeasurementParams::default());
    within("peak separation 2I/sigma", sep, 5.2, 0.05)
}

fn polarization_temperature() -> Check {
    let t = polarization_to_temperature(0.33, 665e6).map_err(|e| e.to_string())?;
    within("T_eff (K)", t, 0.045, 0.0005)
}

fn thermal_energetics() -> Check {
    let th = ThermalParams::<f64>::default();
    let tau = thermal_decay_constant(
        th.c_heat,
        th.length.unwrap(),
        th.mass,
        th.cond_g.unwrap(),
        th.area.unwrap(),
    );
    all(vec![
        within("P (W)", pulse_power(280e-9, 0.4e-3), 1.12e-10, 0.01e-10),
        within("generation rate (1/us)", qp_generation_rate(&th) * 1e-6, 1.6e6, 0.1e6),
        within(
            "dT at 100 us (K)",
            thermal_transient(&th, 100e-6).delta_t,
            0.010,
            0.0005,
        ),
        within("tau_th helper (s)", tau, 20e-6, 2e-6),
    ])
}

fn kinetics_triple() -> Check {
    let p = QpKineticsParams::default();
    let x = steady_state(&p).map_err(|e| e.to_string())?;
    let tau = tau_ss(&p, x).map_err(|e| e.to_string())?;
    // generation recovered from the steady state and its relaxation time
    let g_eff = x / tau;
    all(vec![
        within("x_bar", x, 4e-8, 0.25 * 4e-8),
        within("tau_ss (s)", tau, 125e-6, 0.25 * 125e-6),
        within("g_eff (1/s)", g_eff, 3.2e-4, 0.25 * 3.2e-4),
    ])
}

fn recovery_round_trip() -> Check {
    let cfg = preset(Experiment::Recovery, 7, &[]).map_err(|e| e.to_string())?;
    let truth_x = steady_state(&cfg.kinetics).map_err(|e| e.to_string())?;
    let truth_tau = tau_ss(&cfg.kinetics, truth_x).map_err(|e| e.to_string())?;
    let opts = ExperimentOptions {
        bootstrap: 50,
        ..Default::default()
    };
    let out = run_experiment(Experiment::Recovery, &cfg, &opts).map_err(|e| e.to_string())?;
    let tau = summary_f(&out, "tau_ss_s")?;
    let x = summary_f(&out, "x_bar")?;
    all(vec![
        if cfg.pulses.len() >= 10_000 {
            Ok(format!("{} injection cycles", cfg.pulses.len()))
        } else {
            Err(format!("{} injection cycles (need 10^4)", cfg.pulses.len()))
        },
        within("tau_ss (s)", tau, truth_tau, 0.10 * truth_tau),
        within("x_bar", x, truth_x, 0.25 * truth_x),
    ])
}

struct Contrast {
    modulated_median: f64,
    constant_median_f: f64,
    tau_modulated: f64,
    tau_constant: f64,
    correlation: f64,
    quiet_fraction: f64,
    windows: usize,
}

fn poisson_contrast(seed: u64) -> Result<Contrast, String> {
    let opts = ExperimentOptions::default();
    let cfg = preset(Experiment::QuietNoisy, seed, &[]).map_err(|e| e.to_string())?;
    let out = run_experiment(Experiment::QuietNoisy, &cfg, &opts).map_err(|e| e.to_string())?;
    let (_, iq) = simulate_record(&cfg);
    let (est, _) = analyze_record(&iq, &cfg.meas, &opts.report).map_err(|e| e.to_string())?;
    let tau_mod = overall_mean_ground_dwell(&est);

    // one fixed-point step removes the filter's bias on the matched dwell
    let mut target = tau_mod;
    let mut rows_c = Vec::new();
    let mut tau_c = f64::NAN;
    for _ in 0..2 {
        let c = matched_constant_rate(&cfg, target);
        let (_, iq_c) = simulate_record(&c);
        let (est_c, rows) = analyze_record(&iq_c, &c.meas, &opts.report).map_err(|e| e.to_string())?;
        tau_c = overall_mean_ground_dwell(&est_c);
        rows_c = rows;
        target = target * tau_mod / tau_c;
    }
    Ok(Contrast {
        modulated_median: summary_f(&out, "median_one_minus_F")?,
        constant_median_f: 1.0 - median(rows_c.iter().filter_map(|r| r.one_minus_f())),
        tau_modulated: tau_mod,
        tau_constant: tau_c,
        correlation: summary_f(&out, "correlation_tau_g_log_fidelity")?,
        quiet_fraction: summary_f(&out, "quiet_fraction")?,
        windows: summary_f(&out, "windows")? as usize,
    })
}

fn poissonianity(c: &Contrast) -> Check {
    let ratio = c.modulated_median / (1.0 - c.constant_median_f);
    let matched = (c.tau_constant / c.tau_modulated - 1.0).abs();
    let parts = vec![
        Ok(format!(
            "mean ground dwell {:.4e} s modulated vs {:.4e} s constant",
            c.tau_modulated, c.tau_constant
        )),
        if matched < 0.05 {
            Ok(format!("dwells matched to {:.1}%", 100.0 * matched))
        } else {
            Err(format!("dwells differ by {:.1}%", 100.0 * matched))
        },
        if c.constant_median_f > 0.95 {
            Ok(format!("constant median F = {:.4}", c.constant_median_f))
        } else {
            Err(format!("constant median F = {:.4} (need > 0.95)", c.constant_median_f))
        },
        if ratio >= 10.0 {
            Ok(format!("median 1-F ratio = {ratio:.1}"))
        } else {
            Err(format!("median 1-F ratio = {ratio:.1} (need >= 10)"))
        },
    ];
    all(parts)
}

fn correlation(c: &Contrast) -> Check {
    let parts = vec![
        if c.windows >= 100 {
            Ok(format!("{} windows", c.windows))
        } else {
            Err(format!("only {} windows", c.windows))
        },
        if c.quiet_fraction > 0.05 && c.quiet_fraction < 0.95 {
            Ok(format!("quiet fraction {:.3}", c.quiet_fraction))
        } else {
            Err(format!(
                "quiet fraction {:.3} does not span both regimes",
                c.quiet_fraction
            ))
        },
        if c.correlation > 0.5 {
            Ok(format!("correlation = {:.3}", c.correlation))
        } else {
            Err(format!("correlation = {:.3} (need > 0.5)", c.correlation))
        },
    ];
    all(parts)
}

fn psd_fit() -> Check {
    let cfg = ScenarioConfig::with_defaults(0, 1.0);
    let out = run_experiment(Experiment::Psd, &cfg, &ExperimentOptions::default()).map_err(|e| e.to_string())?;
    all(vec![
        within("power-law alpha", summary_f(&out, "power_law_alpha")?, 1.4, 0.15),
        within("telegraph alpha", summary_f(&out, "telegraph_alpha")?, 2.0, 0.15),
    ])
}

fn oracle_suites() -> Check {
    let ode = oracle::ode_linearization_error();
    let chi = oracle::birth_death_chi_square(2024, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut filter_ok = 0;
    for _ in 0..500 {
        let n = rng.random_range(3..40);
        let lengths: Vec<u32> = (0..n).map(|_| rng.random_range(2..40)).collect();
        let first = if rng.random() {
            QubitState::Excited
        } else {
            QubitState::Ground
        };
        filter_ok += usize::from(oracle::noise_free_filter_exact(first, &lengths));
    }
    let parseval = oracle::parseval_error(99);
    all(vec![
        if ode < 1e-6 {
            Ok(format!("ODE vs linearization {ode:.2e}"))
        } else {
            Err(format!("ODE vs linearization {ode:.2e} (need < 1e-6)"))
        },
        if chi.p_value > 0.01 {
            Ok(format!(
                "chi2 {:.1} over {} cells, p = {:.3}",
                chi.stat, chi.cells, chi.p_value
            ))
        } else {
            Err(format!(
                "chi2 {:.1} over {} cells, p = {:.3} (need > 0.01)",
                chi.stat, chi.cells, chi.p_value
            ))
        },
        if filter_ok == 500 {
            Ok("noise-free filter exact on 500/500 traces".into())
        } else {
            Err(format!("noise-free filter exact on {filter_ok}/500 traces"))
        },
        if parseval < 1e-9 {
            Ok(format!("Parseval {parseval:.2e}"))
        } else {
            Err(format!("Parseval {parseval:.2e} (need < 1e-9)"))
        },
    ])
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_qpjumps"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    match o.status.code() {
        Some(0) | Some(5) => Ok(()),
        _ => Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&o.stderr).trim()
        )),
    }
}

fn data_files(dir: &Path, out: &mut Vec<std::path::PathBuf>) {
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            data_files(&p, out);
        } else if p.file_name().is_some_and(|n| n != "manifest.json") {
            out.push(p);
        }
    }
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = tmp.path().join("scenario.txt");
    fs::write(&cfg, "duration = 3 s\nrng_seed = 17\n").map_err(|e| e.to_string())?;
    let cfg = cfg.to_str().unwrap();
    let mut compared = 0;
    for (tag, args) in [
        ("simulate", vec!["simulate", "--config", cfg, "--emit-truth"]),
        (
            "experiment",
            vec!["experiment", "quiet-noisy", "--set", "duration=5 s", "--seed", "3"],
        ),
        (
            "recovery",
            vec![
                "experiment",
                "recovery",
                "--set",
                "duration=10 s",
                "--seed",
                "3",
                "--bootstrap",
                "10",
            ],
        ),
    ] {
        let dirs = [tmp.path().join(format!("{tag}_a")), tmp.path().join(format!("{tag}_b"))];
        for d in &dirs {
            let mut a = args.clone();
            a.extend(["--out", d.to_str().unwrap()]);
            run_cli(&a)?;
        }
        if tag == "simulate" {
            for d in &dirs {
                let rec = d.join("record.qjiq");
                let rec = rec.to_str().unwrap();
                run_cli(&["filter", rec, "--out", d.join("filter").to_str().unwrap()])?;
                run_cli(&["stats", rec, "--out", d.join("stats").to_str().unwrap()])?;
            }
        }
        let mut files = Vec::new();
        data_files(&dirs[0], &mut files);
        for f in files {
            let rel = f.strip_prefix(&dirs[0]).unwrap();
            let a = fs::read(&f).map_err(|e| e.to_string())?;
            let b = fs::read(dirs[1].join(rel)).map_err(|e| format!("{}: {e}", rel.display()))?;
            if a != b {
                return Err(format!("{tag}: {} differs between runs", rel.display()));
            }
            compared += 1;
        }
    }
    Ok(format!("{compared} data files byte-identical across repeated runs"))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, f: &dyn Fn() -> Check| {
        let t0 = Instant::now();
        let r = f();
        let secs = t0.elapsed().as_secs_f64();
        match r {
            Ok(msg) => println!("PASS  {id:>2} {name} [{secs:.1} s]: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {id:>2} {name} [{secs:.1} s]: {msg}");
            }
        }
    };
    report(1, "readout SNR", &snr);
    report(2, "polarization temperature", &polarization_temperature);
    report(3, "thermal energetics", &thermal_energetics);
    report(4, "kinetics consistency", &kinetics_triple);
    report(5, "recovery round trip", &recovery_round_trip);
    // criteria 6 and 7 share one modulated record
    let contrast = OnceCell::new();
    let shared = || {
        contrast
            .get_or_init(|| poisson_contrast(1))
            .as_ref()
            .map_err(Clone::clone)
    };
    report(6, "Poissonianity contrast", &|| poissonianity(shared()?));
    report(7, "correlation structure", &|| correlation(shared()?));
    report(8, "PSD fit", &psd_fit);
    report(9, "oracle suites", &oracle_suites);
    report(10, "determinism", &determinism);
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 criteria failed");
        ExitCode::FAILURE
    }
}
