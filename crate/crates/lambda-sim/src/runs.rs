//! Batch execution drivers behind the CLI: spectra, gradient sweeps,
//! memory runs, and file fits. All outputs are comma-delimited text with
//! `#`-prefixed metadata headers; identical configurations produce
//! byte-identical files (timestamps live in one comment line that the
//! reproducible flag suppresses). Reductions and writes are ordered, so
//! the worker count never changes results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::floquet::{self, SpectrumOptions};
use crate::memory;
use crate::params::{validate, MemoryTag, ModelTag, SpectrumTrace};
use crate::rate;
use crate::units;

fn fmt_num(x: f64) -> String {
    format!("{x:.9e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })
}

fn timestamp_line(cfg: &RunConfig) -> String {
    if cfg.reproducible {
        String::new()
    } else {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("# generated_unix={now}\n")
    }
}

/// Run everything inside a worker pool of the configured size (0 keeps
/// the process default). Results are identical for any worker count.
fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool");
        pool.install(f)
    }
}

fn echo_config(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    let path = out.join("config.resolved.txt");
    write_file(&path, &cfg.echo())?;
    Ok(path)
}

fn trace_contents(cfg: &RunConfig, trace: &SpectrumTrace, gradient_mg_cm: f64) -> String {
    let mut s = String::new();
    s.push_str("# trace=spectrum\n");
    let _ = writeln!(s, "# config_hash={}", cfg.hash());
    let _ = writeln!(s, "# model={}", trace.model.tag());
    let _ = writeln!(s, "# polarization={}", cfg.polarization.tag());
    let _ = writeln!(s, "# b0_G={}", fmt_num(cfg.b0_g));
    let _ = writeln!(s, "# db_dz_G_cm={}", fmt_num(1.0e-3 * gradient_mg_cm));
    let _ = writeln!(s, "# velocity_nodes={}", trace.velocity_nodes);
    let _ = writeln!(s, "# z_nodes={}", trace.z_nodes);
    s.push_str(&timestamp_line(cfg));
    s.push_str("delta_MHz,transmission\n");
    for (d, t) in trace.deltas.iter().zip(&trace.transmission) {
        let _ = writeln!(s, "{},{}", fmt_num(units::to_mhz(*d)), fmt_num(*t));
    }
    s
}

fn gradient_label(g: f64) -> String {
    format!("{g:.1}").replace('-', "m").replace('.', "p")
}

/// Compute one transmission trace for a given gradient with the
/// configured model.
pub fn compute_trace(cfg: &RunConfig, gradient_mg_cm: f64) -> Result<SpectrumTrace> {
    let params = cfg.system_params();
    let drive = cfg.field_drive();
    let setup = validate(params, drive)?;
    for w in &setup.warnings {
        eprintln!("warning: {w}");
    }
    let deltas = cfg.delta_grid()?;
    match cfg.model {
        ModelTag::Rate => rate::rate_spectrum(&params, &drive, &deltas, cfg.linear_transmission),
        ModelTag::Floquet => {
            let env = cfg.magnetic_environment(gradient_mg_cm);
            let opts: SpectrumOptions = cfg.spectrum_options();
            floquet::transmission_spectrum(&params, &drive, &env, &deltas, &opts)
        }
    }
}

/// `spectrum` driver: one trace file per configured gradient.
pub fn run_spectrum(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = PathBuf::from(&cfg.out_dir);
    ensure_dir(&out)?;
    let mut written = vec![echo_config(cfg, &out)?];
    with_workers(cfg.workers, || -> Result<()> {
        for &g in &cfg.gradients_mg_cm {
            let trace = compute_trace(cfg, g)?;
            let name = format!(
                "spectrum_{}_{}_g{}mGcm.csv",
                trace.model.tag(),
                cfg.polarization.tag(),
                gradient_label(g)
            );
            let path = out.join(name);
            write_file(&path, &trace_contents(cfg, &trace, g))?;
            written.push(path);
        }
        Ok(())
    })?;
    Ok(written)
}

/// `sweep` driver: traces for every gradient plus a fitted-linewidth
/// table (`sweep_linewidths.csv`).
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = PathBuf::from(&cfg.out_dir);
    ensure_dir(&out)?;
    let mut written = vec![echo_config(cfg, &out)?];

    let mut table = String::new();
    table.push_str("# trace=linewidth_sweep\n");
    let _ = writeln!(table, "# config_hash={}", cfg.hash());
    let _ = writeln!(table, "# model={}", cfg.model.tag());
    table.push_str(&timestamp_line(cfg));
    table.push_str("gradient_mG_cm,cpo_fwhm_MHz,eit_fwhm_MHz,cpo_fit_ok,eit_fit_ok\n");

    with_workers(cfg.workers, || -> Result<()> {
        for &g in &cfg.gradients_mg_cm {
            let trace = compute_trace(cfg, g)?;
            let name = format!(
                "spectrum_{}_{}_g{}mGcm.csv",
                trace.model.tag(),
                cfg.polarization.tag(),
                gradient_label(g)
            );
            let path = out.join(name);
            write_file(&path, &trace_contents(cfg, &trace, g))?;
            written.push(path);

            let (cpo, eit) = floquet::extract_linewidths(&trace);
            let _ = writeln!(
                table,
                "{},{},{},{},{}",
                fmt_num(g),
                fmt_num(cpo.map_or(f64::NAN, units::to_mhz)),
                fmt_num(eit.map_or(f64::NAN, units::to_mhz)),
                cpo.is_some(),
                eit.is_some()
            );
        }
        Ok(())
    })?;

    let table_path = out.join("sweep_linewidths.csv");
    write_file(&table_path, &table)?;
    written.push(table_path);
    Ok(written)
}

/// `memory` driver: a decay-curve file per memory type (with the fitted
/// lifetime in the header) plus retrieved-pulse traces when enabled.
pub fn run_memory(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = PathBuf::from(&cfg.out_dir);
    ensure_dir(&out)?;
    let mut written = vec![echo_config(cfg, &out)?];

    let params = cfg.system_params();
    let setup = validate(params, cfg.field_drive())?;
    for w in &setup.warnings {
        eprintln!("warning: {w}");
    }
    let env = cfg.magnetic_environment(cfg.db_dz_mg_cm);
    let seq = cfg.pulse_sequence(0.0);
    let opts = cfg.memory_options();
    let times = cfg.storage_times_s();

    with_workers(cfg.workers, || -> Result<()> {
        for memory in [MemoryTag::Cpo, MemoryTag::Eit] {
            let (curve, pulses) =
                memory::decay_curve(&params, &env, &seq, memory, &times, &opts)?;
            let fit = analysis::fit_exponential(&curve.storage_times, &curve.amplitudes, false)?;

            let mut s = String::new();
            s.push_str("# trace=memory_decay\n");
            let _ = writeln!(s, "# config_hash={}", cfg.hash());
            let _ = writeln!(s, "# memory={}", memory.tag());
            let _ = writeln!(s, "# b0_G={}", fmt_num(cfg.b0_g));
            let _ = writeln!(s, "# db_dz_G_cm={}", fmt_num(1.0e-3 * cfg.db_dz_mg_cm));
            let _ = writeln!(s, "# fitted_tau_us={}", fmt_num(units::to_us(fit.tau)));
            let _ = writeln!(s, "# fit_converged={}", fit.converged);
            s.push_str(&timestamp_line(cfg));
            s.push_str("t_s_us,amplitude\n");
            for (t, a) in curve.storage_times.iter().zip(&curve.amplitudes) {
                let _ = writeln!(s, "{},{}", fmt_num(units::to_us(*t)), fmt_num(*a));
            }
            let path = out.join(format!("memory_decay_{}.csv", memory.tag()));
            write_file(&path, &s)?;
            written.push(path);

            if cfg.write_pulses {
                for (ts, pulse) in curve.storage_times.iter().zip(&pulses) {
                    let mut p = String::new();
                    p.push_str("# trace=retrieved_pulse\n");
                    let _ = writeln!(p, "# config_hash={}", cfg.hash());
                    let _ = writeln!(p, "# memory={}", memory.tag());
                    let _ = writeln!(p, "# t_s_us={}", fmt_num(units::to_us(*ts)));
                    let _ = writeln!(p, "# peak_amplitude={}", fmt_num(pulse.peak_amplitude));
                    p.push_str(&timestamp_line(cfg));
                    p.push_str("time_us,signal\n");
                    for (t, a) in pulse.times.iter().zip(&pulse.signal) {
                        let _ = writeln!(p, "{},{}", fmt_num(units::to_us(*t)), fmt_num(*a));
                    }
                    let path = out.join(format!(
                        "memory_pulse_{}_ts{}us.csv",
                        memory.tag(),
                        gradient_label(units::to_us(*ts))
                    ));
                    write_file(&path, &p)?;
                    written.push(path);
                }
            }
        }
        Ok(())
    })?;
    Ok(written)
}

/// Parse a two-column numeric file (comma or whitespace separated,
/// `#` comment lines skipped).
pub fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        // A single header row of column names is tolerated.
        let parsed: Option<Vec<f64>> = fields.iter().map(|s| s.parse::<f64>().ok()).collect();
        match parsed {
            Some(vals) if vals.len() == 2 => {
                xs.push(vals[0]);
                ys.push(vals[1]);
            }
            _ if xs.is_empty() && fields.len() == 2 => continue,
            _ => {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("expected two numeric columns, got '{line}'"),
                })
            }
        }
    }
    if xs.len() < 3 {
        return Err(Error::validation(
            "fit_window_too_small",
            format!("input holds {} usable rows", xs.len()),
        ));
    }
    Ok((xs, ys))
}

/// Which model `fit` applies to a data file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Lorentzian,
    Exponential,
    Linear,
}

impl std::str::FromStr for FitModel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lorentzian" => Ok(FitModel::Lorentzian),
            "exponential" => Ok(FitModel::Exponential),
            "linear" => Ok(FitModel::Linear),
            other => Err(Error::validation(
                "unknown_fit_model",
                format!("'{other}' is not one of lorentzian, exponential, linear"),
            )),
        }
    }
}

/// `fit` driver: fit a two-column file, write a machine-readable report
/// next to it (or into `out_dir`), and return the report path and a
/// one-line human summary.
pub fn run_fit(input: &Path, model: FitModel, out_dir: Option<&Path>) -> Result<(PathBuf, String)> {
    let (xs, ys) = read_two_columns(input)?;
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".to_string());
    let dir = match out_dir {
        Some(d) => {
            ensure_dir(d)?;
            d.to_path_buf()
        }
        None => input.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    let path = dir.join(format!("{stem}_fit.txt"));

    let mut report = String::new();
    let summary = match model {
        FitModel::Lorentzian => {
            let fit = analysis::fit_lorentzian(&xs, &ys)?;
            let _ = writeln!(report, "model = lorentzian");
            let _ = writeln!(report, "center = {}", fmt_num(fit.center));
            let _ = writeln!(report, "fwhm = {}", fmt_num(fit.fwhm));
            let _ = writeln!(report, "amplitude = {}", fmt_num(fit.amplitude));
            let _ = writeln!(report, "offset = {}", fmt_num(fit.offset));
            let _ = writeln!(report, "residual_norm = {}", fmt_num(fit.residual_norm));
            let _ = writeln!(report, "converged = {}", fit.converged);
            format!(
                "lorentzian: center {:.6} fwhm {:.6} (converged: {})",
                fit.center, fit.fwhm, fit.converged
            )
        }
        FitModel::Exponential => {
            let fit = analysis::fit_exponential(&xs, &ys, false)?;
            let _ = writeln!(report, "model = exponential");
            let _ = writeln!(report, "amplitude = {}", fmt_num(fit.amplitude));
            let _ = writeln!(report, "tau = {}", fmt_num(fit.tau));
            let _ = writeln!(report, "residual_norm = {}", fmt_num(fit.residual_norm));
            let _ = writeln!(report, "converged = {}", fit.converged);
            format!(
                "exponential: amplitude {:.6} tau {:.6} (converged: {})",
                fit.amplitude, fit.tau, fit.converged
            )
        }
        FitModel::Linear => {
            let fit = analysis::linear_fit(&xs, &ys)?;
            let _ = writeln!(report, "model = linear");
            let _ = writeln!(report, "slope = {}", fmt_num(fit.slope));
            let _ = writeln!(report, "intercept = {}", fmt_num(fit.intercept));
            let _ = writeln!(report, "r_squared = {}", fmt_num(fit.r_squared));
            let _ = writeln!(report, "converged = true");
            format!(
                "linear: slope {:.6} intercept {:.6} r2 {:.6}",
                fit.slope, fit.intercept, fit.r_squared
            )
        }
    };
    write_file(&path, &report)?;
    Ok((path, summary))
}
