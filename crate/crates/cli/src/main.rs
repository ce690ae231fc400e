//! `flexbot`: modal tables, scenario runs, spectra and the validation suite.

mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use flexbot_core::config::{is_param_key, params_from_config, params_from_config_unchecked, ConfigFile};
use flexbot_core::dynamics::{theta_index, PHI, X, Y};
use flexbot_core::export::export_csv;
use flexbot_core::scenario::{is_scenario_key, run_scenario_with};
use flexbot_core::spectral::fft_spectrum_of_series;
use flexbot_core::validate::{validate, ValidationOptions};
use flexbot_core::{detect_peaks, Error, Model, Peak, RobotParams, ScenarioKind, ScenarioSpec, Spectrum, Trajectory};

#[derive(Parser)]
#[command(name = "flexbot", version, about = "Two-wheeled robot with piezo-actuated flexible beams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print cantilever roots, frequencies and modal integrals.
    Modal {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write modes.csv and integrals.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one or more scenarios; each writes into <out>/<scenario>/.
    Simulate {
        /// Scenario kinds, comma separated; defaults to the config's `scenario`.
        #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
        scenario: Vec<ScenarioKind>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Time step, s.
        #[arg(long)]
        dt: Option<f64>,
        /// Run length, s.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        record_stride: Option<usize>,
        /// Let the bases rotate (sweep only clamps by default).
        #[arg(long)]
        no_clamp: bool,
        #[arg(long)]
        no_gravity: bool,
        /// Scenarios run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        no_plots: bool,
    },
    /// Amplitude spectrum of one column of a trajectory CSV.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, default_value_t = 0.05)]
        min_prominence: f64,
        #[arg(long, default_value = "hann")]
        window: String,
        /// Defaults to <input stem>_<column>_spectrum.csv beside the input.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite; exit status 1 if any check fails.
    Validate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Tolerance override, `name=value`; repeatable.
        #[arg(long = "tolerance", value_name = "NAME=VALUE")]
        tolerances: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn parse_kind(s: &str) -> std::result::Result<ScenarioKind, String> {
    ScenarioKind::parse(s.trim()).map_err(|e| e.to_string())
}

fn read_config(path: Option<&Path>) -> Result<Option<ConfigFile>> {
    let Some(path) = path else { return Ok(None) };
    let cfg = ConfigFile::read(path).with_context(|| format!("reading {}", path.display()))?;
    cfg.ensure_known(|k| is_param_key(k) || is_scenario_key(k))
        .with_context(|| path.display().to_string())?;
    Ok(Some(cfg))
}

fn load_params(cfg: Option<&ConfigFile>) -> Result<RobotParams> {
    Ok(match cfg {
        Some(c) => params_from_config(c)?,
        None => RobotParams::default(),
    })
}

fn run_modal(config: Option<PathBuf>, out: Option<PathBuf>) -> Result<()> {
    let cfg = read_config(config.as_deref())?;
    let model = Model::new(load_params(cfg.as_ref())?)?;
    let b = &model.basis;
    let clamped = b.clamped_frequencies_hz()?;
    let ig = &b.integrals;

    let mut modes = String::from("mode,beta_l,beta_per_m,omega_rad_s,freq_hz,composite_clamped_hz,mass_ii,stiffness_ii,first,moment,patch_slope\n");
    for k in 0..b.n_modes() {
        let _ = writeln!(
            modes,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            k + 1,
            b.beta_l[k],
            b.beta[k],
            b.omega[k],
            b.omega[k] / (2.0 * std::f64::consts::PI),
            clamped[k],
            ig.mass[(k, k)],
            ig.stiffness[(k, k)],
            ig.first[k],
            ig.moment[k],
            ig.patch_slope[k]
        );
    }
    let mut integrals = String::from("i,j,mass,stiffness,overlap\n");
    for i in 0..b.n_modes() {
        for j in 0..b.n_modes() {
            let _ = writeln!(
                integrals,
                "{},{},{:?},{:?},{:?}",
                i + 1,
                j + 1,
                ig.mass[(i, j)],
                ig.stiffness[(i, j)],
                ig.overlap[(i, j)]
            );
        }
    }

    println!("{:>4} {:>12} {:>14} {:>12} {:>16}", "mode", "beta*L", "omega [rad/s]", "f [Hz]", "composite f [Hz]");
    for k in 0..b.n_modes() {
        println!(
            "{:>4} {:>12.6} {:>14.4} {:>12.4} {:>16.4}",
            k + 1,
            b.beta_l[k],
            b.omega[k],
            b.omega[k] / (2.0 * std::f64::consts::PI),
            clamped[k]
        );
    }
    println!("rigid moments: p0 {:.6e} kg, p1 {:.6e} kg m, p2 {:.6e} kg m^2", ig.p0, ig.p1, ig.p2);
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("modes.csv"), modes)?;
        std::fs::write(dir.join("integrals.csv"), integrals)?;
        println!("wrote {}", dir.display());
    } else {
        print!("\n{modes}\n{integrals}");
    }
    Ok(())
}

struct Job {
    spec: ScenarioSpec,
    dir: PathBuf,
}

fn write_peaks(path: &Path, peaks: &[Peak]) -> Result<()> {
    let mut text = String::from("freq_hz,magnitude\n");
    for p in peaks {
        let _ = writeln!(text, "{:?},{:?}", p.freq, p.magnitude);
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_spectrum(path: &Path, s: &Spectrum) -> Result<()> {
    let mut text = String::from("freq_hz,magnitude\n");
    for (f, m) in s.freqs.iter().zip(&s.magnitude) {
        let _ = writeln!(text, "{f:?},{m:?}");
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_plots(dir: &Path, traj: &Trajectory) -> Result<()> {
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots)?;
    let t = &traj.times;
    let series: [(&str, Vec<f64>); 9] = [
        ("X", traj.coordinate(X)),
        ("Y", traj.coordinate(Y)),
        ("phi", traj.coordinate(PHI)),
        ("theta1", traj.coordinate(theta_index(0))),
        ("theta2", traj.coordinate(theta_index(1))),
        ("w1_tip", traj.tip_deflection(0)),
        ("w2_tip", traj.tip_deflection(1)),
        ("Fs", traj.constraint_force.clone()),
        ("energy", traj.energy.iter().map(|e| e.total).collect()),
    ];
    for (name, ys) in &series {
        plot::save(&plots.join(format!("{name}.png")), t, ys)?;
    }
    plot::save(&plots.join("path_xy.png"), &series[0].1, &series[1].1)
}

/// Runs one scenario and writes its artifacts. The snapshot is written
/// first so a failed run can still be reproduced.
fn run_job(job: &Job, p: &RobotParams, plots: bool) -> Result<String> {
    std::fs::create_dir_all(&job.dir).with_context(|| format!("creating {}", job.dir.display()))?;
    std::fs::write(job.dir.join("snapshot.cfg"), job.spec.snapshot(p))?;
    let model = Model::new(p.clone())?;
    let csv = job.dir.join("trajectory.csv");
    let out = match run_scenario_with(&job.spec, &model) {
        Ok(o) => o,
        Err(Error::Diverged {
            time,
            reason,
            trajectory,
        }) => {
            export_csv(&trajectory, &csv)?;
            if plots && !trajectory.is_empty() {
                write_plots(&job.dir, &trajectory)?;
            }
            bail!(
                "{}: diverged at t = {time} s ({reason}); {} records saved to {}",
                job.spec.kind,
                trajectory.len(),
                csv.display()
            );
        }
        Err(e) => return Err(anyhow::Error::new(e).context(format!("{} scenario", job.spec.kind))),
    };
    export_csv(&out.trajectory, &csv)?;
    if plots {
        write_plots(&job.dir, &out.trajectory)?;
    }
    let traj = &out.trajectory;
    let last = traj.states.last().expect("at least the initial record");
    let mut summary = format!(
        "{}: {} records to t = {:.4} s; X {:.4e} m, Y {:.4e} m, phi {:.4e} rad, theta {:.4e}/{:.4e} rad",
        job.spec.kind,
        traj.len(),
        last.t,
        last.pos[X],
        last.pos[Y],
        last.pos[PHI],
        last.pos[theta_index(0)],
        last.pos[theta_index(1)]
    );
    if let Some(s) = &out.spectrum {
        write_spectrum(&job.dir.join("spectrum.csv"), s)?;
        write_peaks(&job.dir.join("peaks.csv"), &out.peaks)?;
        if plots {
            let db: Vec<f64> = s.magnitude.iter().map(|m| 20.0 * m.max(1e-300).log10()).collect();
            plot::save(&job.dir.join("plots").join("spectrum_db.png"), &s.freqs, &db)?;
        }
        let list: Vec<String> = out.peaks.iter().map(|p| format!("{:.4}", p.freq)).collect();
        let _ = write!(summary, "; peaks [{}] Hz (bin {:.4} Hz)", list.join(", "), s.resolution());
    }
    let _ = write!(summary, "; output in {}", job.dir.display());
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    scenario: Vec<ScenarioKind>,
    config: Option<PathBuf>,
    out: PathBuf,
    dt: Option<f64>,
    duration: Option<f64>,
    record_stride: Option<usize>,
    no_clamp: bool,
    no_gravity: bool,
    jobs: usize,
    no_plots: bool,
) -> Result<bool> {
    let cfg = read_config(config.as_deref())?;
    let mut params = load_params(cfg.as_ref())?;
    if no_gravity {
        params.gravity_enabled = false;
    }
    let kinds: Vec<Option<ScenarioKind>> = if scenario.is_empty() {
        vec![None]
    } else {
        scenario.into_iter().map(Some).collect()
    };
    let empty = ConfigFile::default();
    let mut work = Vec::new();
    for kind in kinds {
        let mut spec = ScenarioSpec::from_config(cfg.as_ref().unwrap_or(&empty), kind)
            .context("no --scenario given and the config names none")?;
        if let Some(d) = duration {
            spec.set_duration(d);
        }
        if let Some(d) = dt {
            spec.dt = d;
        }
        if let Some(s) = record_stride {
            spec.record_stride = s;
        }
        if no_clamp {
            spec.clamp_base = false;
        }
        spec.validate()?;
        let dir = out.join(spec.kind.as_str());
        if work.iter().any(|j: &Job| j.dir == dir) {
            bail!("scenario `{}` requested twice", spec.kind);
        }
        work.push(Job { spec, dir });
    }

    let results: Mutex<Vec<(usize, Result<String>)>> = Mutex::new(Vec::new());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, work.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = work.get(k) else { break };
                let r = run_job(job, &params, !no_plots);
                results.lock().expect("result lock").push((k, r));
            });
        }
    });
    let mut results = results.into_inner().expect("result lock");
    results.sort_by_key(|r| r.0);
    let mut ok = true;
    for (_, r) in results {
        match r {
            Ok(line) => println!("{line}"),
            Err(e) => {
                ok = false;
                eprintln!("error: {e:#}");
            }
        }
    }
    Ok(ok)
}

fn run_spectrum(input: PathBuf, column: String, min_prominence: f64, window: String, out: Option<PathBuf>) -> Result<()> {
    let mut reader = csv::Reader::from_path(&input).with_context(|| format!("reading {}", input.display()))?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{} has no column `{name}`", input.display()))
    };
    let (ti, ci) = (find("t")?, find(&column)?);
    let (mut times, mut values) = (Vec::new(), Vec::new());
    for (row, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("row {}: `{}` is not a number", row + 2, &rec[i]))
        };
        times.push(parse(ti)?);
        values.push(parse(ci)?);
    }
    let spectrum = fft_spectrum_of_series(&times, &values, &window)?;
    let peaks = detect_peaks(&spectrum, min_prominence)?;
    let out = out.unwrap_or_else(|| {
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
        input.with_file_name(format!("{stem}_{column}_spectrum.csv"))
    });
    write_spectrum(&out, &spectrum)?;
    println!(
        "{} samples at {:.1} Hz, {} window, bin {:.4} Hz; spectrum written to {}",
        spectrum.n_samples,
        spectrum.sample_rate,
        spectrum.window_name,
        spectrum.resolution(),
        out.display()
    );
    println!("{:>12} {:>14}", "freq [Hz]", "magnitude");
    for p in &peaks {
        println!("{:>12.4} {:>14.6e}", p.freq, p.magnitude);
    }
    Ok(())
}

fn run_validate(config: Option<PathBuf>, tolerances: Vec<String>, seed: Option<u64>) -> Result<bool> {
    let cfg = read_config(config.as_deref())?;
    // range checks are left to the suite so faulty parameters show up as failed checks
    let params = match &cfg {
        Some(c) => params_from_config_unchecked(c)?,
        None => RobotParams::default(),
    };
    let mut opts = ValidationOptions::default();
    opts.tolerances.apply_overrides(&tolerances)?;
    if let Some(s) = seed {
        opts.seed = s;
    }
    let report = validate(&params, &opts);
    println!("{report}");
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Modal { config, out } => run_modal(config, out).map(|_| true),
        Command::Simulate {
            scenario,
            config,
            out,
            dt,
            duration,
            record_stride,
            no_clamp,
            no_gravity,
            jobs,
            no_plots,
        } => run_simulate(scenario, config, out, dt, duration, record_stride, no_clamp, no_gravity, jobs, no_plots),
        Command::Spectrum {
            input,
            column,
            min_prominence,
            window,
            out,
        } => run_spectrum(input, column, min_prominence, window, out).map(|_| true),
        Command::Validate { config, tolerances, seed } => run_validate(config, tolerances, seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
