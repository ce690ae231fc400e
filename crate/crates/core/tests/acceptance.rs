//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//!
//! Runs as a plain binary (no libtest harness) so the report is always shown.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use flexbot_core::config::{params_from_config, ConfigFile};
use flexbot_core::dynamics::{assemble, Model, PHI, X, Y};
use flexbot_core::export::to_csv_string;
use flexbot_core::integrator::{simulate, unforced, IntegratorConfig, Trajectory};
use flexbot_core::modal::characteristic_roots;
use flexbot_core::scenario::{run_scenario_with, ScenarioKind, ScenarioOutput, ScenarioSpec};
use flexbot_core::validate::{conservative_params, free_vibration_state, mass_matrix_survey, random_inputs, random_state, rk4_errors};
use flexbot_core::{lagrangian_oracle, RobotParams};
use rand::SeedableRng;

struct Gate {
    failures: usize,
}

impl Gate {
    fn record(&mut self, id: &str, title: &str, passed: bool, detail: String) {
        if !passed {
            self.failures += 1;
        }
        println!("criterion {id:>2} [{}] {title}: {detail}", if passed { "PASS" } else { "FAIL" });
    }

    fn info(&self, id: &str, title: &str, detail: String) {
        println!("criterion {id:>2} [INFO] {title}: {detail}");
    }
}

/// Plain bisection on the unscaled characteristic function.
fn bisect_root(lo: f64, hi: f64) -> f64 {
    let f = |x: f64| 1.0 + x.cos() * x.cosh();
    let (mut a, mut b) = (lo, hi);
    let fa0 = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if f(m) * fa0 > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn run(spec: &ScenarioSpec, model: &Model) -> ScenarioOutput {
    run_scenario_with(spec, model).unwrap_or_else(|e| panic!("{} scenario failed: {e}", spec.kind))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut gate = Gate { failures: 0 };
    let params = RobotParams::default();
    let model = Model::new(params.clone()).expect("default model");

    // 1. cantilever roots
    {
        let lib = characteristic_roots(3, 1e-12).unwrap();
        let expected = [1.875104, 4.694091, 7.854757];
        let mut worst = 0.0f64;
        for k in 0..3 {
            let oracle = bisect_root(k as f64 * PI, (k + 1) as f64 * PI);
            worst = worst.max((lib[k] - oracle).abs()).max((lib[k] - expected[k]).abs());
        }
        gate.record("1", "cantilever roots", worst < 1e-6, format!("max deviation {worst:.2e} (tol 1e-6)"));
    }

    // 2. modal frequencies against a from-scratch closed form
    {
        // prototype beam: 271.46 mm × 25.65 mm × 0.5 mm, 70 GPa, 2700 kg/m³
        let table = params.beam_length == 271.46e-3
            && params.beam_width == 25.65e-3
            && params.beam_thickness == 0.5e-3
            && params.beam_modulus == 70e9
            && params.beam_density == 2700.0;
        let (l, t, e, rho) = (0.27146f64, 0.5e-3f64, 70e9f64, 2700.0f64);
        let mut worst = 0.0f64;
        for k in 0..2 {
            let bl = bisect_root(k as f64 * PI, (k + 1) as f64 * PI);
            let closed = (bl / l).powi(2) * (e * t * t / (12.0 * rho)).sqrt();
            worst = worst.max((model.basis.omega[k] - closed).abs() / closed);
        }
        let ratio = model.basis.omega[1] / model.basis.omega[0];
        gate.record(
            "2",
            "modal frequencies",
            table && worst < 1e-9 && (ratio - 6.2669).abs() <= 1e-3,
            format!(
                "rel err {worst:.2e} (tol 1e-9), omega2/omega1 = {ratio:.5} (6.2669 ± 1e-3), omega = [{:.4}, {:.4}] rad/s, default beam = prototype table: {table}",
                model.basis.omega[0], model.basis.omega[1]
            ),
        );
    }

    // 3. hand assembly against the energy-based oracle
    {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20240601);
        let (mut dm, mut df) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let st = random_state(&mut rng, 2, 0.3);
            let u = random_inputs(&mut rng);
            let a = assemble(&st, &u, &model).unwrap();
            let o = lagrangian_oracle(&st, &u, &model).unwrap();
            dm = dm.max((&a.mass - &o.mass).norm() / a.mass.norm());
            df = df.max((&a.force - &o.force).norm() / a.force.norm());
        }
        gate.record(
            "3",
            "oracle equivalence (100 states)",
            dm < 1e-5 && df < 1e-4,
            format!("max rel dM {dm:.2e} (tol 1e-5), max rel df {df:.2e} (tol 1e-4)"),
        );
    }

    // 4. mass-matrix symmetry and definiteness
    {
        let (asym, indefinite) = mass_matrix_survey(&model, 1000, 7).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let mut oracle_range_indefinite = 0;
        for _ in 0..100 {
            let m = assemble(&random_state(&mut rng, 2, 0.3), &Default::default(), &model).unwrap().mass;
            if m.cholesky().is_none() {
                oracle_range_indefinite += 1;
            }
        }
        gate.record(
            "4",
            "mass matrix symmetric, positive definite",
            asym < 1e-10 && indefinite == 0 && oracle_range_indefinite == 0,
            format!("max asymmetry {asym:.2e} (tol 1e-10), indefinite at {indefinite}/1000 + {oracle_range_indefinite}/100 states"),
        );
    }

    // Scenario runs shared by 5–9.
    let step = run(&ScenarioSpec::defaults(ScenarioKind::StepForward), &model);
    let turn = run(&ScenarioSpec::defaults(ScenarioKind::Turn), &model);
    let free = run(&ScenarioSpec::defaults(ScenarioKind::FreeVibration), &model);
    let sweep_spec = ScenarioSpec::defaults(ScenarioKind::Sweep);
    let sweep = run(&sweep_spec, &model);
    let runs: [(&str, &Trajectory); 4] = [
        ("step_forward", &step.trajectory),
        ("turn", &turn.trajectory),
        ("free_vibration", &free.trajectory),
        ("sweep", &sweep.trajectory),
    ];

    // 5. energy
    {
        let cons = Model::new(conservative_params(&params)).unwrap();
        let cfg = IntegratorConfig {
            dt: 1e-5,
            t_end: 0.5,
            record_stride: 50,
            ..IntegratorConfig::default()
        };
        let traj = simulate(&free_vibration_state(2, 2e-3), &unforced, &cfg, &cons).unwrap();
        let e0 = traj.energy[0].total;
        let drift = traj.energy.iter().map(|e| (e.total - e0).abs()).fold(0.0, f64::max) / e0;
        let balances: Vec<(String, f64)> = runs
            .iter()
            .map(|(name, t)| (name.to_string(), t.energy_balance_residual() / t.max_energy()))
            .collect();
        let worst = balances.iter().map(|b| b.1).fold(0.0, f64::max);
        gate.record(
            "5",
            "energy conservation and balance",
            drift < 1e-8 && worst < 1e-6,
            format!(
                "conservative drift {drift:.2e} (tol 1e-8); balance residual/max E: {} (tol 1e-6)",
                balances.iter().map(|(n, v)| format!("{n} {v:.1e}")).collect::<Vec<_>>().join(", ")
            ),
        );
    }

    // 6. constraint
    {
        let drifts: Vec<f64> = runs.iter().map(|(_, t)| max_abs(&t.constraint_drift())).collect();
        let worst = drifts.iter().cloned().fold(0.0, f64::max);
        let fs = max_abs(&step.trajectory.constraint_force);
        gate.record(
            "6",
            "no-slip constraint",
            worst < 1e-8 && fs < 1e-9,
            format!("max lateral slip {worst:.2e} m/s (tol 1e-8), max |Fs| symmetric run {fs:.2e} N (tol 1e-9)"),
        );
    }

    // 7. symmetric straight run
    {
        let t = &step.trajectory;
        let phi = max_abs(&t.coordinate(PHI));
        let y = max_abs(&t.coordinate(Y));
        let x = t.coordinate(X);
        // the first half of the run is taken as the transient
        let half = x.len() / 2;
        let monotone = x[half..].windows(2).all(|w| w[1] >= w[0]);
        let advance = x[x.len() - 1] - x[half];
        gate.record(
            "7",
            "symmetric step run",
            phi < 1e-9 && y < 1e-9 && monotone && advance > 0.0,
            format!(
                "max|phi| {phi:.1e}, max|Y| {y:.1e} (tol 1e-9); X non-decreasing over [{:.2}, {:.2}] s: {monotone}, advance {advance:.3e} m",
                t.times[half],
                t.times[t.len() - 1]
            ),
        );
    }

    // 8. turn
    {
        let t = &turn.trajectory;
        let phi = t.coordinate(PHI);
        let sign = phi.iter().find(|v| **v != 0.0).map(|v| v.signum()).unwrap_or(0.0);
        let fixed_sign = sign != 0.0 && phi.iter().all(|v| v * sign >= 0.0);
        // envelope of |phi| over tenths of the run
        let tenth = phi.len() / 10;
        let env: Vec<f64> = (0..10).map(|k| max_abs(&phi[k * tenth..(k + 1) * tenth])).collect();
        let growing = phi[0] == 0.0 && env.windows(2).all(|w| w[1] > w[0]);
        let (x, y) = (t.coordinate(X), t.coordinate(Y));
        let n = x.len() - 1;
        let (cx, cy) = (x[n] - x[0], y[n] - y[0]);
        let chord = cx.hypot(cy);
        let bow = (0..=n).map(|k| ((x[k] - x[0]) * cy - (y[k] - y[0]) * cx).abs() / chord).fold(0.0, f64::max);
        let curved = chord > 0.0 && bow / chord > 1e-6;
        gate.record(
            "8",
            "turn",
            fixed_sign && growing && curved,
            format!(
                "phi sign {sign:+}, fixed: {fixed_sign}, |phi| envelope growing: {growing} (end {:.2e} rad); path bow/chord {:.2e} (> 1e-6)",
                phi[n],
                bow / chord
            ),
        );
    }

    // 9. spectral identification
    {
        let spectrum = sweep.spectrum.as_ref().expect("sweep spectrum");
        let bin = spectrum.resolution();
        let nearest = |f: f64| {
            sweep
                .peaks
                .iter()
                .map(|p| p.freq)
                .min_by(|a, b| (a - f).abs().total_cmp(&(b - f).abs()))
                .unwrap_or(f64::NAN)
        };
        let target: Vec<f64> = model.basis.omega.iter().map(|w| w / (2.0 * PI)).collect();
        let found: Vec<f64> = target.iter().map(|&f| nearest(f)).collect();
        let errs: Vec<f64> = target.iter().zip(&found).map(|(a, b)| (a - b).abs()).collect();
        let ok = errs.iter().all(|e| *e <= bin);
        gate.record(
            "9",
            "spectral identification",
            ok,
            format!(
                "{:.1} kHz sampling, {} s, bin {bin:.4} Hz; beam modes [{:.4}, {:.4}] Hz, nearest peaks [{:.4}, {:.4}] Hz, errors [{:.3}, {:.3}] Hz",
                spectrum.sample_rate / 1e3,
                sweep_spec.duration,
                target[0],
                target[1],
                found[0],
                found[1],
                errs[0],
                errs[1]
            ),
        );
        let ritz = model.basis.clamped_frequencies_hz().unwrap();
        let ritz_err: Vec<f64> = ritz.iter().map(|&f| (nearest(f) - f).abs()).collect();
        gate.info(
            "9",
            "peaks vs clamped eigenvalues of the discretised composite beam",
            format!(
                "[{:.4}, {:.4}] Hz, errors [{:.4}, {:.4}] Hz",
                ritz[0], ritz[1], ritz_err[0], ritz_err[1]
            ),
        );
    }

    // 10. RK4 order
    {
        let errs = rk4_errors(&model, &[2e-5, 1e-5]).unwrap();
        let ratio = errs[0] / errs[1];
        gate.record(
            "10",
            "RK4 order",
            (8.0..=32.0).contains(&ratio),
            format!("errors {:.2e} / {:.2e}, ratio {ratio:.2} (in [8, 32])", errs[0], errs[1]),
        );
    }

    // 11. determinism from a snapshot
    {
        let mut spec = ScenarioSpec::defaults(ScenarioKind::Turn);
        spec.set_duration(0.2);
        let text = spec.snapshot(&params);
        let reload = || {
            let cfg = ConfigFile::parse(&text).unwrap();
            let p = params_from_config(&cfg).unwrap();
            let s = ScenarioSpec::from_config(&cfg, None).unwrap();
            let m = Model::new(p).unwrap();
            to_csv_string(&run(&s, &m).trajectory)
        };
        let (a, b) = (reload(), reload());
        let direct = to_csv_string(&run(&spec, &model).trajectory);
        gate.record(
            "11",
            "determinism",
            a == b && a == direct,
            format!("two snapshot reruns identical: {}, identical to in-memory run: {} ({} bytes)", a == b, a == direct, a.len()),
        );
    }

    println!(
        "acceptance: {} failed of 11 ({:.1} s)",
        gate.failures,
        started.elapsed().as_secs_f64()
    );
    if gate.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
