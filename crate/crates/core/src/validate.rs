//! The invariant suite behind `flexbot validate`.
//!
//! Each check measures one quantity and compares it with a tolerance that
//! can be overridden by name.

use std::fmt;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::actuation::ActuationInput;
use crate::dynamics::{assemble, dof, modal_index, theta_index, MirrorMap, Model, SystemState, PHI, X, Y};
use crate::error::{Error, Result};
use crate::integrator::{simulate, unforced, IntegratorConfig};
use crate::oracle::lagrangian_oracle;
use crate::params::RobotParams;
use crate::scenario::{run_scenario_with, ScenarioKind, ScenarioSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub oracle_mass: f64,
    pub oracle_force: f64,
    pub mass_symmetry: f64,
    pub mirror: f64,
    pub energy_drift: f64,
    pub energy_balance: f64,
    pub constraint_drift: f64,
    pub symmetric_run: f64,
    pub orthogonality: f64,
    pub rk4_ratio_min: f64,
    pub rk4_ratio_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            oracle_mass: 1e-5,
            oracle_force: 1e-4,
            mass_symmetry: 1e-10,
            mirror: 1e-9,
            energy_drift: 1e-8,
            energy_balance: 1e-6,
            constraint_drift: 1e-8,
            symmetric_run: 1e-9,
            orthogonality: 1e-8,
            rk4_ratio_min: 8.0,
            rk4_ratio_max: 32.0,
        }
    }
}

impl Tolerances {
    pub const NAMES: [&'static str; 11] = [
        "oracle_mass",
        "oracle_force",
        "mass_symmetry",
        "mirror",
        "energy_drift",
        "energy_balance",
        "constraint_drift",
        "symmetric_run",
        "orthogonality",
        "rk4_ratio_min",
        "rk4_ratio_max",
    ];

    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "oracle_mass" => &mut self.oracle_mass,
            "oracle_force" => &mut self.oracle_force,
            "mass_symmetry" => &mut self.mass_symmetry,
            "mirror" => &mut self.mirror,
            "energy_drift" => &mut self.energy_drift,
            "energy_balance" => &mut self.energy_balance,
            "constraint_drift" => &mut self.constraint_drift,
            "symmetric_run" => &mut self.symmetric_run,
            "orthogonality" => &mut self.orthogonality,
            "rk4_ratio_min" => &mut self.rk4_ratio_min,
            "rk4_ratio_max" => &mut self.rk4_ratio_max,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::Input(format!("tolerance `{name}` must be positive, got {value}")));
        }
        match self.slot(name) {
            Some(v) => {
                *v = value;
                Ok(())
            }
            None => Err(Error::Input(format!(
                "unknown tolerance `{name}` (known: {})",
                Self::NAMES.join(", ")
            ))),
        }
    }

    /// Applies `name=value` overrides.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        for o in overrides {
            let o = o.as_ref();
            let (name, value) = o
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("expected name=value, got `{o}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("`{value}` is not a number")))?;
            self.set(name.trim(), value)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ValidationOptions {
    pub tolerances: Tolerances,
    pub oracle_states: usize,
    pub matrix_states: usize,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            tolerances: Tolerances::default(),
            oracle_states: 100,
            matrix_states: 1000,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub measured: f64,
    /// Human-readable acceptance condition, e.g. `< 1e-5`.
    pub condition: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn below(name: &'static str, measured: f64, tol: f64) -> Self {
        CheckResult {
            name,
            measured,
            condition: format!("< {tol:e}"),
            passed: measured < tol,
            detail: String::new(),
        }
    }

    fn failed(name: &'static str, err: &Error) -> Self {
        CheckResult {
            name,
            measured: f64::NAN,
            condition: "runs".into(),
            passed: false,
            detail: err.to_string(),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<22} measured {:<12.4e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.condition
        )?;
        if !self.detail.is_empty() {
            write!(f, "  ({})", self.detail)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// A random state with `|pos|, |vel| ≤ bound`.
pub fn random_state(rng: &mut impl Rng, n_modes: usize, bound: f64) -> SystemState {
    let d = dof(n_modes);
    SystemState {
        pos: DVector::from_fn(d, |_, _| rng.gen_range(-bound..=bound)),
        vel: DVector::from_fn(d, |_, _| rng.gen_range(-bound..=bound)),
        t: 0.0,
    }
}

pub fn random_inputs(rng: &mut impl Rng) -> ActuationInput {
    ActuationInput {
        v1: rng.gen_range(-10.0..10.0),
        v2: rng.gen_range(-10.0..10.0),
        va1: rng.gen_range(-2.0..2.0),
        va2: rng.gen_range(-2.0..2.0),
    }
}

/// Largest relative differences `(‖ΔM‖/‖M‖, ‖Δf‖/‖f‖)` between the hand
/// assembly and the energy-based oracle over random states.
pub fn oracle_discrepancy(model: &Model, states: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut dm, mut df) = (0.0f64, 0.0f64);
    for _ in 0..states {
        let st = random_state(&mut rng, model.n_modes(), 0.3);
        let u = random_inputs(&mut rng);
        let a = assemble(&st, &u, model)?;
        let o = lagrangian_oracle(&st, &u, model)?;
        dm = dm.max((&a.mass - &o.mass).norm() / a.mass.norm());
        df = df.max((&a.force - &o.force).norm() / a.force.norm());
    }
    Ok((dm, df))
}

/// Worst relative asymmetry of `M` and the number of states at which it is
/// not positive definite. Modal coordinates are kept below `0.1 L`.
pub fn mass_matrix_survey(model: &Model, states: usize, seed: u64) -> Result<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = model.n_modes();
    let cap = 0.1 * model.params.beam_length;
    let (mut asym, mut indefinite) = (0.0f64, 0);
    for _ in 0..states {
        let mut st = random_state(&mut rng, n, 1.0);
        for k in modal_index(n, 0, 0)..dof(n) {
            st.pos[k] *= cap;
        }
        let m = assemble(&st, &ActuationInput::default(), model)?.mass;
        asym = asym.max((&m - m.transpose()).amax() / m.norm());
        if m.cholesky().is_none() {
            indefinite += 1;
        }
    }
    Ok((asym, indefinite))
}

/// Largest mismatch between the assembled system at a state and the mirror
/// image of the assembled system at the mirrored state.
pub fn mirror_discrepancy(model: &Model, states: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map = MirrorMap::new(model.n_modes());
    let mut worst = 0.0f64;
    for _ in 0..states {
        let st = random_state(&mut rng, model.n_modes(), 0.3);
        let u = random_inputs(&mut rng);
        let a = assemble(&st, &u, model)?;
        let b = assemble(&st.mirrored(), &u.mirrored(), model)?;
        worst = worst
            .max((map.apply_matrix(&a.mass) - &b.mass).amax() / a.mass.amax())
            .max((map.apply(&a.force) - &b.force).amax() / a.force.amax().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Parameters with every energy sink and source switched off: no damping,
/// motors disconnected (so no back-emf braking), no gravity.
pub fn conservative_params(p: &RobotParams) -> RobotParams {
    RobotParams {
        damping_ratio_1: 0.0,
        damping_ratio_2: 0.0,
        viscous_damping_1: 0.0,
        viscous_damping_2: 0.0,
        motor_torque_const: 0.0,
        gravity_enabled: false,
        ..p.clone()
    }
}

/// Initial condition for free-vibration checks: both beams deflected in
/// their first two modes, the base rolling and turning.
pub fn free_vibration_state(n_modes: usize, tip: f64) -> SystemState {
    let mut s = SystemState::zeros(n_modes);
    s.pos[modal_index(n_modes, 0, 0)] = tip;
    s.pos[modal_index(n_modes, 1, 0)] = -0.5 * tip;
    if n_modes > 1 {
        s.pos[modal_index(n_modes, 0, 1)] = 0.2 * tip;
    }
    s.vel[X] = 0.05;
    s.vel[PHI] = 0.1;
    s
}

/// Relative drift `max |E − E0| / |E0|` of a conservative free vibration.
pub fn energy_drift(p: &RobotParams, duration: f64, dt: f64) -> Result<f64> {
    let model = Model::new(conservative_params(p))?;
    let cfg = IntegratorConfig {
        dt,
        t_end: duration,
        record_stride: 100,
        ..IntegratorConfig::default()
    };
    let traj = simulate(&free_vibration_state(model.n_modes(), 2e-3), &unforced, &cfg, &model)?;
    let e0 = traj.energy[0].total;
    Ok(traj.energy.iter().map(|e| (e.total - e0).abs()).fold(0.0, f64::max) / e0.abs())
}

/// Symmetric straight run: `(max |φ|, max |Y|, max |F_s|, energy-balance
/// residual / max E, max constraint drift)`.
pub fn symmetric_run(model: &Model, duration: f64) -> Result<[f64; 5]> {
    let mut spec = ScenarioSpec::defaults(ScenarioKind::StepForward);
    spec.set_duration(duration);
    let traj = run_scenario_with(&spec, model)?.trajectory;
    let max = |v: Vec<f64>| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok([
        max(traj.coordinate(PHI)),
        max(traj.coordinate(Y)),
        max(traj.constraint_force.clone()),
        traj.energy_balance_residual() / traj.max_energy(),
        max(traj.constraint_drift()),
    ])
}

/// `max_{i≠j} |∫W_i W_j| / sqrt(∫W_i² ∫W_j²)`.
pub fn modal_orthogonality(model: &Model) -> f64 {
    let o = &model.basis.integrals.overlap;
    let n = o.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max(o[(i, j)].abs() / (o[(i, i)] * o[(j, j)]).sqrt());
            }
        }
    }
    worst
}

/// Global errors at `t = 0.1 s` for the given steps against a run at an
/// eighth of the smallest step, on a turning, tilting, vibrating robot.
pub fn rk4_errors(model: &Model, steps: &[f64]) -> Result<Vec<f64>> {
    const T_END: f64 = 0.1;
    let spec = ScenarioSpec::defaults(ScenarioKind::Turn);
    let schedule = |t: f64, s: &SystemState| spec.inputs(t, s);
    let mut init = free_vibration_state(model.n_modes(), 1e-3);
    init.pos[theta_index(0)] = 0.01;
    let run = |dt: f64| -> Result<SystemState> {
        let n = (T_END / dt).round() as usize;
        let cfg = IntegratorConfig {
            dt,
            t_end: T_END,
            record_stride: n,
            ..IntegratorConfig::default()
        };
        let traj = simulate(&init, &schedule, &cfg, model)?;
        Ok(traj.states.last().cloned().expect("final state recorded"))
    };
    let finest = steps.iter().cloned().fold(f64::INFINITY, f64::min);
    let reference = run(finest / 8.0)?;
    steps
        .iter()
        .map(|&dt| {
            let s = run(dt)?;
            Ok((&s.pos - &reference.pos).amax())
        })
        .collect()
}

/// Runs the whole suite. Failures to even run a check are reported as
/// failed checks, never as an error.
pub fn validate(p: &RobotParams, opts: &ValidationOptions) -> ValidationReport {
    let tol = &opts.tolerances;
    let mut report = ValidationReport::default();
    let model = match Model::new_unchecked(p.clone()) {
        Ok(m) => m,
        Err(e) => {
            report.checks.push(CheckResult::failed("modal_basis", &e));
            return report;
        }
    };
    if let Err(e) = p.validate() {
        report.checks.push(CheckResult::failed("parameters", &e));
    }

    match mass_matrix_survey(&model, opts.matrix_states, opts.seed) {
        Ok((asym, indefinite)) => {
            report.checks.push(CheckResult::below("mass_symmetry", asym, tol.mass_symmetry));
            report.checks.push(CheckResult {
                name: "mass_positive_definite",
                measured: indefinite as f64,
                condition: format!("= 0 of {} states", opts.matrix_states),
                passed: indefinite == 0,
                detail: String::new(),
            });
        }
        Err(e) => report.checks.push(CheckResult::failed("mass_matrix", &e)),
    }

    match oracle_discrepancy(&model, opts.oracle_states, opts.seed) {
        Ok((dm, df)) => {
            report.checks.push(CheckResult::below("oracle_mass", dm, tol.oracle_mass));
            report.checks.push(CheckResult::below("oracle_force", df, tol.oracle_force));
        }
        Err(e) => report.checks.push(CheckResult::failed("oracle", &e)),
    }

    match mirror_discrepancy(&model, 100, opts.seed) {
        Ok(v) => report.checks.push(CheckResult::below("mirror", v, tol.mirror)),
        Err(e) => report.checks.push(CheckResult::failed("mirror", &e)),
    }

    report
        .checks
        .push(CheckResult::below("modal_orthogonality", modal_orthogonality(&model), tol.orthogonality));

    match energy_drift(p, 0.5, 1e-5) {
        Ok(v) => report.checks.push(CheckResult::below("energy_drift", v, tol.energy_drift)),
        Err(e) => report.checks.push(CheckResult::failed("energy_drift", &e)),
    }

    match symmetric_run(&model, 0.5) {
        Ok([phi, y, fs, balance, drift]) => {
            let worst = phi.max(y).max(fs);
            let mut c = CheckResult::below("symmetric_run", worst, tol.symmetric_run);
            c.detail = format!("|phi| {phi:.1e}, |Y| {y:.1e}, |Fs| {fs:.1e}");
            report.checks.push(c);
            report.checks.push(CheckResult::below("energy_balance", balance, tol.energy_balance));
            report.checks.push(CheckResult::below("constraint_drift", drift, tol.constraint_drift));
        }
        Err(e) => report.checks.push(CheckResult::failed("symmetric_run", &e)),
    }

    match rk4_errors(&model, &[4e-5, 2e-5, 1e-5]) {
        Ok(e) => {
            let ratios = [e[0] / e[1], e[1] / e[2]];
            let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
            report.checks.push(CheckResult {
                name: "rk4_order",
                measured: lo,
                condition: format!("ratios in [{}, {}]", tol.rk4_ratio_min, tol.rk4_ratio_max),
                passed: lo >= tol.rk4_ratio_min && hi <= tol.rk4_ratio_max,
                detail: format!("ratios {:.2}, {:.2}", ratios[0], ratios[1]),
            });
        }
        Err(e) => report.checks.push(CheckResult::failed("rk4_order", &e)),
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides() {
        let mut t = Tolerances::default();
        t.apply_overrides(&["oracle_mass=1e-3", " energy_drift = 2e-8"]).unwrap();
        assert_eq!(t.oracle_mass, 1e-3);
        assert_eq!(t.energy_drift, 2e-8);
        assert!(t.apply_overrides(&["nope=1"]).is_err());
        assert!(t.apply_overrides(&["oracle_mass"]).is_err());
        assert!(t.apply_overrides(&["oracle_mass=-1"]).is_err());
        for name in Tolerances::NAMES {
            assert!(t.clone().set(name, 1.0).is_ok());
        }
    }

    #[test]
    fn orthogonality_of_default_basis() {
        let m = Model::new(RobotParams {
            n_modes: 6,
            ..RobotParams::default()
        })
        .unwrap();
        assert!(modal_orthogonality(&m) < 1e-8);
    }

    #[test]
    fn negative_inertia_breaks_definiteness() {
        let p = RobotParams {
            base_inertia_y: -1e-3,
            ..RobotParams::default()
        };
        let m = Model::new_unchecked(p).unwrap();
        let (_, indefinite) = mass_matrix_survey(&m, 20, 1).unwrap();
        assert_eq!(indefinite, 20);
    }
}
