//! Fixed-step RK4 on the multiplier-augmented equations of motion.

use nalgebra::{DMatrix, DVector};

use crate::actuation::{ActuationInput, MotorOutput};
use crate::dynamics::{assemble, energy_from_mass, modal_index, AssembledSystem, EnergyBreakdown, Model, SystemState};
use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Baumgarte gain on the lateral-slip velocity, 1/s. Zero disables both
    /// the correction and the post-step projection.
    pub stabilization_gain: f64,
    pub record_stride: usize,
    /// Lock `X, Y, φ, θ1, θ2` and integrate the beams alone.
    pub clamp_base: bool,
    /// Largest admissible `|θ_j|`, rad.
    pub tilt_bound: f64,
    /// Largest admissible magnitude of any coordinate.
    pub position_bound: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt: 1e-5,
            t_end: 1.0,
            stabilization_gain: 0.0,
            record_stride: 1,
            clamp_base: false,
            tilt_bound: 0.5,
            position_bound: 1e3,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(validation("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(validation("duration", format!("must be non-negative, got {}", self.t_end)));
        }
        if self.t_end > 0.0 && self.t_end < self.dt {
            return Err(validation("duration", format!("{} is shorter than one step of {}", self.t_end, self.dt)));
        }
        if self.record_stride == 0 {
            return Err(validation("record_stride", "must be at least 1"));
        }
        if !(self.stabilization_gain >= 0.0 && self.stabilization_gain.is_finite()) {
            return Err(validation("stabilization_gain", "must be finite and non-negative"));
        }
        if !(self.tilt_bound > 0.0 && self.position_bound > 0.0) {
            return Err(validation("tilt_bound", "divergence bounds must be positive"));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Voltages as a function of time and state (the state enables feedback).
pub trait InputSchedule {
    fn inputs(&self, t: f64, state: &SystemState) -> ActuationInput;
}

impl<F: Fn(f64, &SystemState) -> ActuationInput> InputSchedule for F {
    fn inputs(&self, t: f64, state: &SystemState) -> ActuationInput {
        self(t, state)
    }
}

/// No inputs at all.
pub fn unforced(_: f64, _: &SystemState) -> ActuationInput {
    ActuationInput::default()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub n_modes: usize,
    pub times: Vec<f64>,
    pub states: Vec<SystemState>,
    /// Lateral wheel force `F_s`, N.
    pub constraint_force: Vec<f64>,
    pub motor: Vec<MotorOutput>,
    pub inputs: Vec<ActuationInput>,
    pub energy: Vec<EnergyBreakdown>,
    /// Work delivered by motors, patches and the constraint since t = 0, J.
    pub input_work: Vec<f64>,
    /// Energy removed by damping since t = 0, J.
    pub dissipated: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `w_beam(L, t)` at every record.
    pub fn tip_deflection(&self, beam: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.tip_deflection(beam)).collect()
    }

    pub fn coordinate(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.pos[index]).collect()
    }

    /// `|−Ẋ sin φ + Ẏ cos φ|` at every record.
    pub fn constraint_drift(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.lateral_speed().abs()).collect()
    }

    /// `max |E − E0 − (W_in − D)|` over the run.
    pub fn energy_balance_residual(&self) -> f64 {
        let Some(e0) = self.energy.first().map(|e| e.total) else {
            return 0.0;
        };
        self.energy
            .iter()
            .zip(self.input_work.iter().zip(&self.dissipated))
            .map(|(e, (w, d))| (e.total - e0 - (w - d)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_energy(&self) -> f64 {
        self.energy.iter().map(|e| e.total.abs()).fold(0.0, f64::max)
    }

    pub fn sample_interval(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }
}

/// Solves `M a = f + Aᵀ F_s`, `A a = b` through a Cholesky factor of `M` and
/// the scalar Schur complement.
pub fn constrained_accel(sys: &AssembledSystem) -> Result<(DVector<f64>, f64)> {
    solve_with_rhs(sys, sys.constraint_rhs)
}

fn solve_with_rhs(sys: &AssembledSystem, rhs: f64) -> Result<(DVector<f64>, f64)> {
    let chol = sys
        .mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let free = chol.solve(&sys.force);
    let reaction = chol.solve(&sys.constraint_row);
    let schur = sys.constraint_row.dot(&reaction);
    if schur.is_nan() || schur <= 0.0 {
        return Err(Error::Numerical(format!("degenerate constraint (Schur complement {schur})")));
    }
    let fs = (rhs - sys.constraint_row.dot(&free)) / schur;
    Ok((free + reaction * fs, fs))
}

/// Beam-only accelerations with the base held fixed.
fn clamped_accel(sys: &AssembledSystem, n: usize) -> Result<DVector<f64>> {
    let q0 = modal_index(n, 0, 0);
    let m = sys.mass.view((q0, q0), (2 * n, 2 * n)).clone_owned();
    let f = sys.force.rows(q0, 2 * n).clone_owned();
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Numerical("beam mass block is not positive definite".into()))?;
    let mut acc = DVector::zeros(sys.force.len());
    acc.rows_mut(q0, 2 * n).copy_from(&chol.solve(&f));
    Ok(acc)
}

struct Rates {
    acc: DVector<f64>,
    constraint_force: f64,
    input_power: f64,
    dissipation: f64,
}

struct Stepper<'a, S: InputSchedule + ?Sized> {
    model: &'a Model,
    schedule: &'a S,
    cfg: &'a IntegratorConfig,
}

impl<'a, S: InputSchedule + ?Sized> Stepper<'a, S> {
    fn rates(&self, state: &SystemState) -> Result<(Rates, AssembledSystem, ActuationInput)> {
        let u = self.schedule.inputs(state.t, state);
        let sys = assemble(state, &u, self.model)?;
        let rates = if self.cfg.clamp_base {
            Rates {
                acc: clamped_accel(&sys, self.model.n_modes())?,
                constraint_force: 0.0,
                input_power: sys.input_power,
                dissipation: sys.dissipation,
            }
        } else {
            let slip = sys.constraint_row.dot(&state.vel);
            let rhs = sys.constraint_rhs - self.cfg.stabilization_gain * slip;
            let (acc, fs) = solve_with_rhs(&sys, rhs)?;
            Rates {
                acc,
                constraint_force: fs,
                input_power: sys.input_power + fs * slip,
                dissipation: sys.dissipation,
            }
        };
        Ok((rates, sys, u))
    }

    /// One RK4 step of state and the two work accumulators.
    fn step(&self, state: &SystemState, work: [f64; 2]) -> Result<(SystemState, [f64; 2])> {
        let h = self.cfg.dt;
        let stage = |base: &SystemState, dpos: &DVector<f64>, dvel: &DVector<f64>, c: f64| SystemState {
            pos: &base.pos + dpos * c,
            vel: &base.vel + dvel * c,
            t: base.t + c,
        };
        let (k1, ..) = self.rates(state)?;
        let s2 = stage(state, &state.vel, &k1.acc, 0.5 * h);
        let (k2, ..) = self.rates(&s2)?;
        let s3 = stage(state, &s2.vel, &k2.acc, 0.5 * h);
        let (k3, ..) = self.rates(&s3)?;
        let s4 = stage(state, &s3.vel, &k3.acc, h);
        let (k4, ..) = self.rates(&s4)?;

        let sixth = h / 6.0;
        let pos = &state.pos + (&state.vel + &s2.vel * 2.0 + &s3.vel * 2.0 + &s4.vel) * sixth;
        let mut vel = &state.vel + (&k1.acc + &k2.acc * 2.0 + &k3.acc * 2.0 + &k4.acc) * sixth;
        let w_in = work[0] + sixth * (k1.input_power + 2.0 * k2.input_power + 2.0 * k3.input_power + k4.input_power);
        let w_d = work[1] + sixth * (k1.dissipation + 2.0 * k2.dissipation + 2.0 * k3.dissipation + k4.dissipation);

        let mut next = SystemState {
            pos,
            vel: vel.clone(),
            t: state.t + h,
        };
        if !self.cfg.clamp_base && self.cfg.stabilization_gain > 0.0 {
            let sys = assemble(&next, &ActuationInput::default(), self.model)?;
            project_velocity(&sys.mass, &sys.constraint_row, &mut vel)?;
            next.vel = vel;
        }
        Ok((next, [w_in, w_d]))
    }
}

/// Removes the constraint-violating part of `vel` in the `M` metric.
fn project_velocity(mass: &DMatrix<f64>, row: &DVector<f64>, vel: &mut DVector<f64>) -> Result<()> {
    let chol = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("mass matrix is not positive definite".into()))?;
    let z = chol.solve(row);
    let lambda = row.dot(vel) / row.dot(&z);
    *vel -= z * lambda;
    Ok(())
}

/// A single RK4 step; feedback is re-evaluated at every stage.
pub fn step<S: InputSchedule + ?Sized>(state: &SystemState, schedule: &S, cfg: &IntegratorConfig, model: &Model) -> Result<SystemState> {
    let stepper = Stepper { model, schedule, cfg };
    stepper.step(state, [0.0; 2]).map(|(s, _)| s)
}

fn divergence(state: &SystemState, cfg: &IntegratorConfig) -> Option<String> {
    if !state.pos.iter().chain(state.vel.iter()).all(|v| v.is_finite()) {
        return Some("non-finite state".into());
    }
    for beam in 0..2 {
        let th = state.pos[crate::dynamics::theta_index(beam)];
        if th.abs() > cfg.tilt_bound {
            return Some(format!("|θ{}| = {:.3} rad exceeds {}", beam + 1, th.abs(), cfg.tilt_bound));
        }
    }
    if let Some(k) = state.pos.iter().position(|v| v.abs() > cfg.position_bound) {
        return Some(format!("coordinate {k} exceeds {}", cfg.position_bound));
    }
    None
}

/// Integrates from `initial.t` for `cfg.t_end` seconds.
pub fn simulate<S: InputSchedule + ?Sized>(
    initial: &SystemState,
    schedule: &S,
    cfg: &IntegratorConfig,
    model: &Model,
) -> Result<Trajectory> {
    cfg.validate()?;
    initial.check(model.n_modes())?;
    let stepper = Stepper { model, schedule, cfg };
    let n_steps = cfg.n_steps();
    let t0 = initial.t;
    let mut traj = Trajectory {
        n_modes: model.n_modes(),
        ..Trajectory::default()
    };
    let record = |traj: &mut Trajectory, state: &SystemState, work: [f64; 2]| -> Result<()> {
        let (rates, sys, u) = stepper.rates(state)?;
        traj.times.push(state.t);
        traj.states.push(state.clone());
        traj.constraint_force.push(rates.constraint_force);
        traj.motor.push(sys.motor);
        traj.inputs.push(u);
        traj.energy.push(energy_from_mass(state, model, &sys.mass));
        traj.input_work.push(work[0]);
        traj.dissipated.push(work[1]);
        Ok(())
    };

    let mut state = initial.clone();
    let mut work = [0.0; 2];
    record(&mut traj, &state, work)?;
    for k in 1..=n_steps {
        let result = stepper.step(&state, work);
        let (mut next, next_work) = match result {
            Ok(v) => v,
            Err(Error::Numerical(reason)) => {
                return Err(Error::Diverged {
                    time: state.t,
                    reason,
                    trajectory: Box::new(traj),
                })
            }
            Err(e) => return Err(e),
        };
        // keep the grid exactly uniform
        next.t = t0 + k as f64 * cfg.dt;
        if let Some(reason) = divergence(&next, cfg) {
            return Err(Error::Diverged {
                time: state.t,
                reason,
                trajectory: Box::new(traj),
            });
        }
        state = next;
        work = next_work;
        if k % cfg.record_stride == 0 {
            record(&mut traj, &state, work)?;
        }
    }
    Ok(traj)
}
