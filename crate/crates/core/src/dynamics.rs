//! Equations of motion of the robot in mass-matrix form.
//!
//! Generalised coordinates, in order:
//!
//! ```text
//! X, Y, φ, θ1, θ2, q1_1..q1_n, q2_1..q2_n
//! ```
//!
//! `(X, Y)` is the robot centre, `φ` the heading, `θ_j` the tilt of base `j`
//! and `q_j` the modal coordinates of beam `j` (unit-tip shapes, so `Σ q_j`
//! is the tip deflection). Beam 1 and wheel 1 sit on the right-hand side of
//! the heading, at lateral offsets `a` and `2a`.
//!
//! [`assemble`] projects the acceleration of every mass element onto its
//! partial velocities. Along a beam each of those quantities is a linear
//! combination of `{1, x, W_1..W_n}`, so every spatial integral reduces to a
//! quadratic form with the `ρA`-weighted Gram matrix of that set. The result
//! is `M(q) q̈ = f(q, q̇, u) + Aᵀ F_s`, with one no-side-slip row
//! `A = (−sin φ, cos φ, 0, …)` and lateral wheel force `F_s`.

use nalgebra::{DMatrix, DVector};

use crate::actuation::{motor_torques, piezo_generalized_force, ActuationInput, MotorOutput};
use crate::error::{Error, Result};
use crate::modal::BeamModalBasis;
use crate::params::{derive_sections, DampingModel, RobotParams, SectionProperties, MAX_MODES};

pub const X: usize = 0;
pub const Y: usize = 1;
pub const PHI: usize = 2;

/// Index of `θ_beam` (beam is 0 or 1).
pub const fn theta_index(beam: usize) -> usize {
    3 + beam
}

/// Index of modal coordinate `mode` of `beam`.
pub const fn modal_index(n_modes: usize, beam: usize, mode: usize) -> usize {
    5 + beam * n_modes + mode
}

pub const fn dof(n_modes: usize) -> usize {
    5 + 2 * n_modes
}

/// Lateral side of beam/wheel `j`: +1 for 1 (right), −1 for 2 (left).
pub const fn side(beam: usize) -> f64 {
    if beam == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Parameters, section properties and modal basis, built once and shared.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: RobotParams,
    pub sections: SectionProperties,
    pub basis: BeamModalBasis,
}

impl Model {
    pub fn new(params: RobotParams) -> Result<Self> {
        params.validate()?;
        Self::new_unchecked(params)
    }

    /// Skips parameter validation. For probing deliberately broken
    /// configurations.
    pub fn new_unchecked(params: RobotParams) -> Result<Self> {
        let sections = derive_sections(&params);
        let basis = BeamModalBasis::with_sections(&params, &sections)?;
        Ok(Model {
            params,
            sections,
            basis,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }

    pub fn dof(&self) -> usize {
        dof(self.n_modes())
    }

    /// Diagonal modal damping coefficient of mode `k`.
    pub fn modal_damping(&self, k: usize) -> f64 {
        2.0 * self.params.damping_ratio(k) * self.basis.omega[k] * self.basis.integrals.mass[(k, k)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub pos: DVector<f64>,
    pub vel: DVector<f64>,
    pub t: f64,
}

impl SystemState {
    pub fn zeros(n_modes: usize) -> Self {
        SystemState {
            pos: DVector::zeros(dof(n_modes)),
            vel: DVector::zeros(dof(n_modes)),
            t: 0.0,
        }
    }

    pub fn n_modes(&self) -> usize {
        (self.pos.len() - 5) / 2
    }

    pub fn check(&self, n_modes: usize) -> Result<()> {
        let want = dof(n_modes);
        assert!(
            self.pos.len() == want && self.vel.len() == want,
            "state has {} / {} coordinates, model needs {want}",
            self.pos.len(),
            self.vel.len()
        );
        if !(self.pos.iter().chain(self.vel.iter()).all(|v| v.is_finite()) && self.t.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state at t = {}", self.t)));
        }
        Ok(())
    }

    /// Speed along the heading.
    pub fn forward_speed(&self) -> f64 {
        let (s, c) = self.pos[PHI].sin_cos();
        self.vel[X] * c + self.vel[Y] * s
    }

    /// Sideways speed of the centre; zero when the no-slip condition holds.
    pub fn lateral_speed(&self) -> f64 {
        let (s, c) = self.pos[PHI].sin_cos();
        -self.vel[X] * s + self.vel[Y] * c
    }

    /// Forward contact speeds of wheel 1 and 2.
    pub fn wheel_speeds(&self, half_track: f64) -> (f64, f64) {
        let vf = self.forward_speed();
        let spin = 2.0 * half_track * self.vel[PHI];
        (vf + spin, vf - spin)
    }

    /// `w_beam(L, t)`.
    pub fn tip_deflection(&self, beam: usize) -> f64 {
        let n = self.n_modes();
        (0..n).map(|i| self.pos[modal_index(n, beam, i)]).sum()
    }

    /// Reflection through the vertical plane along the heading: `Y → −Y`,
    /// `φ → −φ`, beams swapped.
    pub fn mirrored(&self) -> Self {
        let perm = MirrorMap::new(self.n_modes());
        SystemState {
            pos: perm.apply(&self.pos),
            vel: perm.apply(&self.vel),
            t: self.t,
        }
    }
}

/// The signed permutation behind [`SystemState::mirrored`].
#[derive(Debug, Clone)]
pub struct MirrorMap {
    target: Vec<usize>,
    sign: Vec<f64>,
}

impl MirrorMap {
    pub fn new(n_modes: usize) -> Self {
        let d = dof(n_modes);
        let mut target: Vec<usize> = (0..d).collect();
        let mut sign = vec![1.0; d];
        sign[Y] = -1.0;
        sign[PHI] = -1.0;
        target[theta_index(0)] = theta_index(1);
        target[theta_index(1)] = theta_index(0);
        for i in 0..n_modes {
            target[modal_index(n_modes, 0, i)] = modal_index(n_modes, 1, i);
            target[modal_index(n_modes, 1, i)] = modal_index(n_modes, 0, i);
        }
        MirrorMap { target, sign }
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for (i, (&t, &s)) in self.target.iter().zip(&self.sign).enumerate() {
            out[t] = s * v[i];
        }
        out
    }

    /// `P M Pᵀ`.
    pub fn apply_matrix(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let d = m.nrows();
        let mut out = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out[(self.target[i], self.target[j])] = self.sign[i] * self.sign[j] * m[(i, j)];
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub mass: DMatrix<f64>,
    /// Every non-inertial term, on the right-hand side.
    pub force: DVector<f64>,
    pub constraint_row: DVector<f64>,
    /// `−Ȧ q̇`
    pub constraint_rhs: f64,
    pub motor: MotorOutput,
    /// Power delivered by the motors and the piezo patches, W.
    pub input_power: f64,
    /// Power removed by beam damping, W (non-negative).
    pub dissipation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub strain: f64,
    pub gravitational: f64,
    pub total: f64,
}

const MAX_BASIS: usize = MAX_MODES + 2;

/// A function along the beam as coefficients over `{1, x, W_1..W_n}`.
#[derive(Clone, Copy)]
struct Field {
    c: [f64; MAX_BASIS],
}

impl Field {
    const ZERO: Field = Field { c: [0.0; MAX_BASIS] };

    fn unit(k: usize) -> Field {
        let mut f = Field::ZERO;
        f.c[k] = 1.0;
        f
    }

    fn modal(values: &[f64]) -> Field {
        let mut f = Field::ZERO;
        f.c[2..2 + values.len()].copy_from_slice(values);
        f
    }

    /// `a·self + b·other`
    fn lin(self, a: f64, other: Field, b: f64) -> Field {
        let mut f = Field::ZERO;
        for k in 0..MAX_BASIS {
            f.c[k] = a * self.c[k] + b * other.c[k];
        }
        f
    }

    fn scaled(self, a: f64) -> Field {
        self.lin(a, Field::ZERO, 0.0)
    }

    fn dot(&self, other: &Field, nb: usize) -> f64 {
        (0..nb).map(|k| self.c[k] * other.c[k]).sum()
    }
}

/// `G f`, so that `∫ρA f g dx = g · (G f)`.
fn weigh(gram: &DMatrix<f64>, f: &Field, nb: usize) -> Field {
    let mut out = Field::ZERO;
    for i in 0..nb {
        out.c[i] = (0..nb).map(|j| gram[(i, j)] * f.c[j]).sum();
    }
    out
}

/// Partial velocity of a beam element along `(heading, lateral, vertical)`.
#[derive(Clone, Copy)]
struct Partial {
    index: usize,
    comp: [Field; 3],
}

fn assemble_beam(model: &Model, beam: usize, state: &SystemState, mass: &mut DMatrix<f64>, force: &mut DVector<f64>) {
    let n = model.n_modes();
    let nb = n + 2;
    let gram = &model.basis.gram;
    let s = side(beam);
    let a = model.params.half_track;
    let th_i = theta_index(beam);
    let q0 = modal_index(n, beam, 0);

    let (sp, cp) = state.pos[PHI].sin_cos();
    let (st, ct) = state.pos[th_i].sin_cos();
    let phid = state.vel[PHI];
    let thd = state.vel[th_i];

    let one = Field::unit(0);
    let x = Field::unit(1);
    let w = Field::modal(&state.pos.as_slice()[q0..q0 + n]);
    let wd = Field::modal(&state.vel.as_slice()[q0..q0 + n]);

    // Horizontal forward offset of an element from its base, and its θ-partial.
    let u = w.lin(ct, x, st);
    let u_theta = x.lin(ct, w, -st);
    let ud = wd.lin(ct, u_theta, thd);

    let mut partials: Vec<Partial> = Vec::with_capacity(4 + n);
    partials.push(Partial {
        index: X,
        comp: [one.scaled(cp), one.scaled(-sp), Field::ZERO],
    });
    partials.push(Partial {
        index: Y,
        comp: [one.scaled(sp), one.scaled(cp), Field::ZERO],
    });
    partials.push(Partial {
        index: PHI,
        comp: [one.scaled(s * a), u, Field::ZERO],
    });
    partials.push(Partial {
        index: th_i,
        comp: [u_theta, Field::ZERO, u.scaled(-1.0)],
    });
    for i in 0..n {
        let wi = Field::unit(2 + i);
        partials.push(Partial {
            index: q0 + i,
            comp: [wi.scaled(ct), Field::ZERO, wi.scaled(-st)],
        });
    }

    // Acceleration of an element with q̈ = 0.
    let accel = [
        wd.lin(-2.0 * thd * st, u, -(thd * thd + phid * phid)),
        ud.lin(2.0 * phid, one, s * a * phid * phid),
        wd.lin(-2.0 * thd * ct, u_theta, -thd * thd),
    ];
    let accel_w: Vec<Field> = accel.iter().map(|f| weigh(gram, f, nb)).collect();

    let weighted: Vec<[Field; 3]> = partials
        .iter()
        .map(|p| [weigh(gram, &p.comp[0], nb), weigh(gram, &p.comp[1], nb), weigh(gram, &p.comp[2], nb)])
        .collect();

    for (k, pk) in partials.iter().enumerate() {
        for (l, pl) in partials.iter().enumerate().skip(k) {
            let v: f64 = (0..3).map(|c| pl.comp[c].dot(&weighted[k][c], nb)).sum();
            mass[(pk.index, pl.index)] += v;
            if k != l {
                mass[(pl.index, pk.index)] += v;
            }
        }
        let proj: f64 = (0..3).map(|c| pk.comp[c].dot(&accel_w[c], nb)).sum();
        force[pk.index] -= proj;
    }
}

/// A point mass riding at lateral offset `offset` on side `s`.
fn assemble_point(mass_value: f64, offset: f64, s: f64, state: &SystemState, mass: &mut DMatrix<f64>, force: &mut DVector<f64>) {
    let (sp, cp) = state.pos[PHI].sin_cos();
    let phid = state.vel[PHI];
    let d = s * offset;
    mass[(X, X)] += mass_value;
    mass[(Y, Y)] += mass_value;
    mass[(X, PHI)] += mass_value * cp * d;
    mass[(PHI, X)] += mass_value * cp * d;
    mass[(Y, PHI)] += mass_value * sp * d;
    mass[(PHI, Y)] += mass_value * sp * d;
    mass[(PHI, PHI)] += mass_value * d * d;
    // centripetal acceleration d φ̇² along the lateral axis
    let centripetal = d * phid * phid;
    force[X] += mass_value * sp * centripetal;
    force[Y] -= mass_value * cp * centripetal;
}

/// Spin of a wheel about its axle, `ω = (v_f + 2 s a φ̇) / r`.
fn assemble_wheel_spin(p: &RobotParams, s: f64, state: &SystemState, mass: &mut DMatrix<f64>, force: &mut DVector<f64>) {
    let (sp, cp) = state.pos[PHI].sin_cos();
    let phid = state.vel[PHI];
    let r = p.wheel_radius;
    let inertia = p.wheel_inertia_y;
    let jac = [(X, cp / r), (Y, sp / r), (PHI, 2.0 * s * p.half_track / r)];
    let omega = (state.forward_speed() + 2.0 * s * p.half_track * phid) / r;
    let vl = state.lateral_speed();
    // d/dt of the Jacobian, and ∂ω/∂q (only φ enters).
    let jac_dot = [-sp * phid / r, cp * phid / r, 0.0];
    let domega_dq = [0.0, 0.0, vl / r];
    let jac_dot_qd = phid * vl / r;
    for (k, &(ik, jk)) in jac.iter().enumerate() {
        for &(il, jl) in &jac {
            mass[(ik, il)] += inertia * jk * jl;
        }
        force[ik] -= inertia * (jk * jac_dot_qd + omega * (jac_dot[k] - domega_dq[k]));
    }
}

/// Mass matrix, right-hand side and constraint of the equations of motion.
pub fn assemble(state: &SystemState, inputs: &ActuationInput, model: &Model) -> Result<AssembledSystem> {
    let n = model.n_modes();
    state.check(n)?;
    if !inputs.is_finite() {
        return Err(Error::Numerical(format!("non-finite actuation input at t = {}", state.t)));
    }
    let p = &model.params;
    let d = dof(n);
    let mut mass = DMatrix::zeros(d, d);
    let mut force = DVector::zeros(d);

    for beam in 0..2 {
        let s = side(beam);
        assemble_beam(model, beam, state, &mut mass, &mut force);
        assemble_point(p.wheel_mass, 2.0 * p.half_track, s, state, &mut mass, &mut force);
        assemble_point(p.base_mass, p.half_track, s, state, &mut mass, &mut force);
        assemble_wheel_spin(p, s, state, &mut mass, &mut force);
        mass[(theta_index(beam), theta_index(beam))] += p.base_inertia_y;
    }
    mass[(PHI, PHI)] += 2.0 * (p.wheel_inertia_z + p.base_inertia_z);

    let mut input_power = 0.0;
    let mut dissipation = 0.0;

    // Motors push each wheel along the heading.
    let (sp, cp) = state.pos[PHI].sin_cos();
    let speeds = state.wheel_speeds(p.half_track);
    let motor = motor_torques(inputs, speeds, p);
    for (tau, s, v) in [(motor.tau1, 1.0, speeds.0), (motor.tau2, -1.0, speeds.1)] {
        let push = tau / p.wheel_radius;
        force[X] += push * cp;
        force[Y] += push * sp;
        force[PHI] += push * 2.0 * s * p.half_track;
        input_power += push * v;
    }

    let g = p.effective_gravity();
    let ints = &model.basis.integrals;
    for beam in 0..2 {
        let th_i = theta_index(beam);
        let q0 = modal_index(n, beam, 0);
        let q = state.pos.rows(q0, n);
        let qd = state.vel.rows(q0, n);
        let (st, ct) = state.pos[th_i].sin_cos();

        // gravity: U = g ∫ρA (−w sin θ + x cos θ)
        let first_q = ints.first.dot(&q);
        force[th_i] += g * (ct * first_q + st * ints.p1);
        let kq = &ints.stiffness * q;
        let v = inputs.piezo(beam);
        let damping: DVector<f64> = match p.damping_model {
            DampingModel::Modal => DVector::from_iterator(n, (0..n).map(|i| model.modal_damping(i) * qd[i])),
            DampingModel::Viscous => {
                let c = if beam == 0 { p.viscous_damping_1 } else { p.viscous_damping_2 };
                (&ints.overlap * qd) * c
            }
        };
        for i in 0..n {
            let piezo = piezo_generalized_force(v, i, &model.sections, &model.basis);
            force[q0 + i] += g * st * ints.first[i] - kq[i] - damping[i] + piezo;
            input_power += piezo * qd[i];
            dissipation += damping[i] * qd[i];
        }
    }

    let mut constraint_row = DVector::zeros(d);
    constraint_row[X] = -sp;
    constraint_row[Y] = cp;
    let constraint_rhs = state.vel[PHI] * state.forward_speed();

    Ok(AssembledSystem {
        mass,
        force,
        constraint_row,
        constraint_rhs,
        motor,
        input_power,
        dissipation,
    })
}

/// Stored mechanical energy. The patch-voltage coupling is excluded: it is
/// accounted for as input work.
pub fn total_energy(state: &SystemState, model: &Model) -> Result<EnergyBreakdown> {
    let sys = assemble(state, &ActuationInput::default(), model)?;
    Ok(energy_from_mass(state, model, &sys.mass))
}

pub(crate) fn energy_from_mass(state: &SystemState, model: &Model, mass: &DMatrix<f64>) -> EnergyBreakdown {
    let n = model.n_modes();
    let p = &model.params;
    let ints = &model.basis.integrals;
    let kinetic = 0.5 * state.vel.dot(&(mass * &state.vel));
    let g = p.effective_gravity();
    let mut strain = 0.0;
    let mut gravitational = 2.0 * g * p.wheel_radius * (p.wheel_mass + p.base_mass);
    for beam in 0..2 {
        let q = state.pos.rows(modal_index(n, beam, 0), n);
        strain += 0.5 * q.dot(&(&ints.stiffness * q));
        let (st, ct) = state.pos[theta_index(beam)].sin_cos();
        gravitational += g * (p.wheel_radius * ints.p0 - st * ints.first.dot(&q) + ct * ints.p1);
    }
    EnergyBreakdown {
        kinetic,
        strain,
        gravitational,
        total: kinetic + strain + gravitational,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn model(n: usize) -> Model {
        Model::new(RobotParams {
            n_modes: n,
            ..RobotParams::default()
        })
        .unwrap()
    }

    fn random_state(rng: &mut impl Rng, n: usize, bound: f64) -> SystemState {
        let d = dof(n);
        SystemState {
            pos: DVector::from_fn(d, |_, _| rng.gen_range(-bound..bound)),
            vel: DVector::from_fn(d, |_, _| rng.gen_range(-bound..bound)),
            t: 0.0,
        }
    }

    #[test]
    fn upright_rest_is_an_equilibrium() {
        let m = model(2);
        let sys = assemble(&SystemState::zeros(2), &ActuationInput::default(), &m).unwrap();
        assert!(sys.force.iter().all(|&f| f == 0.0), "{}", sys.force);
        assert_eq!(sys.constraint_rhs, 0.0);
    }

    #[test]
    fn tilt_mode_coupling_is_first_moment() {
        let m = model(3);
        let sys = assemble(&SystemState::zeros(3), &ActuationInput::default(), &m).unwrap();
        for i in 0..3 {
            let got = sys.mass[(theta_index(0), modal_index(3, 0, i))];
            assert!((got - m.basis.integrals.moment[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn forward_ride_kinetic_energy() {
        let m = model(2);
        let p = &m.params;
        let v = 0.7;
        let mut st = SystemState::zeros(2);
        st.pos[PHI] = 0.4;
        st.vel[X] = v * 0.4f64.cos();
        st.vel[Y] = v * 0.4f64.sin();
        let e = total_energy(&st, &m).unwrap();
        let want = 0.5
            * (2.0 * p.wheel_mass + 2.0 * p.base_mass + 2.0 * m.basis.integrals.p0 + 2.0 * p.wheel_inertia_y / p.wheel_radius.powi(2))
            * v
            * v;
        assert!((e.kinetic - want).abs() < 1e-14, "{} vs {want}", e.kinetic);
        assert_eq!(e.strain, 0.0);
    }

    #[test]
    fn rigid_tilt_lowers_gravity_energy() {
        let m = model(2);
        let delta = 0.2;
        let mut st = SystemState::zeros(2);
        let e0 = total_energy(&st, &m).unwrap();
        st.pos[theta_index(0)] = delta;
        let e1 = total_energy(&st, &m).unwrap();
        let want = m.params.gravity * m.basis.integrals.p1 * (1.0 - delta.cos());
        assert!(((e0.gravitational - e1.gravitational) - want).abs() < 1e-15);
        let zero = total_energy(&SystemState::zeros(2), &m).unwrap();
        assert_eq!((zero.kinetic, zero.strain), (0.0, 0.0));
    }

    #[test]
    fn mass_matrix_symmetric_and_positive() {
        let m = model(3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let l = m.params.beam_length;
        for _ in 0..1000 {
            let mut st = random_state(&mut rng, 3, 1.0);
            for k in 5..dof(3) {
                st.pos[k] *= 0.1 * l;
            }
            let sys = assemble(&st, &ActuationInput::default(), &m).unwrap();
            let norm = sys.mass.norm();
            assert!((&sys.mass - sys.mass.transpose()).amax() <= 1e-10 * norm);
            assert!(sys.mass.clone().cholesky().is_some());
        }
    }

    #[test]
    fn mirror_maps_solutions_to_solutions() {
        let m = model(2);
        let map = MirrorMap::new(2);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let st = random_state(&mut rng, 2, 0.3);
            let u = ActuationInput {
                v1: rng.gen_range(-5.0..5.0),
                v2: rng.gen_range(-5.0..5.0),
                va1: rng.gen_range(-2.0..2.0),
                va2: rng.gen_range(-2.0..2.0),
            };
            let a = assemble(&st, &u, &m).unwrap();
            let b = assemble(&st.mirrored(), &u.mirrored(), &m).unwrap();
            let pm = map.apply_matrix(&a.mass);
            let pf = map.apply(&a.force);
            assert!((&pm - &b.mass).amax() <= 1e-12 * a.mass.amax());
            assert!((&pf - &b.force).amax() <= 1e-12 * a.force.amax().max(1.0));
            // Constraint row flips sign under the mirror, so F_s does too.
            let pa = map.apply(&a.constraint_row);
            assert!((&pa + &b.constraint_row).amax() < 1e-15);
            assert!((a.constraint_rhs + b.constraint_rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn bad_state_is_reported() {
        let m = model(2);
        let mut st = SystemState::zeros(2);
        st.vel[3] = f64::NAN;
        assert!(matches!(assemble(&st, &ActuationInput::default(), &m), Err(Error::Numerical(_))));
    }

    #[test]
    #[should_panic]
    fn wrong_dimension_panics() {
        let m = model(2);
        let _ = assemble(&SystemState::zeros(3), &ActuationInput::default(), &m);
    }

    #[test]
    fn power_terms() {
        let m = model(2);
        let mut st = SystemState::zeros(2);
        st.vel[modal_index(2, 1, 0)] = 0.2;
        st.vel[X] = 0.5;
        let u = ActuationInput {
            v2: 3.0,
            va1: 1.0,
            ..Default::default()
        };
        let sys = assemble(&st, &u, &m).unwrap();
        let c = m.modal_damping(0);
        assert!((sys.dissipation - c * 0.04).abs() < 1e-18);
        let piezo = piezo_generalized_force(3.0, 0, &m.sections, &m.basis) * 0.2;
        let motor = (sys.motor.tau1 + sys.motor.tau2) * 0.5 / m.params.wheel_radius;
        assert!((sys.input_power - piezo - motor).abs() < 1e-15);
    }
}
