//! Equations of motion rebuilt numerically from the energies.
//!
//! Kinetic energy is evaluated by spatial quadrature of world-frame element
//! velocities, potential energy likewise; the mass matrix and the force vector
//! follow from finite differences of those scalars. Nothing here touches the
//! modal integral table or the hand assembly in [`crate::dynamics`], which is
//! what makes the comparison between the two meaningful.

use nalgebra::{DMatrix, DVector};

use crate::actuation::{motor_torques, ActuationInput};
use crate::dynamics::{dof, modal_index, theta_index, AssembledSystem, Model, SystemState, PHI, X, Y};
use crate::error::{Error, Result};
use crate::params::DampingModel;
use crate::quadrature;

const NODES_PER_SEGMENT: usize = 64;

struct Node {
    x: f64,
    weight: f64,
    rho_a: f64,
    in_patch: bool,
    w: Vec<f64>,
    d2w: Vec<f64>,
}

struct Energies<'a> {
    model: &'a Model,
    nodes: Vec<Node>,
    n: usize,
}

impl<'a> Energies<'a> {
    fn new(model: &'a Model) -> Result<Self> {
        let p = &model.params;
        let n = model.n_modes();
        let rho_bare = p.beam_density * p.beam_width * p.beam_thickness;
        let rho_patch = rho_bare + p.piezo_density * p.piezo_width * p.piezo_thickness;
        let mut nodes = Vec::new();
        for (a, b, rho_a, in_patch) in [(0.0, p.piezo_length, rho_patch, true), (p.piezo_length, p.beam_length, rho_bare, false)] {
            if b <= a {
                continue;
            }
            for (x, weight) in quadrature::mapped(NODES_PER_SEGMENT, a, b) {
                let mut w = Vec::with_capacity(n);
                let mut d2w = Vec::with_capacity(n);
                for i in 0..n {
                    let v = model.basis.mode_shape(x, i)?;
                    w.push(v.w);
                    d2w.push(v.d2w);
                }
                nodes.push(Node {
                    x,
                    weight,
                    rho_a,
                    in_patch,
                    w,
                    d2w,
                });
            }
        }
        Ok(Energies { model, nodes, n })
    }

    fn modal<'v>(&self, v: &'v DVector<f64>, beam: usize) -> &'v [f64] {
        let start = modal_index(self.n, beam, 0);
        &v.as_slice()[start..start + self.n]
    }

    fn kinetic(&self, q: &DVector<f64>, qd: &DVector<f64>) -> f64 {
        let p = &self.model.params;
        let a = p.half_track;
        let (sp, cp) = q[PHI].sin_cos();
        let (xd, yd, phid) = (qd[X], qd[Y], qd[PHI]);
        let mut t = 0.0;
        for beam in 0..2 {
            // +1 for the right-hand beam: X = Xc + σ a sinφ + …, Y = Yc − σ a cosφ + …
            let sigma = if beam == 0 { 1.0 } else { -1.0 };
            let theta = q[theta_index(beam)];
            let thd = qd[theta_index(beam)];
            let (st, ct) = theta.sin_cos();
            let qs = self.modal(q, beam);
            let qds = self.modal(qd, beam);
            for node in &self.nodes {
                let w: f64 = node.w.iter().zip(qs).map(|(a, b)| a * b).sum();
                let wd: f64 = node.w.iter().zip(qds).map(|(a, b)| a * b).sum();
                let x = node.x;
                let u = ct * w + x * st;
                let ud = ct * wd + thd * (-st * w + x * ct);
                let vx = xd + sigma * a * cp * phid - sp * phid * u + cp * ud;
                let vy = yd + sigma * a * sp * phid + cp * phid * u + sp * ud;
                let vz = -ct * thd * w - st * wd - x * st * thd;
                t += 0.5 * node.weight * node.rho_a * (vx * vx + vy * vy + vz * vz);
            }
            for (mass, offset) in [(p.wheel_mass, 2.0 * a), (p.base_mass, a)] {
                let vx = xd + sigma * offset * cp * phid;
                let vy = yd + sigma * offset * sp * phid;
                t += 0.5 * mass * (vx * vx + vy * vy);
            }
            let spin = (xd * cp + yd * sp + sigma * 2.0 * a * phid) / p.wheel_radius;
            t += 0.5 * p.wheel_inertia_y * spin * spin + 0.5 * p.wheel_inertia_z * phid * phid;
            t += 0.5 * p.base_inertia_y * thd * thd + 0.5 * p.base_inertia_z * phid * phid;
        }
        t
    }

    fn potential(&self, q: &DVector<f64>, inputs: &ActuationInput) -> f64 {
        let p = &self.model.params;
        let g = p.effective_gravity();
        let ei_beam = p.beam_modulus * p.beam_width * p.beam_thickness.powi(3) / 12.0;
        let ei_patch = p.piezo_modulus * self.model.sections.piezo_area_moment;
        // moment per volt divided by the patch bending stiffness
        let curvature_per_volt = if ei_patch > 0.0 {
            self.model.sections.piezo_moment_coeff / ei_patch
        } else {
            0.0
        };
        let mut u = 2.0 * g * p.wheel_radius * (p.wheel_mass + p.base_mass);
        for beam in 0..2 {
            let (st, ct) = q[theta_index(beam)].sin_cos();
            let qs = self.modal(q, beam);
            let kappa = curvature_per_volt * inputs.piezo(beam);
            for node in &self.nodes {
                let w: f64 = node.w.iter().zip(qs).map(|(a, b)| a * b).sum();
                let curv: f64 = node.d2w.iter().zip(qs).map(|(a, b)| a * b).sum();
                let mut density = 0.5 * ei_beam * curv * curv;
                if node.in_patch {
                    let c = curv + kappa;
                    density += 0.5 * ei_patch * c * c;
                }
                density += g * node.rho_a * (p.wheel_radius - st * w + node.x * ct);
                u += node.weight * density;
            }
        }
        u
    }

    fn wheel_position(&self, q: &DVector<f64>, sigma: f64) -> [f64; 2] {
        let (sp, cp) = q[PHI].sin_cos();
        let d = 2.0 * self.model.params.half_track;
        [q[X] + sigma * d * sp, q[Y] - sigma * d * cp]
    }

    fn lateral_speed(q: &DVector<f64>, qd: &DVector<f64>) -> f64 {
        let (sp, cp) = q[PHI].sin_cos();
        -qd[X] * sp + qd[Y] * cp
    }
}

/// Central differences of `f` at a ladder of steps, each Richardson
/// extrapolated; per component, the neighbouring pair of extrapolants that
/// agree best is averaged.
fn derivative_vec(f: impl Fn(f64) -> DVector<f64>) -> DVector<f64> {
    const STEPS: [f64; 3] = [1e-2, 1e-3, 1e-4];
    let extrap: Vec<DVector<f64>> = STEPS
        .iter()
        .map(|&h| {
            let d1 = (f(h) - f(-h)) / (2.0 * h);
            let d2 = (f(0.5 * h) - f(-0.5 * h)) / h;
            (d2 * 4.0 - d1) / 3.0
        })
        .collect();
    DVector::from_fn(extrap[0].len(), |i, _| {
        let e = [extrap[0][i], extrap[1][i], extrap[2][i]];
        if (e[0] - e[1]).abs() <= (e[1] - e[2]).abs() {
            0.5 * (e[0] + e[1])
        } else {
            0.5 * (e[1] + e[2])
        }
    })
}

fn derivative(f: impl Fn(f64) -> f64) -> f64 {
    derivative_vec(|h| DVector::from_element(1, f(h)))[0]
}

fn shifted(v: &DVector<f64>, dir: &DVector<f64>, h: f64) -> DVector<f64> {
    v + dir * h
}

fn unit(d: usize, k: usize) -> DVector<f64> {
    let mut e = DVector::zeros(d);
    e[k] = 1.0;
    e
}

/// The same system as [`crate::dynamics::assemble`], obtained from
/// `T`, `U` and virtual work by finite differences.
pub fn lagrangian_oracle(state: &SystemState, inputs: &ActuationInput, model: &Model) -> Result<AssembledSystem> {
    let n = model.n_modes();
    state.check(n)?;
    let p = &model.params;
    let d = dof(n);
    let e = Energies::new(model)?;
    let q = &state.pos;
    let qd = &state.vel;

    // T is exactly quadratic in the velocities, so a wide central stencil is exact.
    const HV: f64 = 0.5;
    let kin_v = |v: &DVector<f64>| e.kinetic(q, v);
    let mut mass = DMatrix::zeros(d, d);
    for i in 0..d {
        let ei = unit(d, i);
        for j in i..d {
            let ej = unit(d, j);
            let pp = kin_v(&(qd + &ei * HV + &ej * HV));
            let pm = kin_v(&(qd + &ei * HV - &ej * HV));
            let mp = kin_v(&(qd - &ei * HV + &ej * HV));
            let mm = kin_v(&(qd - &ei * HV - &ej * HV));
            let v = (pp - pm - mp + mm) / (4.0 * HV * HV);
            mass[(i, j)] = v;
            mass[(j, i)] = v;
        }
    }

    let momentum = |pos: &DVector<f64>| -> DVector<f64> {
        DVector::from_fn(d, |i, _| {
            let ei = unit(d, i);
            (e.kinetic(pos, &(qd + &ei * HV)) - e.kinetic(pos, &(qd - &ei * HV))) / (2.0 * HV)
        })
    };
    // Ṁ q̇: derivative of the momentum along the motion.
    let mdot_qd = derivative_vec(|h| momentum(&shifted(q, qd, h)));

    let mut force = DVector::zeros(d);
    for k in 0..d {
        let ek = unit(d, k);
        let dt_dq = derivative(|h| e.kinetic(&shifted(q, &ek, h), qd));
        let du_dq = derivative(|h| e.potential(&shifted(q, &ek, h), inputs));
        force[k] = dt_dq - du_dq - mdot_qd[k];
    }

    // Motors: forward push at each wheel contact, virtual work.
    let (sp, cp) = q[PHI].sin_cos();
    let a = p.half_track;
    let speeds = (
        qd[X] * cp + qd[Y] * sp + 2.0 * a * qd[PHI],
        qd[X] * cp + qd[Y] * sp - 2.0 * a * qd[PHI],
    );
    let motor = motor_torques(inputs, speeds, p);
    let mut motor_force = DVector::zeros(d);
    for (tau, sigma) in [(motor.tau1, 1.0), (motor.tau2, -1.0)] {
        let push = tau / p.wheel_radius;
        for k in 0..d {
            let ek = unit(d, k);
            let g = derivative_vec(|h| DVector::from_row_slice(&e.wheel_position(&shifted(q, &ek, h), sigma)));
            motor_force[k] += push * (cp * g[0] + sp * g[1]);
        }
    }
    force += &motor_force;

    // Piezo input power: generalized force of the voltage-dependent part of U.
    let zero = ActuationInput::default();
    let mut piezo_force = DVector::zeros(d);
    for k in 0..d {
        let ek = unit(d, k);
        let with = derivative(|h| e.potential(&shifted(q, &ek, h), inputs));
        let without = derivative(|h| e.potential(&shifted(q, &ek, h), &zero));
        piezo_force[k] = -(with - without);
    }

    let mut dissipation = 0.0;
    for beam in 0..2 {
        let q0 = modal_index(n, beam, 0);
        let qds = e.modal(qd, beam);
        for i in 0..n {
            let c = match p.damping_model {
                DampingModel::Modal => {
                    let m_ii: f64 = e.nodes.iter().map(|nd| nd.weight * nd.rho_a * nd.w[i] * nd.w[i]).sum();
                    2.0 * p.damping_ratio(i) * model.basis.omega[i] * m_ii * qds[i]
                }
                DampingModel::Viscous => {
                    let coeff = if beam == 0 { p.viscous_damping_1 } else { p.viscous_damping_2 };
                    e.nodes
                        .iter()
                        .map(|nd| {
                            let wd: f64 = nd.w.iter().zip(qds).map(|(a, b)| a * b).sum();
                            coeff * nd.weight * nd.w[i] * wd
                        })
                        .sum()
                }
            };
            force[q0 + i] -= c;
            dissipation += c * qds[i];
        }
    }

    let mut constraint_row = DVector::zeros(d);
    for k in 0..d {
        let ek = unit(d, k);
        constraint_row[k] = derivative(|h| Energies::lateral_speed(q, &shifted(qd, &ek, h)));
    }
    let constraint_rhs = -derivative(|h| Energies::lateral_speed(&shifted(q, qd, h), qd));

    if !(mass.iter().all(|v| v.is_finite()) && force.iter().all(|v| v.is_finite()) && constraint_rhs.is_finite()) {
        return Err(Error::Numerical(format!("finite differences broke down at t = {}", state.t)));
    }

    Ok(AssembledSystem {
        mass,
        force,
        constraint_row,
        constraint_rhs,
        motor,
        input_power: motor_force.dot(qd) + piezo_force.dot(qd),
        dissipation,
    })
}
