//! Physical parameters of the robot and the sectional properties derived
//! from them.
//!
//! Beam and piezo-layer values default to the published prototype table.
//! The wheel, base and motor constants are not part of that table; their
//! defaults are hobby-scale guesses and are marked "not from the prototype
//! table" on each field.

use crate::error::{validation, Result};

/// Largest number of assumed modes per beam.
pub const MAX_MODES: usize = 12;

// Geometry used only to turn the default wheel/base masses into inertias.
const WHEEL_WIDTH: f64 = 0.02;
const BASE_DX: f64 = 0.10;
const BASE_DY: f64 = 0.06;
const BASE_DZ: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingModel {
    /// `2 ζ_k ω_k m_kk` on each modal coordinate.
    Modal,
    /// Uniform viscous coefficient per unit length on each beam.
    Viscous,
}

impl DampingModel {
    pub fn as_str(self) -> &'static str {
        match self {
            DampingModel::Modal => "modal",
            DampingModel::Viscous => "viscous",
        }
    }
}

/// All physical constants, SI units throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotParams {
    pub beam_length: f64,
    pub beam_thickness: f64,
    pub beam_width: f64,
    pub beam_modulus: f64,
    pub beam_density: f64,
    /// Stored for completeness; the Euler–Bernoulli model never reads it.
    pub beam_shear_modulus: f64,

    pub piezo_length: f64,
    pub piezo_thickness: f64,
    pub piezo_width: f64,
    pub piezo_modulus: f64,
    pub piezo_density: f64,
    /// Stored for completeness; unused.
    pub piezo_shear_modulus: f64,
    /// Strain per unit field, m/V. Not from the prototype table.
    pub piezo_d31: f64,
    /// Distance from the composite neutral axis to the piezo mid-plane.
    /// `None` means "compute from the layer stack".
    pub neutral_axis_offset: Option<f64>,

    pub damping_ratio_1: f64,
    /// Used for the second and all higher modes.
    pub damping_ratio_2: f64,
    pub damping_model: DampingModel,
    /// N·s/m², only read with [`DampingModel::Viscous`].
    pub viscous_damping_1: f64,
    pub viscous_damping_2: f64,

    /// Lateral distance from the robot centre to each beam/base. The wheels
    /// sit at twice this distance. Not from the prototype table.
    pub half_track: f64,
    pub wheel_radius: f64,
    pub wheel_mass: f64,
    pub base_mass: f64,
    pub wheel_inertia_y: f64,
    pub wheel_inertia_z: f64,
    pub base_inertia_y: f64,
    pub base_inertia_z: f64,

    pub motor_resistance: f64,
    /// Back-emf constant K_B, V·s (multiplies wheel angular speed).
    pub motor_back_emf: f64,
    pub motor_torque_const: f64,

    pub gravity: f64,
    pub gravity_enabled: bool,
    pub n_modes: usize,
}

impl Default for RobotParams {
    fn default() -> Self {
        let wheel_radius = 0.05;
        let wheel_mass = 0.1;
        let base_mass = 0.3;
        let mut p = RobotParams {
            beam_length: 271.46e-3,
            beam_thickness: 0.5e-3,
            beam_width: 25.65e-3,
            beam_modulus: 70e9,
            beam_density: 2700.0,
            beam_shear_modulus: 30e9,
            piezo_length: 38e-3,
            piezo_thickness: 0.3e-3,
            piezo_width: 23e-3,
            piezo_modulus: 30.33e9,
            piezo_density: 5440.0,
            piezo_shear_modulus: 5.515e9,
            piezo_d31: 190e-12,
            neutral_axis_offset: None,
            // The table lists 0.0058 % and 0.015 %.
            damping_ratio_1: 0.0058e-2,
            damping_ratio_2: 0.015e-2,
            damping_model: DampingModel::Modal,
            viscous_damping_1: 0.0,
            viscous_damping_2: 0.0,
            half_track: 0.15,
            wheel_radius,
            wheel_mass,
            base_mass,
            wheel_inertia_y: 0.0,
            wheel_inertia_z: 0.0,
            base_inertia_y: 0.0,
            base_inertia_z: 0.0,
            motor_resistance: 1.0,
            motor_back_emf: 0.01,
            motor_torque_const: 0.01,
            gravity: 9.81,
            gravity_enabled: true,
            n_modes: 2,
        };
        p.fill_default_inertias(true, true, true, true);
        p
    }
}

impl RobotParams {
    /// Solid-disc wheel and box-shaped base inertias from the current masses.
    pub(crate) fn fill_default_inertias(&mut self, wy: bool, wz: bool, by: bool, bz: bool) {
        let r = self.wheel_radius;
        if wy {
            self.wheel_inertia_y = 0.5 * self.wheel_mass * r * r;
        }
        if wz {
            self.wheel_inertia_z = self.wheel_mass * (3.0 * r * r + WHEEL_WIDTH * WHEEL_WIDTH) / 12.0;
        }
        if by {
            self.base_inertia_y = self.base_mass * (BASE_DX * BASE_DX + BASE_DZ * BASE_DZ) / 12.0;
        }
        if bz {
            self.base_inertia_z = self.base_mass * (BASE_DX * BASE_DX + BASE_DY * BASE_DY) / 12.0;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beam_length", self.beam_length),
            ("beam_thickness", self.beam_thickness),
            ("beam_width", self.beam_width),
            ("beam_modulus", self.beam_modulus),
            ("beam_density", self.beam_density),
            ("piezo_length", self.piezo_length),
            ("piezo_thickness", self.piezo_thickness),
            ("piezo_width", self.piezo_width),
            ("piezo_modulus", self.piezo_modulus),
            ("piezo_density", self.piezo_density),
            ("half_track", self.half_track),
            ("wheel_radius", self.wheel_radius),
            ("wheel_mass", self.wheel_mass),
            ("base_mass", self.base_mass),
            ("wheel_inertia_y", self.wheel_inertia_y),
            ("wheel_inertia_z", self.wheel_inertia_z),
            ("base_inertia_y", self.base_inertia_y),
            ("base_inertia_z", self.base_inertia_z),
            ("motor_resistance", self.motor_resistance),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(validation(field, format!("must be finite and > 0, got {v}")));
            }
        }
        let finite = [
            ("beam_shear_modulus", self.beam_shear_modulus),
            ("piezo_shear_modulus", self.piezo_shear_modulus),
            ("piezo_d31", self.piezo_d31),
            ("motor_back_emf", self.motor_back_emf),
            ("motor_torque_const", self.motor_torque_const),
            ("gravity", self.gravity),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(validation(field, "must be finite"));
            }
        }
        if self.piezo_length >= self.beam_length {
            return Err(validation(
                "piezo_length",
                format!(
                    "piezo patch ({} m) must be shorter than the beam ({} m)",
                    self.piezo_length, self.beam_length
                ),
            ));
        }
        for (field, z) in [
            ("damping_ratio_1", self.damping_ratio_1),
            ("damping_ratio_2", self.damping_ratio_2),
        ] {
            if !(0.0..1.0).contains(&z) {
                return Err(validation(field, format!("must lie in [0, 1), got {z}")));
            }
        }
        for (field, c) in [
            ("viscous_damping_1", self.viscous_damping_1),
            ("viscous_damping_2", self.viscous_damping_2),
        ] {
            if !(c.is_finite() && c >= 0.0) {
                return Err(validation(field, "must be finite and >= 0"));
            }
        }
        if let Some(z) = self.neutral_axis_offset {
            if !z.is_finite() {
                return Err(validation("neutral_axis_offset", "must be finite"));
            }
        }
        if self.n_modes == 0 || self.n_modes > MAX_MODES {
            return Err(validation(
                "n_modes",
                format!("must lie in 1..={MAX_MODES}, got {}", self.n_modes),
            ));
        }
        Ok(())
    }

    /// Offset of the piezo mid-plane from the modulus-weighted neutral axis of
    /// the bonded two-layer section, unless overridden.
    pub fn neutral_axis_offset(&self) -> f64 {
        if let Some(z) = self.neutral_axis_offset {
            return z;
        }
        let (tb, tp) = (self.beam_thickness, self.piezo_thickness);
        let eab = self.beam_modulus * self.beam_width * tb;
        let eap = self.piezo_modulus * self.piezo_width * tp;
        let total = eab + eap;
        let centroid = if total > 0.0 {
            (eab * 0.5 * tb + eap * (tb + 0.5 * tp)) / total
        } else {
            0.5 * tb
        };
        tb + 0.5 * tp - centroid
    }

    pub fn effective_gravity(&self) -> f64 {
        if self.gravity_enabled {
            self.gravity
        } else {
            0.0
        }
    }

    /// Damping ratio applied to mode `k` (zero-based).
    pub fn damping_ratio(&self, k: usize) -> f64 {
        if k == 0 {
            self.damping_ratio_1
        } else {
            self.damping_ratio_2
        }
    }
}

/// Piecewise section properties along a beam. "Inner" is the patch-covered
/// segment `[0, L_p]`, "outer" the bare remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionProperties {
    pub rho_a_inner: f64,
    pub rho_a_outer: f64,
    pub ei_inner: f64,
    pub ei_outer: f64,
    /// Moment per volt produced by the patch, N·m/V.
    pub piezo_moment_coeff: f64,
    /// Bare-beam second moment of area `b t³ / 12`.
    pub beam_area_moment: f64,
    /// Patch second moment about the composite neutral axis.
    pub piezo_area_moment: f64,
}

impl SectionProperties {
    pub fn rho_a(&self, x: f64, piezo_length: f64) -> f64 {
        if x <= piezo_length {
            self.rho_a_inner
        } else {
            self.rho_a_outer
        }
    }
}

pub fn derive_sections(p: &RobotParams) -> SectionProperties {
    let beam_area = p.beam_width * p.beam_thickness;
    let piezo_area = p.piezo_width * p.piezo_thickness;
    let beam_area_moment = p.beam_width * p.beam_thickness.powi(3) / 12.0;
    let zp = p.neutral_axis_offset();
    let piezo_area_moment = p.piezo_width * p.piezo_thickness.powi(3) / 12.0 + piezo_area * zp * zp;

    let ep_ip = p.piezo_modulus * piezo_area_moment;
    // Free piezo strain d31·v/t_p acting at lever arm z_p, expressed through
    // E_p I_p: M = E_p I_p d31 v / (t_p z_p).
    let piezo_moment_coeff = if ep_ip > 0.0 && zp != 0.0 && p.piezo_thickness > 0.0 {
        ep_ip * p.piezo_d31 / (p.piezo_thickness * zp)
    } else {
        0.0
    };

    SectionProperties {
        rho_a_inner: p.beam_density * beam_area + p.piezo_density * piezo_area,
        rho_a_outer: p.beam_density * beam_area,
        ei_inner: p.beam_modulus * beam_area_moment + ep_ip,
        ei_outer: p.beam_modulus * beam_area_moment,
        piezo_moment_coeff,
        beam_area_moment,
        piezo_area_moment,
    }
}
