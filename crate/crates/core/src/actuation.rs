//! Motors, piezo patches and excitation signals.

use std::f64::consts::PI;

use crate::modal::BeamModalBasis;
use crate::params::{RobotParams, SectionProperties};

/// Voltages applied at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ActuationInput {
    /// Piezo patch voltages, beam 1 and 2.
    pub v1: f64,
    pub v2: f64,
    /// Motor armature voltages, wheel 1 and 2.
    pub va1: f64,
    pub va2: f64,
}

impl ActuationInput {
    pub fn is_finite(&self) -> bool {
        self.v1.is_finite() && self.v2.is_finite() && self.va1.is_finite() && self.va2.is_finite()
    }

    /// Left/right swap.
    pub fn mirrored(&self) -> Self {
        ActuationInput {
            v1: self.v2,
            v2: self.v1,
            va1: self.va2,
            va2: self.va1,
        }
    }

    pub fn piezo(&self, beam: usize) -> f64 {
        if beam == 0 {
            self.v1
        } else {
            self.v2
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MotorOutput {
    pub tau1: f64,
    pub tau2: f64,
    pub ia1: f64,
    pub ia2: f64,
}

/// Armature currents and torques of both motors. No inductance: the current
/// follows the voltage instantly, `R_a i = V_a − K_B v_w / r_w`.
///
/// `wheel_speeds` are the forward contact speeds of wheel 1 and 2, m/s.
pub fn motor_torques(input: &ActuationInput, wheel_speeds: (f64, f64), p: &RobotParams) -> MotorOutput {
    let current = |va: f64, v: f64| (va - p.motor_back_emf * v / p.wheel_radius) / p.motor_resistance;
    let ia1 = current(input.va1, wheel_speeds.0);
    let ia2 = current(input.va2, wheel_speeds.1);
    MotorOutput {
        tau1: p.motor_torque_const * ia1,
        tau2: p.motor_torque_const * ia2,
        ia1,
        ia2,
    }
}

/// Generalised force of patch voltage `v` on modal coordinate `mode`.
///
/// The patch moment is uniform over `[0, L_p]`; projecting its second
/// derivative onto `W_i` and integrating by parts twice leaves only the
/// edge term `W_i'(L_p)` (the root term vanishes because `W_i'(0) = 0`).
pub fn piezo_generalized_force(v: f64, mode: usize, sections: &SectionProperties, basis: &BeamModalBasis) -> f64 {
    -sections.piezo_moment_coeff * v * basis.integrals.patch_slope[mode]
}

/// Proportional wheel drive from the beam tilt; drives forward only.
pub fn feedback_voltage(theta: f64) -> f64 {
    const GAIN: f64 = 1e-2;
    if theta > 0.0 {
        GAIN * theta
    } else {
        0.0
    }
}

/// Linear sine sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chirp {
    pub amplitude: f64,
    pub f_start: f64,
    pub f_end: f64,
    pub duration: f64,
}

impl Default for Chirp {
    fn default() -> Self {
        Chirp {
            amplitude: 1.0,
            f_start: 0.0,
            f_end: 2000.0,
            duration: 10.0,
        }
    }
}

impl Chirp {
    pub fn eval(&self, t: f64) -> f64 {
        chirp_signal(t, self.amplitude, self.f_start, self.f_end, self.duration)
    }

    pub fn instantaneous_frequency(&self, t: f64) -> f64 {
        self.f_start + (self.f_end - self.f_start) * t / self.duration
    }
}

/// `amplitude · sin(2π (f0 t + (f1 − f0) t² / (2T)))` on `[0, T]`, zero outside.
pub fn chirp_signal(t: f64, amplitude: f64, f_start: f64, f_end: f64, duration: f64) -> f64 {
    if !(0.0..=duration).contains(&t) {
        return 0.0;
    }
    let cycles = f_start * t + (f_end - f_start) * t * t / (2.0 * duration);
    // Reduce to the fractional cycle before scaling by 2π so that long sweeps
    // keep their phase accuracy.
    let frac = cycles - cycles.round();
    amplitude * (2.0 * PI * frac).sin()
}
