//! Simulation of a two-wheeled robot whose bases each carry a flexible,
//! piezo-actuated cantilever.
//!
//! The beams are discretised with clamped–free Euler–Bernoulli modes
//! ([`modal`]), the equations of motion are assembled by hand in mass-matrix
//! form ([`dynamics`]) and checked against an independent energy-based
//! construction ([`oracle`]), then integrated with RK4 under the no-side-slip
//! constraint ([`integrator`]).

pub mod actuation;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod integrator;
pub mod modal;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod scenario;
pub mod spectral;
pub mod validate;

pub use actuation::{ActuationInput, Chirp, MotorOutput};
pub use dynamics::{assemble, total_energy, AssembledSystem, EnergyBreakdown, Model, SystemState};
pub use error::{Error, Result};
pub use integrator::{constrained_accel, simulate, step, IntegratorConfig, Trajectory};
pub use modal::BeamModalBasis;
pub use oracle::lagrangian_oracle;
pub use params::{RobotParams, SectionProperties};
pub use scenario::{run_scenario, ScenarioKind, ScenarioOutput, ScenarioSpec};
pub use spectral::{detect_peaks, fft_spectrum, Peak, Spectrum};
