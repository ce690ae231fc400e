//! The experiment set: frequency sweep, straight run, turn, free vibration.

use std::fmt::Write as _;

use crate::actuation::{feedback_voltage, ActuationInput, Chirp};
use crate::config::{params_to_config, ConfigFile};
use crate::dynamics::{modal_index, theta_index, Model, SystemState};
use crate::error::{validation, Error, Result};
use crate::integrator::{simulate, IntegratorConfig, Trajectory};
use crate::params::RobotParams;
use crate::spectral::{detect_peaks, fft_spectrum, Peak, Spectrum, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Sweep,
    StepForward,
    Turn,
    FreeVibration,
    Custom,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Sweep,
        ScenarioKind::StepForward,
        ScenarioKind::Turn,
        ScenarioKind::FreeVibration,
        ScenarioKind::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::Sweep => "sweep",
            ScenarioKind::StepForward => "step_forward",
            ScenarioKind::Turn => "turn",
            ScenarioKind::FreeVibration => "free_vibration",
            ScenarioKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Input(format!("unknown scenario `{s}`")))
    }
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub duration: f64,
    pub dt: f64,
    pub record_stride: usize,
    pub stabilization_gain: f64,
    pub clamp_base: bool,
    /// Drive the motors from the beam tilt.
    pub feedback: bool,
    /// Step heights on the two patches, V (sweep: unused).
    pub piezo_1: f64,
    pub piezo_2: f64,
    /// Constant armature voltages added to any feedback, V.
    pub motor_1: f64,
    pub motor_2: f64,
    pub chirp: Chirp,
    /// Initial tip deflection of beam 1 in its first mode, m.
    pub initial_tip: f64,
    pub window: String,
    pub min_prominence: f64,
}

const SCENARIO_KEYS: &[&str] = &[
    "scenario",
    "duration_s",
    "dt_s",
    "record_stride",
    "stabilization_gain",
    "clamp_base",
    "feedback",
    "piezo_1_v",
    "piezo_2_v",
    "motor_1_v",
    "motor_2_v",
    "chirp_amplitude_v",
    "chirp_f_start_hz",
    "chirp_f_end_hz",
    "initial_tip_m",
    "window",
    "min_prominence",
];

pub fn is_scenario_key(key: &str) -> bool {
    SCENARIO_KEYS.contains(&key)
}

impl ScenarioSpec {
    pub fn defaults(kind: ScenarioKind) -> Self {
        let base = ScenarioSpec {
            kind,
            duration: 0.5,
            dt: 1e-5,
            record_stride: 10,
            stabilization_gain: 0.0,
            clamp_base: false,
            feedback: false,
            piezo_1: 0.0,
            piezo_2: 0.0,
            motor_1: 0.0,
            motor_2: 0.0,
            chirp: Chirp::default(),
            initial_tip: 0.0,
            window: Window::Hann.name().to_string(),
            min_prominence: 0.05,
        };
        match kind {
            ScenarioKind::Sweep => ScenarioSpec {
                duration: 10.0,
                // 20 kHz records
                record_stride: 5,
                clamp_base: true,
                ..base
            },
            // the upright robot tips past |θ| = 0.5 rad shortly after 2.1 s
            ScenarioKind::StepForward => ScenarioSpec {
                duration: 2.0,
                feedback: true,
                piezo_1: 1.0,
                piezo_2: 1.0,
                ..base
            },
            ScenarioKind::Turn => ScenarioSpec {
                duration: 2.0,
                feedback: true,
                piezo_1: 1.0,
                piezo_2: 0.9,
                ..base
            },
            ScenarioKind::FreeVibration => ScenarioSpec {
                initial_tip: 1e-3,
                ..base
            },
            ScenarioKind::Custom => base,
        }
    }

    /// Defaults for the kind named in `cfg` (or `kind`, which wins), then
    /// every scenario key present in `cfg`.
    pub fn from_config(cfg: &ConfigFile, kind: Option<ScenarioKind>) -> Result<Self> {
        let kind = match (kind, cfg.get("scenario")) {
            (Some(k), _) => k,
            (None, Some(e)) => ScenarioKind::parse(&e.value).map_err(|err| Error::Config {
                line: e.line,
                message: err.to_string(),
            })?,
            (None, None) => return Err(Error::Input("no scenario given".into())),
        };
        let mut s = ScenarioSpec::defaults(kind);
        let set = |v: Option<f64>, target: &mut f64| {
            if let Some(v) = v {
                *target = v;
            }
        };
        if let Some(d) = cfg.f64("duration_s")? {
            s.set_duration(d);
        }
        set(cfg.f64("dt_s")?, &mut s.dt);
        set(cfg.f64("stabilization_gain")?, &mut s.stabilization_gain);
        set(cfg.f64("piezo_1_v")?, &mut s.piezo_1);
        set(cfg.f64("piezo_2_v")?, &mut s.piezo_2);
        set(cfg.f64("motor_1_v")?, &mut s.motor_1);
        set(cfg.f64("motor_2_v")?, &mut s.motor_2);
        set(cfg.f64("chirp_amplitude_v")?, &mut s.chirp.amplitude);
        set(cfg.f64("chirp_f_start_hz")?, &mut s.chirp.f_start);
        set(cfg.f64("chirp_f_end_hz")?, &mut s.chirp.f_end);
        set(cfg.f64("initial_tip_m")?, &mut s.initial_tip);
        set(cfg.f64("min_prominence")?, &mut s.min_prominence);
        if let Some(n) = cfg.usize("record_stride")? {
            s.record_stride = n;
        }
        if let Some(b) = cfg.bool("clamp_base")? {
            s.clamp_base = b;
        }
        if let Some(b) = cfg.bool("feedback")? {
            s.feedback = b;
        }
        if let Some(w) = cfg.str("window") {
            s.window = w.to_string();
        }
        s.validate()?;
        Ok(s)
    }

    /// Sets the run length; the sweep always spans the whole run.
    pub fn set_duration(&mut self, duration: f64) {
        self.duration = duration;
        self.chirp.duration = duration;
    }

    pub fn to_config(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "scenario = {}", self.kind);
        for (key, v) in [
            ("duration_s", self.duration),
            ("dt_s", self.dt),
            ("stabilization_gain", self.stabilization_gain),
            ("piezo_1_v", self.piezo_1),
            ("piezo_2_v", self.piezo_2),
            ("motor_1_v", self.motor_1),
            ("motor_2_v", self.motor_2),
            ("chirp_amplitude_v", self.chirp.amplitude),
            ("chirp_f_start_hz", self.chirp.f_start),
            ("chirp_f_end_hz", self.chirp.f_end),
            ("initial_tip_m", self.initial_tip),
            ("min_prominence", self.min_prominence),
        ] {
            let _ = writeln!(out, "{key} = {v:?}");
        }
        let _ = writeln!(out, "record_stride = {}", self.record_stride);
        let _ = writeln!(out, "clamp_base = {}", self.clamp_base);
        let _ = writeln!(out, "feedback = {}", self.feedback);
        let _ = writeln!(out, "window = {}", self.window);
        out
    }

    pub fn validate(&self) -> Result<()> {
        self.integrator_config().validate()?;
        Window::parse(&self.window)?;
        let finite = [
            self.piezo_1,
            self.piezo_2,
            self.motor_1,
            self.motor_2,
            self.chirp.amplitude,
            self.chirp.f_start,
            self.chirp.f_end,
            self.initial_tip,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(validation("scenario", "inputs must be finite"));
        }
        if !(0.0..=1.0).contains(&self.min_prominence) {
            return Err(validation("min_prominence", "must lie in [0, 1]"));
        }
        if self.kind == ScenarioKind::Sweep && self.chirp.f_start < 0.0 {
            return Err(validation("chirp_f_start_hz", "must be non-negative"));
        }
        Ok(())
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt,
            t_end: self.duration,
            stabilization_gain: self.stabilization_gain,
            record_stride: self.record_stride,
            clamp_base: self.clamp_base,
            ..IntegratorConfig::default()
        }
    }

    /// Voltages at time `t` in state `state`.
    pub fn inputs(&self, t: f64, state: &SystemState) -> ActuationInput {
        let (v1, v2) = match self.kind {
            ScenarioKind::Sweep => {
                let v = self.chirp.eval(t);
                (v, v)
            }
            // steps switch on at t = 0
            _ => (self.piezo_1, self.piezo_2),
        };
        let (mut va1, mut va2) = (self.motor_1, self.motor_2);
        if self.feedback {
            va1 += feedback_voltage(state.pos[theta_index(0)]);
            va2 += feedback_voltage(state.pos[theta_index(1)]);
        }
        ActuationInput { v1, v2, va1, va2 }
    }

    pub fn initial_state(&self, n_modes: usize) -> SystemState {
        let mut s = SystemState::zeros(n_modes);
        s.pos[modal_index(n_modes, 0, 0)] = self.initial_tip;
        s
    }

    /// Parameter snapshot followed by these settings; loading it back
    /// reproduces the run.
    pub fn snapshot(&self, p: &RobotParams) -> String {
        format!("{}{}", params_to_config(p), self.to_config())
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub trajectory: Trajectory,
    /// Spectrum of the beam-1 tip deflection (sweep only).
    pub spectrum: Option<Spectrum>,
    pub peaks: Vec<Peak>,
}

pub fn run_scenario(spec: &ScenarioSpec, p: &RobotParams) -> Result<ScenarioOutput> {
    spec.validate()?;
    let model = Model::new(p.clone())?;
    run_scenario_with(spec, &model)
}

pub fn run_scenario_with(spec: &ScenarioSpec, model: &Model) -> Result<ScenarioOutput> {
    let cfg = spec.integrator_config();
    let initial = spec.initial_state(model.n_modes());
    let schedule = |t: f64, s: &SystemState| spec.inputs(t, s);
    let trajectory = simulate(&initial, &schedule, &cfg, model)?;
    let (spectrum, peaks) = if spec.kind == ScenarioKind::Sweep && trajectory.len() >= crate::spectral::MIN_SAMPLES {
        let tip = trajectory.tip_deflection(0);
        let rate = 1.0 / (cfg.dt * cfg.record_stride as f64);
        let s = fft_spectrum(&tip, rate, &spec.window)?;
        let peaks = detect_peaks(&s, spec.min_prominence)?;
        (Some(s), peaks)
    } else {
        (None, Vec::new())
    };
    Ok(ScenarioOutput {
        trajectory,
        spectrum,
        peaks,
    })
}
