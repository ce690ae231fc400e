//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys carry their unit (`beam_length_mm`, `beam_modulus_gpa`). Every
//! physical quantity has a canonical SI key which is what [`params_to_config`]
//! writes, so a written file reloads bit-for-bit. The prototype-table units
//! (mm, GPa, percent) are accepted as alternates.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::params::{DampingModel, RobotParams};

#[derive(Debug, Clone)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    entries: Vec<Entry>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<Entry> = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(config_err(line, format!("expected `key = value`, got `{body}`")));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(config_err(line, format!("invalid key `{key}`")));
            }
            if value.is_empty() {
                return Err(config_err(line, format!("missing value for `{key}`")));
            }
            if !seen.insert(key.to_string()) {
                return Err(config_err(line, format!("duplicate key `{key}`")));
            }
            entries.push(Entry {
                key: key.to_string(),
                value: value.to_string(),
                line,
            });
        }
        Ok(ConfigFile { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|e| {
                e.value
                    .parse::<f64>()
                    .map_err(|_| config_err(e.line, format!("`{}` is not a number: `{}`", e.key, e.value)))
            })
            .transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|e| {
                e.value.parse::<usize>().map_err(|_| {
                    config_err(e.line, format!("`{}` is not a non-negative integer: `{}`", e.key, e.value))
                })
            })
            .transpose()
    }

    pub fn bool(&self, key: &str) -> Result<Option<bool>> {
        self.get(key)
            .map(|e| match e.value.as_str() {
                "true" | "on" | "yes" | "1" => Ok(true),
                "false" | "off" | "no" | "0" => Ok(false),
                other => Err(config_err(e.line, format!("`{}` is not a boolean: `{other}`", e.key))),
            })
            .transpose()
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.get(key).map(|e| e.value.as_str())
    }

    /// Fails on the first key not accepted by `known`.
    pub fn ensure_known(&self, known: impl Fn(&str) -> bool) -> Result<()> {
        match self.entries.iter().find(|e| !known(&e.key)) {
            Some(e) => Err(config_err(e.line, format!("unknown key `{}`", e.key))),
            None => Ok(()),
        }
    }

    /// Reads one quantity that may be spelled with any of `keys` (each with
    /// its factor to SI). At most one spelling may appear.
    fn scaled(&self, keys: &[(&str, f64)]) -> Result<Option<f64>> {
        let mut found: Option<(f64, &Entry)> = None;
        for &(key, scale) in keys {
            if let Some(v) = self.f64(key)? {
                let entry = self.get(key).expect("present");
                if let Some((_, first)) = found {
                    return Err(config_err(
                        entry.line,
                        format!("`{}` duplicates `{}` (line {})", entry.key, first.key, first.line),
                    ));
                }
                found = Some((v * scale, entry));
            }
        }
        Ok(found.map(|(v, _)| v))
    }
}

struct Quantity {
    /// Field name reported by validation errors.
    field: &'static str,
    /// Canonical SI key first, then alternates.
    keys: &'static [(&'static str, f64)],
    get: fn(&RobotParams) -> f64,
    set: fn(&mut RobotParams, f64),
}

macro_rules! quantity {
    ($field:ident, [$(($key:literal, $scale:expr)),+ $(,)?]) => {
        Quantity {
            field: stringify!($field),
            keys: &[$(($key, $scale)),+],
            get: |p| p.$field,
            set: |p, v| p.$field = v,
        }
    };
}

const QUANTITIES: &[Quantity] = &[
    quantity!(beam_length, [("beam_length_m", 1.0), ("beam_length_mm", 1e-3)]),
    quantity!(beam_thickness, [("beam_thickness_m", 1.0), ("beam_thickness_mm", 1e-3)]),
    quantity!(beam_width, [("beam_width_m", 1.0), ("beam_width_mm", 1e-3)]),
    quantity!(beam_modulus, [("beam_modulus_pa", 1.0), ("beam_modulus_gpa", 1e9)]),
    quantity!(beam_density, [("beam_density_kg_m3", 1.0)]),
    quantity!(beam_shear_modulus, [("beam_shear_modulus_pa", 1.0), ("beam_shear_modulus_gpa", 1e9)]),
    quantity!(piezo_length, [("piezo_length_m", 1.0), ("piezo_length_mm", 1e-3)]),
    quantity!(piezo_thickness, [("piezo_thickness_m", 1.0), ("piezo_thickness_mm", 1e-3)]),
    quantity!(piezo_width, [("piezo_width_m", 1.0), ("piezo_width_mm", 1e-3)]),
    quantity!(piezo_modulus, [("piezo_modulus_pa", 1.0), ("piezo_modulus_gpa", 1e9)]),
    quantity!(piezo_density, [("piezo_density_kg_m3", 1.0)]),
    quantity!(piezo_shear_modulus, [("piezo_shear_modulus_pa", 1.0), ("piezo_shear_modulus_gpa", 1e9)]),
    quantity!(piezo_d31, [("piezo_d31_m_per_v", 1.0), ("piezo_d31_pm_per_v", 1e-12)]),
    quantity!(damping_ratio_1, [("damping_ratio_1", 1.0), ("damping_ratio_1_pct", 1e-2)]),
    quantity!(damping_ratio_2, [("damping_ratio_2", 1.0), ("damping_ratio_2_pct", 1e-2)]),
    quantity!(viscous_damping_1, [("viscous_damping_1_ns_m2", 1.0)]),
    quantity!(viscous_damping_2, [("viscous_damping_2_ns_m2", 1.0)]),
    quantity!(half_track, [("half_track_m", 1.0), ("half_track_mm", 1e-3)]),
    quantity!(wheel_radius, [("wheel_radius_m", 1.0), ("wheel_radius_mm", 1e-3)]),
    quantity!(wheel_mass, [("wheel_mass_kg", 1.0)]),
    quantity!(base_mass, [("base_mass_kg", 1.0)]),
    quantity!(wheel_inertia_y, [("wheel_inertia_y_kg_m2", 1.0)]),
    quantity!(wheel_inertia_z, [("wheel_inertia_z_kg_m2", 1.0)]),
    quantity!(base_inertia_y, [("base_inertia_y_kg_m2", 1.0)]),
    quantity!(base_inertia_z, [("base_inertia_z_kg_m2", 1.0)]),
    quantity!(motor_resistance, [("motor_resistance_ohm", 1.0)]),
    quantity!(motor_back_emf, [("motor_back_emf_v_s", 1.0)]),
    quantity!(motor_torque_const, [("motor_torque_const_nm_per_a", 1.0)]),
    quantity!(gravity, [("gravity_m_s2", 1.0)]),
];

const NEUTRAL_AXIS_KEYS: &[(&str, f64)] = &[("neutral_axis_offset_m", 1.0), ("neutral_axis_offset_mm", 1e-3)];

/// Whether `key` is one of the physical-parameter keys.
pub fn is_param_key(key: &str) -> bool {
    matches!(key, "gravity_enabled" | "n_modes" | "damping_model")
        || NEUTRAL_AXIS_KEYS.iter().any(|(k, _)| *k == key)
        || QUANTITIES.iter().any(|q| q.keys.iter().any(|(k, _)| *k == key))
}

/// Builds parameters from a parsed file, ignoring keys that are not
/// physical parameters. Absent keys keep their defaults; inertias not given
/// explicitly are recomputed from the (possibly overridden) masses.
pub fn params_from_config(cfg: &ConfigFile) -> Result<RobotParams> {
    let p = params_from_config_unchecked(cfg)?;
    p.validate()?;
    Ok(p)
}

/// As [`params_from_config`] without the physical range checks, for feeding
/// deliberately faulty parameters to the validation suite.
pub fn params_from_config_unchecked(cfg: &ConfigFile) -> Result<RobotParams> {
    let mut p = RobotParams::default();
    let mut given = HashSet::new();
    for q in QUANTITIES {
        if let Some(v) = cfg.scaled(q.keys)? {
            (q.set)(&mut p, v);
            given.insert(q.field);
        }
    }
    p.neutral_axis_offset = cfg.scaled(NEUTRAL_AXIS_KEYS)?;
    if let Some(b) = cfg.bool("gravity_enabled")? {
        p.gravity_enabled = b;
    }
    if let Some(n) = cfg.usize("n_modes")? {
        p.n_modes = n;
    }
    if let Some(e) = cfg.get("damping_model") {
        p.damping_model = match e.value.as_str() {
            "modal" => DampingModel::Modal,
            "viscous" => DampingModel::Viscous,
            other => return Err(config_err(e.line, format!("unknown damping_model `{other}`"))),
        };
    }
    p.fill_default_inertias(
        !given.contains("wheel_inertia_y"),
        !given.contains("wheel_inertia_z"),
        !given.contains("base_inertia_y"),
        !given.contains("base_inertia_z"),
    );
    Ok(p)
}

/// Loads and validates a parameter file. Keys belonging to scenario settings
/// are tolerated; anything else is rejected.
pub fn load_config(path: &Path) -> Result<RobotParams> {
    let cfg = ConfigFile::read(path)?;
    cfg.ensure_known(|k| is_param_key(k) || crate::scenario::is_scenario_key(k))?;
    params_from_config(&cfg)
}

/// Serialises every parameter under its SI key using shortest round-trip
/// decimal formatting.
pub fn params_to_config(p: &RobotParams) -> String {
    let mut out = String::new();
    for q in QUANTITIES {
        let _ = writeln!(out, "{} = {:?}", q.keys[0].0, (q.get)(p));
    }
    if let Some(z) = p.neutral_axis_offset {
        let _ = writeln!(out, "{} = {:?}", NEUTRAL_AXIS_KEYS[0].0, z);
    }
    let _ = writeln!(out, "damping_model = {}", p.damping_model.as_str());
    let _ = writeln!(out, "gravity_enabled = {}", p.gravity_enabled);
    let _ = writeln!(out, "n_modes = {}", p.n_modes);
    out
}
