//! Trajectory CSV output.
//!
//! Numbers are written in Rust's shortest round-trip form, so parsing a file
//! back yields the exact doubles that were simulated.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::integrator::Trajectory;

pub fn column_names(n_modes: usize) -> Vec<String> {
    let mut coords: Vec<String> = ["X", "Y", "phi", "theta1", "theta2"].iter().map(|s| s.to_string()).collect();
    for beam in 1..=2 {
        for i in 1..=n_modes {
            coords.push(format!("q{beam}_{i}"));
        }
    }
    let mut cols = vec!["t".to_string()];
    cols.extend(coords.iter().cloned());
    cols.extend(coords.iter().map(|c| format!("d{c}")));
    cols.extend(["w1_tip", "w2_tip", "Fs", "tau1", "tau2", "Va1", "Va2", "v1", "v2"].iter().map(|s| s.to_string()));
    cols
}

pub fn to_csv_string(traj: &Trajectory) -> String {
    let mut out = column_names(traj.n_modes).join(",");
    out.push('\n');
    for k in 0..traj.len() {
        let s = &traj.states[k];
        let m = &traj.motor[k];
        let u = &traj.inputs[k];
        let mut row: Vec<f64> = Vec::with_capacity(2 * s.pos.len() + 10);
        row.push(traj.times[k]);
        row.extend(s.pos.iter());
        row.extend(s.vel.iter());
        row.extend([
            s.tip_deflection(0),
            s.tip_deflection(1),
            traj.constraint_force[k],
            m.tau1,
            m.tau2,
            u.va1,
            u.va2,
            u.v1,
            u.v2,
        ]);
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn export_csv(traj: &Trajectory, path: &Path) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(to_csv_string(traj).as_bytes())?;
    f.flush()
}
