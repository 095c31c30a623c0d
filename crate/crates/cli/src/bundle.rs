//! Result bundle and its on-disk forms: a per-sector CSV table and a sidecar
//! JSON with the scalar diagnostics and provenance. CSV bytes depend only on
//! the solution (17 significant digits per value), so identical runs produce
//! identical files; the sidecar carries wall time and is allowed to differ.

use serde::Serialize;
use starreg_core::geometry::{BodyKind, StarBody};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct ResultBundle {
    pub angles: Vec<f64>,
    pub t: Vec<f64>,
    pub rho: Vec<f64>,
    /// Sector widths, needed to draw piecewise-constant arcs.
    pub widths: Vec<f64>,
    pub kind: BodyKind,
    pub objective: f64,
    pub s: Option<f64>,
    pub gap: Option<f64>,
    pub volume: f64,
    pub lipschitz: f64,
    pub iterations: usize,
    pub config_hash: String,
    pub wall_ms: u64,
    /// Ambiguity budget, annotated on rendered figures when present.
    pub eps: Option<f64>,
}

impl ResultBundle {
    pub fn from_body(body: &StarBody) -> Self {
        let grid = body.grid();
        Self {
            angles: grid.angles().to_vec(),
            t: body.gauges().to_vec(),
            rho: body.radial(),
            widths: grid.weights().to_vec(),
            kind: body.kind(),
            objective: f64::NAN,
            s: None,
            gap: None,
            volume: f64::NAN,
            lipschitz: f64::NAN,
            iterations: 0,
            config_hash: String::new(),
            wall_ms: 0,
            eps: None,
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    objective: f64,
    s: Option<f64>,
    gap: Option<f64>,
    volume: f64,
    lipschitz: f64,
    iterations: usize,
    config_hash: &'a str,
    wall_ms: u64,
}

/// `angle_rad,t,rho` at 17 significant digits — enough to round-trip any
/// f64 exactly.
pub fn export_csv(bundle: &ResultBundle, path: &Path) -> std::io::Result<()> {
    let mut out = String::from("angle_rad,t,rho\n");
    for i in 0..bundle.angles.len() {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e}\n",
            bundle.angles[i], bundle.t[i], bundle.rho[i]
        ));
    }
    std::fs::File::create(path)?.write_all(out.as_bytes())
}

pub fn export_sidecar(bundle: &ResultBundle, path: &Path) -> std::io::Result<()> {
    let sidecar = Sidecar {
        objective: bundle.objective,
        s: bundle.s,
        gap: bundle.gap,
        volume: bundle.volume,
        lipschitz: bundle.lipschitz,
        iterations: bundle.iterations,
        config_hash: &bundle.config_hash,
        wall_ms: bundle.wall_ms,
    };
    let mut text = serde_json::to_string_pretty(&sidecar).expect("scalar struct serializes");
    text.push('\n');
    std::fs::File::create(path)?.write_all(text.as_bytes())
}
