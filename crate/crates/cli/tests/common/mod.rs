#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seafield::bivar::{BivariateModel, MarginalSpec};
use seafield::mesh::{build_mesh, Geometry, Mesh, MeshOptions};
use seafield::paramfield::{isotropic_h_for_range, BoundingBox, CrossCorrField, DeformationParams};
use seafield::scenario::ObservationSampler;

pub fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_seafield")
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(exe()).current_dir(dir).args(args).output().expect("binary runs")
}

pub fn run_ok(dir: &Path, args: &[&str]) {
    let o = run(dir, args);
    assert!(o.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
}

pub fn lattice(nx: usize, ny: usize) -> Vec<[f64; 2]> {
    (0..ny).flat_map(|j| (0..nx).map(move |i| [i as f64, j as f64])).collect()
}

pub struct Truth {
    pub mesh: Mesh,
    pub locations: Vec<[f64; 2]>,
    pub x: MarginalSpec,
    pub y: MarginalSpec,
    pub rho: f64,
    pub model: BivariateModel,
}

/// Stationary k = 0 bivariate truth on a planar lattice, with an eastward trend in mean log Hs.
pub fn truth(nx: usize, ny: usize, ranges: [f64; 2], alphas: [f64; 2], rho: f64) -> Truth {
    truth_with_extension(nx, ny, ranges, alphas, rho, 3.0)
}

pub fn truth_with_extension(nx: usize, ny: usize, ranges: [f64; 2], alphas: [f64; 2], rho: f64, ext: f64) -> Truth {
    let locations = lattice(nx, ny);
    let mesh = build_mesh(&locations, Geometry::Planar, &MeshOptions::new(ext)).unwrap();
    let bb = BoundingBox::from_points(&locations).unwrap();
    let m = locations.len();
    let spec = |range: f64, alpha: f64, mean: Vec<f64>, var: f64| MarginalSpec {
        deformation: DeformationParams::isotropic(0, bb, isotropic_h_for_range(range, alpha)),
        alpha,
        nugget: 0.01,
        mean,
        var: vec![var; m],
    };
    let x = spec(ranges[0], alphas[0], locations.iter().map(|l| 2.5f64.ln() + 0.04 * l[0]).collect(), 0.09);
    let y = spec(ranges[1], alphas[1], locations.iter().map(|l| 8f64.ln() + 0.01 * l[0]).collect(), 0.02);
    let model = BivariateModel::build(&mesh, &x, &y, &CrossCorrField::constant(0, bb, rho), 2).unwrap();
    Truth { mesh, locations, x, y, rho, model }
}

impl Truth {
    pub fn sampler(&self) -> ObservationSampler<'_> {
        let a = self.mesh.observation_matrix(&self.locations).unwrap();
        ObservationSampler::new(&self.model, a, self.x.clone(), self.y.clone()).unwrap()
    }
}

/// Raw 6-hourly records; only the on-the-day records come from realisation `day`.
pub fn raw_csv(t: &Truth, days: usize, seed: u64) -> String {
    let s = t.sampler();
    let mut out = String::from("time,lon,lat,hs,t1\n");
    for d in 0..days {
        for k in 0..4u64 {
            let r = if k == 0 { d as u64 } else { 10_000 + 4 * d as u64 + k };
            let (h, p) = s.bivariate(seed, r).unwrap();
            for (j, l) in t.locations.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{},{}", 24 * d + 6 * k as usize, l[0], l[1], h[j], p[j]);
            }
        }
    }
    out
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn pipeline_config(fit_iters: usize, realizations: usize, repeats: usize) -> String {
    format!(
        r#"[data]
geometry = "planar"
period_kind = "T1"

[ingest]
thin_hours = 24

[mesh]
extension_width = 3.0

[fit]
max_iter = {fit_iters}

[simulate]
realizations = 5

[risk]
kind = "fatigue"
model = "bivariate"
waypoints = [[0.5, 2.0], [5.5, 3.0]]
points = 20
speed = 8.0
planar_unit_m = 50000.0
realizations = {realizations}
repeats = {repeats}

[crosscorr]
shift_radius = 1.5
"#
    )
}
