use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use seafield::bivar::{BivariateModel, ModelFile};
use seafield::estimation::{fit_bivariate, sample_crosscorr_stats, FitOptions, FitReport, OptimOptions};
use seafield::mesh::{build_mesh, Geometry, Mesh, MeshOptions};
use seafield::paramfield::BoundingBox;
use seafield::risk::{distance, gradient_directions, monte_carlo_cdf, Direction, Route, WaveDirectionField};
use seafield::scenario::{ObservationSampler, RouteSampler, RouteScenario};
use seafield::seastate::MomentTable;
use seafield::{Error, Result};

use crate::config::{Config, Traversal};
use crate::output::{self, Header};
use crate::series::{ingest, GriddedSeries};

const EARTH_RADIUS_M: f64 = 6.371e6;

pub fn cmd_ingest(cfg: &Config, input: &Path, out: &Path, header: &Header) -> Result<GriddedSeries> {
    let f = std::fs::File::open(input).map_err(|e| Error::Data(format!("{}: {e}", input.display())))?;
    let s = ingest(f, &cfg.ingest)?;
    output::write(out, &s.to_csv(header))?;
    Ok(s)
}

pub fn cmd_split(input: &Path, train: &Path, test: &Path, header: &Header) -> Result<()> {
    let s = GriddedSeries::read(input)?;
    let (a, b) = s.split()?;
    output::write(train, &a.to_csv(header))?;
    output::write(test, &b.to_csv(header))
}

fn fit_options(cfg: &Config) -> FitOptions {
    let f = &cfg.fit;
    FitOptions {
        order: f.order,
        rho_order: f.rho_order,
        rational_order: f.rational_order,
        optim: OptimOptions { max_iter: f.max_iter, grad_tol: f.grad_tol, ..OptimOptions::default() },
        alpha_init: f.alpha_init,
        alpha_fixed: f.alpha_fixed,
        nugget_init: f.nugget_init,
        rho_method: f.rho_method,
        shift_radius: f.shift_radius,
        ..FitOptions::default()
    }
}

fn report_rows(s: &mut String, component: &str, r: &FitReport) {
    for (n, v) in r.param_names.iter().zip(&r.params) {
        let _ = writeln!(s, "{component},{n},{v}");
    }
    let _ = writeln!(s, "{component},neg_loglik,{}", r.neg_loglik);
    let _ = writeln!(s, "{component},n_obs,{}", r.n_obs);
    let _ = writeln!(s, "{component},iterations,{}", r.iterations);
    let _ = writeln!(s, "{component},converged,{}", r.converged as u8);
    let _ = writeln!(s, "{component},grad_norm,{}", r.grad_norm);
}

/// Fits the bivariate model and writes `mesh.txt`, `model.txt` and `fit_report.csv`.
pub fn cmd_fit(cfg: &Config, input: &Path, out_dir: &Path, header: &Header) -> Result<ModelFile> {
    let series = GriddedSeries::read(input)?;
    let data = series.to_dataset()?;
    let usable = data.usable_locations();
    if usable.len() < 3 {
        return Err(Error::Data(format!("only {} locations have enough observations", usable.len())));
    }
    let data = data.select_locations(&usable);
    let geometry: Geometry = cfg.data.geometry.into();
    let mesh = build_mesh(&data.locations, geometry, &MeshOptions { extension_width: cfg.mesh.extension_width, extension_spacing: cfg.mesh.extension_spacing })?;
    let bbox = BoundingBox::from_points(&data.locations)?;
    let fit = fit_bivariate(&mesh, &data, bbox, &fit_options(cfg))?;
    let model = ModelFile { mesh_path: "mesh.txt".into(), order: cfg.fit.rational_order, x: fit.x, y: fit.y, rho: fit.rho, locations: data.locations.clone() };
    output::write(&out_dir.join("mesh.txt"), &(header.render("mesh") + &mesh.to_text()))?;
    output::write(&out_dir.join("model.txt"), &(header.render("model") + &model.to_text()))?;
    let mut rep = header.render("fit_report");
    rep.push_str("component,name,value\n");
    report_rows(&mut rep, "x", &fit.x_report);
    report_rows(&mut rep, "y", &fit.y_report);
    report_rows(&mut rep, "rho", &fit.rho_report);
    output::write(&out_dir.join("fit_report.csv"), &rep)?;
    Ok(model)
}

pub struct LoadedModel {
    pub file: ModelFile,
    pub mesh: Mesh,
    pub model: BivariateModel,
}

pub fn load_model(path: &Path) -> Result<LoadedModel> {
    let file = ModelFile::from_text(&output::read(path)?)?;
    let mesh_path: PathBuf = path.parent().unwrap_or(Path::new(".")).join(&file.mesh_path);
    let mesh = Mesh::from_text(&output::read(&mesh_path)?)?;
    let model = BivariateModel::build(&mesh, &file.x, &file.y, &file.rho, file.order)?;
    Ok(LoadedModel { file, mesh, model })
}

/// Lattice series from per-location rows; lattice cells without a location are missing.
pub fn series_from_points(locations: &[[f64; 2]], rows: Vec<(Vec<f64>, Vec<f64>)>) -> GriddedSeries {
    let mut lons: Vec<f64> = locations.iter().map(|l| l[0]).collect();
    let mut lats: Vec<f64> = locations.iter().map(|l| l[1]).collect();
    for v in [&mut lons, &mut lats] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let ix = |v: &[f64], x: f64| v.partition_point(|a| *a < x);
    let cells: Vec<usize> = locations.iter().map(|l| ix(&lats, l[1]) * lons.len() + ix(&lons, l[0])).collect();
    let n = lons.len() * lats.len();
    let times = (0..rows.len()).map(|r| 24.0 * r as f64).collect();
    let values = rows
        .into_iter()
        .map(|(h, t)| {
            let mut row = vec![None; n];
            for (j, &c) in cells.iter().enumerate() {
                row[c] = Some((h[j], t[j]));
            }
            row
        })
        .collect();
    GriddedSeries { lons, lats, times, values }
}

/// Model-generated observations at the fitted locations, one day per realisation.
pub fn cmd_simulate(cfg: &Config, model_path: &Path, out: &Path, seed: u64, header: &Header) -> Result<GriddedSeries> {
    let m = load_model(model_path)?;
    let a = m.mesh.observation_matrix(&m.file.locations)?;
    let sampler = ObservationSampler::new(&m.model, a, m.file.x.clone(), m.file.y.clone())?;
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.simulate.realizations as u64).into_par_iter().map(|r| sampler.bivariate(seed, r)).collect::<Result<_>>()?;
    let s = series_from_points(&m.file.locations, rows);
    output::write(out, &s.to_csv(header))?;
    Ok(s)
}

/// Values of a series at the given locations, matched by exact coordinates.
fn series_at(series: &GriddedSeries, locations: &[[f64; 2]]) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let lookup: HashMap<(u64, u64), usize> = (0..series.n_cells()).map(|c| {
        let l = series.cell(c);
        ((l[0].to_bits(), l[1].to_bits()), c)
    }).collect();
    let cells: Vec<Option<usize>> = locations.iter().map(|l| lookup.get(&(l[0].to_bits(), l[1].to_bits())).copied()).collect();
    if cells.iter().all(|c| c.is_none()) {
        return Err(Error::Data("series shares no locations with the model".into()));
    }
    let pick = |f: fn(&(f64, f64)) -> f64| -> Vec<Vec<f64>> {
        series.values.iter().map(|row| cells.iter().map(|c| c.and_then(|c| row[c].as_ref()).map_or(f64::NAN, f)).collect()).collect()
    };
    Ok((pick(|p| p.0), pick(|p| p.1)))
}

fn route_length_m(cfg: &Config, geometry: Geometry) -> f64 {
    let unit = match geometry {
        Geometry::Sphere => EARTH_RADIUS_M,
        Geometry::Planar => cfg.risk.planar_unit_m,
    };
    cfg.risk.waypoints.windows(2).map(|w| distance(geometry, w[0], w[1])).sum::<f64>() * unit
}

fn read_directions(path: &Path) -> Result<WaveDirectionField> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let (mut locs, mut theta) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), msg: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let v: Vec<f64> = rec.iter().map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad number '{t}'") })).collect::<Result<_>>()?;
        if v.len() != 3 {
            return Err(Error::Parse { line, msg: "expected lon,lat,theta_deg".into() });
        }
        locs.push([v[0], v[1]]);
        theta.push(v[2]);
    }
    WaveDirectionField::from_degrees(locs, &theta)
}

/// Summary of one traversal written by [`cmd_risk`].
#[derive(Debug, Clone)]
pub struct RiskOutput {
    pub direction: Direction,
    pub mc: seafield::risk::McCdf,
    pub data: Option<Vec<f64>>,
    pub coverage: Option<f64>,
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::ToEurope => "to_europe",
        Direction::ToAmerica => "to_america",
    }
}

/// Monte Carlo CDF and envelopes of the route statistic, with the data CDF when a series is given.
pub fn cmd_risk(cfg: &Config, model_path: &Path, data: Option<&Path>, out_dir: &Path, seed: u64, header: &Header) -> Result<Vec<RiskOutput>> {
    let r = &cfg.risk;
    r.fatigue.validate()?;
    r.broaching.validate()?;
    let m = load_model(model_path)?;
    let geometry = m.mesh.geometry();
    let duration = match r.duration_hours {
        Some(d) => d,
        None if r.speed > 0.0 => route_length_m(cfg, geometry) / r.speed / 3600.0,
        None => return Err(Error::Config("duration_hours is required when the speed is zero".into())),
    };
    let base = Route::resample(&r.waypoints, geometry, r.points, r.speed, duration, Direction::ToEurope)?;
    let routes = match r.direction {
        Traversal::ToEurope => vec![base],
        Traversal::ToAmerica => vec![base.reversed()],
        Traversal::Both => vec![base.clone(), base.reversed()],
    };
    let table = MomentTable::new(&r.cutoff)?;
    let observed = data.map(|p| GriddedSeries::read(p).and_then(|s| series_at(&s, &m.file.locations))).transpose()?;
    let field = r.directions.as_ref().map(|p| read_directions(Path::new(p))).transpose()?;
    let mut outs = Vec::new();
    for route in routes {
        let idx = route.snap(&m.file.locations, r.snap_max_distance.unwrap_or(f64::INFINITY))?;
        let dirs = match &field {
            Some(f) => f.at(geometry, &route.points),
            None => gradient_directions(&m.file.locations, &m.file.x.mean, geometry, &idx, r.gradient_neighbours),
        };
        let direction = route.direction;
        let scenario = RouteScenario { route, idx: idx.clone(), dirs, kind: r.kind, fatigue: r.fatigue, broaching: r.broaching, table };
        let sampler = RouteSampler::new(&m.model, &m.mesh, &m.file.locations, &m.file.x, &m.file.y, &idx, r.model, cfg.data.period_kind)?;
        let mc = monte_carlo_cdf(
            |i| {
                let (h, t, k) = sampler.draw(seed, i)?;
                scenario.statistic(&h, &t, k)
            },
            r.realizations,
            r.repeats,
        )?;
        let data_stats = observed.as_ref().map(|(h, t)| scenario.observed(h, t, cfg.data.period_kind)).transpose()?;
        let coverage = data_stats.as_ref().filter(|d| !d.is_empty()).map(|d| mc.coverage(d));
        let name = direction_name(direction);
        let mut sorted = data_stats.clone().unwrap_or_default();
        sorted.sort_by(f64::total_cmp);
        let mut s = header.render("risk_cdf");
        let _ = writeln!(s, "# kind={:?} model={:?} direction={name} realizations={} repeats={}", r.kind, r.model, r.realizations, r.repeats);
        if let Some(c) = coverage {
            let _ = writeln!(s, "# data_days={} coverage={c}", sorted.len());
        }
        s.push_str("value,lower,upper,data_cdf\n");
        for (g, &x) in mc.grid.iter().enumerate() {
            let d = if sorted.is_empty() { String::new() } else { seafield::risk::ecdf(&sorted, x).to_string() };
            let _ = writeln!(s, "{x},{},{},{d}", mc.lower[g], mc.upper[g]);
        }
        output::write(&out_dir.join(format!("risk_{name}.csv")), &s)?;
        let mut s = header.render("risk_samples");
        s.push_str("source,repeat,value\n");
        for (k, rep) in mc.repeats.iter().enumerate() {
            for v in rep {
                let _ = writeln!(s, "model,{k},{v}");
            }
        }
        for v in &sorted {
            let _ = writeln!(s, "data,,{v}");
        }
        output::write(&out_dir.join(format!("risk_{name}_samples.csv")), &s)?;
        outs.push(RiskOutput { direction, mc, data: data_stats, coverage });
    }
    Ok(outs)
}

/// Pointwise and shifted sample cross-correlations, plus the model's when given.
pub fn cmd_crosscorr(cfg: &Config, input: &Path, model: Option<&Path>, out: &Path, header: &Header) -> Result<()> {
    let series = GriddedSeries::read(input)?;
    let data = series.to_dataset()?;
    let st = sample_crosscorr_stats(&data, cfg.crosscorr.shift_radius)?;
    let model_gamma: Option<HashMap<(u64, u64), f64>> = match model {
        Some(p) => {
            let m = load_model(p)?;
            let a = m.mesh.observation_matrix(&m.file.locations)?;
            let g = m.model.pointwise_crosscorr(&a)?.gamma;
            Some(m.file.locations.iter().zip(g).map(|(l, g)| ((l[0].to_bits(), l[1].to_bits()), g)).collect())
        }
        None => None,
    };
    let mut s = header.render("crosscorr");
    s.push_str("lon,lat,count,gamma_hat,shifted_gamma_hat,shift_lon,shift_lat,gamma_model\n");
    for (j, l) in data.locations.iter().enumerate() {
        if st.counts[j] < 2 || st.gamma_hat[j].is_nan() {
            continue;
        }
        let gm = model_gamma.as_ref().and_then(|m| m.get(&(l[0].to_bits(), l[1].to_bits()))).map_or(String::new(), |g| g.to_string());
        let _ = writeln!(s, "{},{},{},{},{},{},{},{gm}", l[0], l[1], st.counts[j], st.gamma_hat[j], st.shifted_gamma_hat[j], st.shifts[j][0], st.shifts[j][1]);
    }
    output::write(out, &s)
}
