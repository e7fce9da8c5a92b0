//! Route risk: fatigue damage and broaching-to capsize intensity.
//!
//! Rates are per second; route sums multiply by `Δt` in seconds, so the
//! accumulated damage and the capsize intensity are dimensionless.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bivar::MarginalSpec;
use crate::error::{Error, Result};
use crate::mesh::{lonlat_to_unit, Geometry};
use crate::seastate::{convert_period, MomentTable, PeriodKind, SeaStateParams, SpectralMoments, G};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToEurope,
    ToAmerica,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::ToEurope => Direction::ToAmerica,
            Direction::ToAmerica => Direction::ToEurope,
        }
    }
}

/// Waypoints with ship headings as unit `[east, north]` vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub points: Vec<[f64; 2]>,
    pub headings: Vec<[f64; 2]>,
    pub geometry: Geometry,
    /// Ship speed in m/s.
    pub speed: f64,
    pub dt_hours: f64,
    pub direction: Direction,
}

fn unit3(a: [f64; 3]) -> [f64; 3] {
    let n = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn lonlat(p: [f64; 3]) -> [f64; 2] {
    [p[1].atan2(p[0]).to_degrees(), p[2].clamp(-1.0, 1.0).asin().to_degrees()]
}

/// Unit `[east, north]` direction from `a` towards `b`.
fn bearing(geometry: Geometry, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let v = match geometry {
        Geometry::Planar => [b[0] - a[0], b[1] - a[1]],
        Geometry::Sphere => {
            let (lon, lat) = (a[0].to_radians(), a[1].to_radians());
            let east = [-lon.sin(), lon.cos(), 0.0];
            let north = [-lat.sin() * lon.cos(), -lat.sin() * lon.sin(), lat.cos()];
            let (pa, pb) = (lonlat_to_unit(a[0], a[1]), lonlat_to_unit(b[0], b[1]));
            let d = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            [dot3(d, east), dot3(d, north)]
        }
    };
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    if n > 0.0 {
        [v[0] / n, v[1] / n]
    } else {
        [0.0, 0.0]
    }
}

/// Great-circle angle in radians on the sphere, Euclidean distance in the plane.
pub fn distance(geometry: Geometry, a: [f64; 2], b: [f64; 2]) -> f64 {
    match geometry {
        Geometry::Planar => ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt(),
        Geometry::Sphere => dot3(lonlat_to_unit(a[0], a[1]), lonlat_to_unit(b[0], b[1])).clamp(-1.0, 1.0).acos(),
    }
}

fn interpolate(geometry: Geometry, a: [f64; 2], b: [f64; 2], t: f64) -> [f64; 2] {
    match geometry {
        Geometry::Planar => [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])],
        Geometry::Sphere => {
            let (pa, pb) = (lonlat_to_unit(a[0], a[1]), lonlat_to_unit(b[0], b[1]));
            let om = dot3(pa, pb).clamp(-1.0, 1.0).acos();
            if om < 1e-15 {
                return a;
            }
            let (sa, sb) = (((1.0 - t) * om).sin() / om.sin(), (t * om).sin() / om.sin());
            lonlat(unit3([sa * pa[0] + sb * pb[0], sa * pa[1] + sb * pb[1], sa * pa[2] + sb * pb[2]]))
        }
    }
}

impl Route {
    /// Route through the given waypoints; the heading at each point is the
    /// normalised mean of the adjacent leg directions.
    pub fn from_points(points: Vec<[f64; 2]>, geometry: Geometry, speed: f64, dt_hours: f64, direction: Direction) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Config("a route needs at least two points".into()));
        }
        if !(speed >= 0.0 && dt_hours > 0.0) {
            return Err(Error::Config("route speed must be nonnegative and Δt positive".into()));
        }
        let n = points.len();
        let headings = (0..n)
            .map(|i| {
                let fwd = if i + 1 < n { bearing(geometry, points[i], points[i + 1]) } else { [0.0, 0.0] };
                let back = if i > 0 {
                    let b = bearing(geometry, points[i], points[i - 1]);
                    [-b[0], -b[1]]
                } else {
                    [0.0, 0.0]
                };
                let s = [fwd[0] + back[0], fwd[1] + back[1]];
                let l = (s[0] * s[0] + s[1] * s[1]).sqrt();
                if l > 0.0 {
                    Ok([s[0] / l, s[1] / l])
                } else {
                    Err(Error::Config(format!("route turns back on itself at point {i}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Route { points, headings, geometry, speed, dt_hours, direction })
    }

    /// `n` points evenly spaced in distance along a polyline, `Δt = duration/n`.
    pub fn resample(polyline: &[[f64; 2]], geometry: Geometry, n: usize, speed: f64, duration_hours: f64, direction: Direction) -> Result<Self> {
        if polyline.len() < 2 || n < 2 {
            return Err(Error::Config("resampling needs at least two polyline and output points".into()));
        }
        let legs: Vec<f64> = polyline.windows(2).map(|w| distance(geometry, w[0], w[1])).collect();
        let total: f64 = legs.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Config("route has zero length".into()));
        }
        let mut pts = Vec::with_capacity(n);
        let (mut leg, mut start) = (0usize, 0.0);
        for k in 0..n {
            let s = total * k as f64 / (n - 1) as f64;
            while leg + 1 < legs.len() && start + legs[leg] < s {
                start += legs[leg];
                leg += 1;
            }
            let t = if legs[leg] > 0.0 { ((s - start) / legs[leg]).clamp(0.0, 1.0) } else { 0.0 };
            pts.push(interpolate(geometry, polyline[leg], polyline[leg + 1], t));
        }
        Self::from_points(pts, geometry, speed, duration_hours / n as f64, direction)
    }

    /// Great circle (or straight line in the plane) between two endpoints.
    pub fn great_circle(from: [f64; 2], to: [f64; 2], geometry: Geometry, n: usize, speed: f64, duration_hours: f64, direction: Direction) -> Result<Self> {
        Self::resample(&[from, to], geometry, n, speed, duration_hours, direction)
    }

    /// The same track traversed the other way.
    pub fn reversed(&self) -> Route {
        Route {
            points: self.points.iter().rev().copied().collect(),
            headings: self.headings.iter().rev().map(|h| [-h[0], -h[1]]).collect(),
            geometry: self.geometry,
            speed: self.speed,
            dt_hours: self.dt_hours,
            direction: self.direction.reversed(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn duration_hours(&self) -> f64 {
        self.dt_hours * self.len() as f64
    }

    /// Index of the nearest location for each waypoint.
    pub fn snap(&self, locations: &[[f64; 2]], max_distance: f64) -> Result<Vec<usize>> {
        self.points
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let (j, d) = locations
                    .iter()
                    .enumerate()
                    .map(|(j, &q)| (j, distance(self.geometry, p, q)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .ok_or(Error::Data("no locations to snap to".into()))?;
                if d > max_distance {
                    return Err(Error::Lookup { index: i });
                }
                Ok(j)
            })
            .collect()
    }
}

/// Angle in radians between a heading and a wave propagation direction.
pub fn wave_angle(heading: [f64; 2], wave: [f64; 2]) -> f64 {
    (heading[0] * wave[0] + heading[1] * wave[1]).clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatigueConfig {
    pub c_ship: f64,
    pub beta: f64,
    pub gamma: f64,
    pub g: f64,
}

impl Default for FatigueConfig {
    fn default() -> Self {
        FatigueConfig { c_ship: 20.0, beta: 3.0, gamma: 10f64.powf(12.73), g: G }
    }
}

impl FatigueConfig {
    pub fn validate(&self) -> Result<()> {
        if [self.c_ship, self.beta, self.gamma, self.g].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("fatigue constants must be positive".into()))
        }
    }
}

/// `(0.47 C^β Hs^β/γ)(1/Tz − 2πV cos α/(g Tz²))` per second, unclamped.
pub fn fatigue_rate_raw(hs: f64, tz: f64, v: f64, alpha: f64, cfg: &FatigueConfig) -> f64 {
    0.47 * (cfg.c_ship * hs).powf(cfg.beta) / cfg.gamma * (1.0 / tz - 2.0 * PI * v * alpha.cos() / (cfg.g * tz * tz))
}

/// Fatigue rate clamped at zero; the flag reports whether clamping occurred.
pub fn fatigue_rate(hs: f64, tz: f64, v: f64, alpha: f64, cfg: &FatigueConfig) -> (f64, bool) {
    let d = fatigue_rate_raw(hs, tz, v, alpha, cfg);
    if d < 0.0 {
        (0.0, true)
    } else {
        (d, false)
    }
}

/// Sea state at each waypoint.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteSeaState {
    pub hs: Vec<f64>,
    pub period: Vec<f64>,
    pub kind: PeriodKind,
    /// Wave propagation directions as unit `[east, north]` vectors.
    pub dirs: Vec<[f64; 2]>,
}

impl RouteSeaState {
    fn check(&self, route: &Route) -> Result<()> {
        let n = route.len();
        if self.hs.len() != n || self.period.len() != n || self.dirs.len() != n {
            return Err(Error::Dimension(format!("sea state must cover all {n} waypoints")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamageResult {
    pub total: f64,
    pub clamped: usize,
}

/// `D = Σ d(tᵢ) Δt` over the route.
pub fn accumulate_damage(route: &Route, sea: &RouteSeaState, cfg: &FatigueConfig) -> Result<DamageResult> {
    sea.check(route)?;
    let dt = route.dt_hours * 3600.0;
    let mut out = DamageResult { total: 0.0, clamped: 0 };
    for i in 0..route.len() {
        let tz = convert_period(sea.period[i], sea.kind, PeriodKind::Tz)?;
        let (d, c) = fatigue_rate(sea.hs[i], tz, route.speed, wave_angle(route.headings[i], sea.dirs[i]), cfg);
        out.total += d * dt;
        out.clamped += c as usize;
    }
    Ok(out)
}

/// Intensity of apparent waves overtaking the ship, per second.
///
/// The closed form is evaluated with the cross moment taken as `−m11`,
/// which reproduces `(V − v_x)⁺/L` for a single wave travelling along `+x`.
pub fn overtake_intensity(m: &SpectralMoments, v_x: f64) -> Result<f64> {
    if !(m.m00 > 0.0 && m.m20 > 0.0) {
        return Err(Error::DegenerateSea("overtaking intensity needs m00, m20 > 0".into()));
    }
    let a = -m.m11 / m.m20;
    let disc = v_x * v_x + 2.0 * v_x * a + m.m02 / m.m20;
    debug_assert!(disc >= -1e-12 * (v_x * v_x + m.m02 / m.m20), "negative discriminant");
    let mu = (m.m20 / m.m00).sqrt() / (4.0 * PI) * (-a - v_x + disc.max(0.0).sqrt());
    Ok(mu.max(0.0))
}

/// Correlation parameter of the slope law, with the same orientation as
/// [`overtake_intensity`].
pub fn slope_rho(m: &SpectralMoments, v_x: f64) -> f64 {
    let m11 = -m.m11;
    (v_x * m.m20 + m11) / (m.m20 * (v_x * v_x * m.m20 + 2.0 * v_x * m11 + m.m02)).sqrt()
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// CDF of the wave slope at overtaking down-crossings.
pub fn slope_cdf(r: f64, m: &SpectralMoments, v_x: f64) -> Result<f64> {
    let rho = slope_rho(m, v_x);
    if !(rho.abs() < 1.0) {
        return Err(Error::DegenerateSea(format!("slope correlation {rho} is not inside (-1, 1)")));
    }
    if r > 0.0 {
        return Ok(1.0);
    }
    if r == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let sigma = (m.m20 * (1.0 - rho * rho)).sqrt();
    let n = std_normal();
    let f = 2.0 / (1.0 - rho) * (n.cdf(r / sigma) - rho * (-r * r / (2.0 * m.m20)).exp() * n.cdf(r * rho / sigma));
    Ok(f.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroachingConfig {
    pub beta0: f64,
    pub beta_h: f64,
    pub beta_t: f64,
    pub a_lo: f64,
    pub a_hi: f64,
    pub alpha0_deg: f64,
    /// Seconds per unit of the regression's time scale.
    pub time_unit_s: f64,
}

impl Default for BroachingConfig {
    fn default() -> Self {
        BroachingConfig { beta0: 0.05f64.ln(), beta_h: 7.5, beta_t: -7.5, a_lo: -0.4, a_hi: -0.2, alpha0_deg: 75.0, time_unit_s: 1.0 }
    }
}

impl BroachingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a_lo <= self.a_hi && self.a_hi <= 0.0) {
            return Err(Error::Config(format!("dangerous slopes [{}, {}] must satisfy a_lo ≤ a_hi ≤ 0", self.a_lo, self.a_hi)));
        }
        if !(self.alpha0_deg > 0.0 && self.alpha0_deg < 90.0) {
            return Err(Error::Config(format!("cutoff angle {} must lie in (0, 90)", self.alpha0_deg)));
        }
        if !(self.time_unit_s > 0.0) {
            return Err(Error::Config("time unit must be positive".into()));
        }
        Ok(())
    }
}

/// `μ · P{W_x ∈ [a_lo, a_hi]}`.
pub fn dangerous_intensity(m: &SpectralMoments, v_x: f64, a_lo: f64, a_hi: f64) -> Result<f64> {
    let mu = overtake_intensity(m, v_x)?;
    if a_lo >= a_hi {
        return Ok(0.0);
    }
    Ok(mu * (slope_cdf(a_hi, m, v_x)? - slope_cdf(a_lo, m, v_x)?).max(0.0))
}

/// `μ_D exp(β₀ + β_H log Hs + β_T log T)` with `T` the mean period `T1`.
pub fn capsize_intensity(hs: f64, t1: f64, mu_d: f64, cfg: &BroachingConfig) -> f64 {
    mu_d * (cfg.beta0 + cfg.beta_h * hs.ln() + cfg.beta_t * t1.ln()).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CapsizeResult {
    /// `Σ λ Δt`.
    pub lambda: f64,
    /// `Σ μ Δt` over the counted waypoints.
    pub mu: f64,
    /// `Σ μ_D Δt` over the counted waypoints.
    pub mu_d: f64,
    /// Waypoints within the cutoff angle.
    pub counted: usize,
}

/// Route capsize intensity; waypoints with a wave angle above `α₀` contribute nothing.
pub fn route_capsize_intensity(route: &Route, sea: &RouteSeaState, table: &MomentTable, cfg: &BroachingConfig) -> Result<CapsizeResult> {
    sea.check(route)?;
    let dt = route.dt_hours * 3600.0 / cfg.time_unit_s;
    let cutoff = cfg.alpha0_deg.to_radians();
    let mut out = CapsizeResult::default();
    for i in 0..route.len() {
        let angle = wave_angle(route.headings[i], sea.dirs[i]);
        if angle > cutoff {
            continue;
        }
        let p = SeaStateParams::new(sea.hs[i], sea.period[i], sea.kind)?;
        let m = table.at(&p);
        let vx = route.speed * angle.cos();
        let mu = overtake_intensity(&m, vx)? * cfg.time_unit_s;
        let mu_d = dangerous_intensity(&m, vx, cfg.a_lo, cfg.a_hi)? * cfg.time_unit_s;
        let t1 = convert_period(sea.period[i], sea.kind, PeriodKind::T1)?;
        out.lambda += capsize_intensity(sea.hs[i], t1, mu_d, cfg) * dt;
        out.mu += mu * dt;
        out.mu_d += mu_d * dt;
        out.counted += 1;
    }
    Ok(out)
}

/// Propagation directions on a set of locations.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveDirectionField {
    pub locations: Vec<[f64; 2]>,
    pub dirs: Vec<[f64; 2]>,
}

impl WaveDirectionField {
    /// From directions in degrees clockwise from north (the direction waves travel to).
    pub fn from_degrees(locations: Vec<[f64; 2]>, theta_deg: &[f64]) -> Result<Self> {
        if locations.len() != theta_deg.len() || locations.is_empty() {
            return Err(Error::Data("direction field needs one angle per location".into()));
        }
        let dirs = theta_deg.iter().map(|t| [t.to_radians().sin(), t.to_radians().cos()]).collect();
        Ok(WaveDirectionField { locations, dirs })
    }

    /// Direction at the nearest field location of each point.
    pub fn at(&self, geometry: Geometry, points: &[[f64; 2]]) -> Vec<[f64; 2]> {
        points
            .iter()
            .map(|&p| {
                let j = (0..self.locations.len())
                    .min_by(|&a, &b| distance(geometry, p, self.locations[a]).total_cmp(&distance(geometry, p, self.locations[b])))
                    .expect("nonempty field");
                self.dirs[j]
            })
            .collect()
    }
}

/// Directions of the gradient of `values` at the `targets`, from a least-squares
/// plane through the `k` nearest locations. Zero gradients give `[0, 0]`.
pub fn gradient_directions(locations: &[[f64; 2]], values: &[f64], geometry: Geometry, targets: &[usize], k: usize) -> Vec<[f64; 2]> {
    targets
        .iter()
        .map(|&t| {
            let p = locations[t];
            let mut near: Vec<(f64, usize)> = (0..locations.len()).filter(|&j| j != t).map(|j| (distance(geometry, p, locations[j]), j)).collect();
            near.sort_by(|a, b| a.0.total_cmp(&b.0));
            let scale = match geometry {
                Geometry::Planar => 1.0,
                Geometry::Sphere => p[1].to_radians().cos(),
            };
            // normal equations for v − v_t = g · d
            let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(_, j) in near.iter().take(k) {
                let q = locations[j];
                let mut dx = q[0] - p[0];
                if geometry == Geometry::Sphere {
                    dx = (dx + 540.0).rem_euclid(360.0) - 180.0;
                }
                let d = [dx * scale, q[1] - p[1]];
                let dv = values[j] - values[t];
                a11 += d[0] * d[0];
                a12 += d[0] * d[1];
                a22 += d[1] * d[1];
                b1 += d[0] * dv;
                b2 += d[1] * dv;
            }
            let det = a11 * a22 - a12 * a12;
            if !(det.abs() > 1e-14 * (a11 * a22).max(f64::MIN_POSITIVE)) {
                return [0.0, 0.0];
            }
            let g = [(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det];
            let n = (g[0] * g[0] + g[1] * g[1]).sqrt();
            if n > 0.0 {
                [g[0] / n, g[1] / n]
            } else {
                [0.0, 0.0]
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    Proxy,
    ConditionalMean,
}

/// Period field from Hs alone.
///
/// `Proxy` gives `Tz = 3.75√Hs`. `ConditionalMean` gives `exp` of the
/// Gaussian conditional mean of log T given log Hs at each location, in the
/// period kind of the `y` marginal.
pub fn baseline_period(mode: BaselineMode, hs: &[f64], x: Option<&MarginalSpec>, y: Option<&MarginalSpec>, gamma: Option<&[f64]>) -> Result<Vec<f64>> {
    match mode {
        BaselineMode::Proxy => hs
            .iter()
            .map(|&h| if h > 0.0 { Ok(3.75 * h.sqrt()) } else { Err(Error::DegenerateSea(format!("Hs must be positive, got {h}"))) })
            .collect(),
        BaselineMode::ConditionalMean => {
            let (Some(x), Some(y), Some(g)) = (x, y, gamma) else {
                return Err(Error::Config("conditional-mean baseline needs both marginals and γ".into()));
            };
            if g.len() != hs.len() || x.mean.len() != hs.len() || y.mean.len() != hs.len() {
                return Err(Error::Dimension("baseline inputs must cover the same locations".into()));
            }
            Ok((0..hs.len())
                .map(|j| {
                    let z = (hs[j].ln() - x.mean[j]) / x.var[j].sqrt();
                    (y.mean[j] + g[j] * y.var[j].sqrt() * z).exp()
                })
                .collect())
        }
    }
}

/// Empirical CDFs of a route statistic over repeated Monte Carlo batches.
#[derive(Debug, Clone, PartialEq)]
pub struct McCdf {
    /// Sorted statistics per repeat.
    pub repeats: Vec<Vec<f64>>,
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Fraction of `sorted` that is `≤ x`.
pub fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64
}

pub const CDF_GRID_POINTS: usize = 101;

/// Runs `stat(i)` for realisation indices `0..n_realizations·n_repeats`; repeat `r`
/// uses indices `r·n_realizations..(r+1)·n_realizations`. The envelope grid
/// spans the pooled range of all statistics.
pub fn monte_carlo_cdf<F>(stat: F, n_realizations: usize, n_repeats: usize) -> Result<McCdf>
where
    F: Fn(u64) -> Result<f64> + Sync,
{
    if n_realizations == 0 || n_repeats == 0 {
        return Err(Error::Config("need at least one realisation and one repeat".into()));
    }
    let all: Vec<f64> = (0..(n_realizations * n_repeats) as u64).into_par_iter().map(&stat).collect::<Result<_>>()?;
    if all.iter().any(|v| !v.is_finite()) {
        return Err(Error::Model("route statistic is not finite".into()));
    }
    let repeats: Vec<Vec<f64>> = all
        .chunks(n_realizations)
        .map(|c| {
            let mut v = c.to_vec();
            v.sort_by(f64::total_cmp);
            v
        })
        .collect();
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid: Vec<f64> = (0..CDF_GRID_POINTS).map(|g| lo + (hi - lo) * g as f64 / (CDF_GRID_POINTS - 1) as f64).collect();
    let (mut lower, mut upper) = (vec![f64::INFINITY; grid.len()], vec![f64::NEG_INFINITY; grid.len()]);
    for r in &repeats {
        for (g, &x) in grid.iter().enumerate() {
            let f = ecdf(r, x);
            lower[g] = lower[g].min(f);
            upper[g] = upper[g].max(f);
        }
    }
    Ok(McCdf { repeats, grid, lower, upper })
}

impl McCdf {
    /// Fraction of grid points where the empirical CDF of `data` lies inside the envelopes.
    pub fn coverage(&self, data: &[f64]) -> f64 {
        let mut d = data.to_vec();
        d.sort_by(f64::total_cmp);
        let inside = self.grid.iter().enumerate().filter(|(g, &x)| {
            let f = ecdf(&d, x);
            f >= self.lower[*g] && f <= self.upper[*g]
        });
        inside.count() as f64 / self.grid.len() as f64
    }
}
