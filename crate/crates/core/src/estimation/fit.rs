//! Stepwise maximum likelihood: marginals first, then the cross-correlation field.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::data::{point_stats, sample_crosscorr_stats, standardize_with, Dataset};
use super::likelihood::{joint_loglik, marginal_loglik, pointwise_loglik};
use super::optim::{minimize, OptimOptions, OptimResult};
use crate::bivar::{BivariateModel, MarginalSpec};
use crate::error::{Error, Result};
use crate::latent::LatentField;
use crate::mesh::{lonlat_to_unit, Geometry, Mesh};
use crate::paramfield::{isotropic_h_for_range, BoundingBox, CosineField, CrossCorrField, DeformationParams};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub param_names: Vec<String>,
    pub params: Vec<f64>,
    pub neg_loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Objective per iteration, as mean negative log-likelihood per observation.
    pub history: Vec<f64>,
    pub n_obs: usize,
    /// The nugget is optimised together with the operator parameters.
    pub nugget_joint: bool,
}

impl FitReport {
    fn from_optim(names: Vec<String>, r: &OptimResult, params: Vec<f64>, n_obs: usize, nugget_joint: bool) -> Self {
        FitReport {
            param_names: names,
            params,
            neg_loglik: r.f * n_obs as f64,
            iterations: r.iterations,
            converged: r.converged,
            grad_norm: r.grad_norm,
            history: r.history.clone(),
            n_obs,
            nugget_joint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMethod {
    FullMl,
    Pointwise,
    /// Pointwise likelihood with the shift-maximised sample correlations.
    PointwiseShifted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Cosine basis order for the deformation fields.
    pub order: usize,
    /// Cosine basis order for ρ.
    pub rho_order: usize,
    /// Rational approximation order.
    pub rational_order: usize,
    pub optim: OptimOptions,
    pub alpha_init: f64,
    /// Fixes α instead of estimating it.
    pub alpha_fixed: Option<f64>,
    pub alpha_max: f64,
    pub nugget_init: f64,
    pub rho_method: RhoMethod,
    /// Search radius for shifted correlations, in location coordinates.
    pub shift_radius: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            order: 0,
            rho_order: 0,
            rational_order: 2,
            optim: OptimOptions::default(),
            alpha_init: 2.0,
            alpha_fixed: None,
            alpha_max: 10.0,
            nugget_init: 1e-2,
            rho_method: RhoMethod::Pointwise,
            shift_radius: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MarginalFit {
    pub deformation: DeformationParams,
    pub alpha: f64,
    pub nugget: f64,
    pub report: FitReport,
}

#[derive(Debug, Clone)]
pub struct RhoFit {
    pub rho: CrossCorrField,
    pub report: FitReport,
}

fn distance(geometry: Geometry, a: [f64; 2], b: [f64; 2]) -> f64 {
    match geometry {
        Geometry::Planar => ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt(),
        Geometry::Sphere => {
            let (p, q) = (lonlat_to_unit(a[0], a[1]), lonlat_to_unit(b[0], b[1]));
            let c = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
            c.clamp(-1.0, 1.0).acos()
        }
    }
}

/// Distance at which the binned empirical correlation first drops below 0.14.
///
/// Pearson correlations of all location pairs are averaged in 30 distance
/// bins up to half the largest pair distance.
pub fn initial_range(locations: &[[f64; 2]], geometry: Geometry, reps: &[Vec<f64>]) -> f64 {
    const LEVEL: f64 = 0.14;
    let m = locations.len();
    // cap the pair count on large grids with a fixed stride
    let stride = (m / 300).max(1);
    let idx: Vec<usize> = (0..m).step_by(stride).collect();
    let cols: Vec<Vec<f64>> = idx.iter().map(|&j| reps.iter().map(|r| r[j]).collect()).collect();
    let mut pairs = Vec::new();
    let mut dmax = 0.0f64;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            let d = distance(geometry, locations[idx[a]], locations[idx[b]]);
            if let Some(c) = super::data::pearson(&cols[a], &cols[b]) {
                dmax = dmax.max(d);
                pairs.push((d, c));
            }
        }
    }
    if pairs.is_empty() || !(dmax > 0.0) {
        return 1.0;
    }
    let nb = 30;
    let width = 0.5 * dmax / nb as f64;
    let mut sum = vec![0.0; nb];
    let mut cnt = vec![0usize; nb];
    for (d, c) in pairs {
        let b = (d / width) as usize;
        if b < nb {
            sum[b] += c;
            cnt[b] += 1;
        }
    }
    let mut prev: Option<(f64, f64)> = None;
    for b in 0..nb {
        if cnt[b] == 0 {
            continue;
        }
        let (db, cb) = ((b as f64 + 0.5) * width, sum[b] / cnt[b] as f64);
        if cb < LEVEL {
            return match prev {
                Some((d0, c0)) if c0 > cb => d0 + (c0 - LEVEL) / (c0 - cb) * (db - d0),
                _ => db,
            };
        }
        prev = Some((db, cb));
    }
    0.5 * dmax
}

fn observed(reps: &[Vec<f64>]) -> usize {
    reps.iter().map(|r| r.iter().filter(|v| !v.is_nan()).count()).sum()
}

fn deformation_names(k: usize) -> Vec<String> {
    let mut v = Vec::new();
    for f in ["h1", "h2", "h3"] {
        for n in 0..=k {
            for p in 0..=k {
                v.push(format!("{f}_{n}{p}"));
            }
        }
    }
    v
}

/// Maximises the marginal likelihood of standardised replicates `reps`
/// observed through the vertex-indexed matrix `a`.
pub fn fit_marginal(mesh: &Mesh, a: &CsrMatrix, locations: &[[f64; 2]], reps: &[Vec<f64>], bbox: BoundingBox, opts: &FitOptions) -> Result<MarginalFit> {
    if a.nrows() != locations.len() {
        return Err(Error::Dimension("observation matrix rows must match locations".into()));
    }
    let n_obs = observed(reps);
    if n_obs == 0 {
        return Err(Error::Data("no observations to fit".into()));
    }
    let k = opts.order;
    let nd = 3 * (k + 1) * (k + 1);
    let alpha0 = opts.alpha_fixed.unwrap_or(opts.alpha_init);
    if !(alpha0 > 1.0 && alpha0 <= opts.alpha_max) {
        return Err(Error::Config(format!("initial smoothness {alpha0} outside (1, {}]", opts.alpha_max)));
    }
    let range = initial_range(locations, mesh.geometry(), reps);
    let h0 = isotropic_h_for_range(range, alpha0);
    let mut x0 = DeformationParams::isotropic(k, bbox, h0).to_vec();
    if opts.alpha_fixed.is_none() {
        x0.push((alpha0 - 1.0).ln());
    }
    x0.push(opts.nugget_init.ln());

    let unpack = |x: &[f64]| -> Result<(DeformationParams, f64, f64)> {
        let d = DeformationParams::from_vec(k, bbox, &x[..nd])?;
        let alpha = match opts.alpha_fixed {
            Some(a) => a,
            None => 1.0 + x[nd].exp(),
        };
        let nugget = x[x.len() - 1].exp();
        Ok((d, alpha, nugget))
    };
    let objective = |x: &[f64]| -> f64 {
        let Ok((d, alpha, nugget)) = unpack(x) else { return f64::INFINITY };
        if !(alpha <= opts.alpha_max) || !(nugget > 0.0 && nugget.is_finite()) {
            return f64::INFINITY;
        }
        LatentField::build(mesh, &d, alpha, opts.rational_order)
            .and_then(|field| marginal_loglik(&field, a, nugget, reps))
            .map(|ll| -ll / n_obs as f64)
            .unwrap_or(f64::INFINITY)
    };
    let r = minimize(&objective, &x0, &opts.optim);
    if !r.f.is_finite() {
        return Err(Error::Model("marginal likelihood is not finite at the initial point".into()));
    }
    let (deformation, alpha, nugget) = unpack(&r.x)?;
    let mut names = deformation_names(k);
    if opts.alpha_fixed.is_none() {
        names.push("log_alpha_minus_1".into());
    }
    names.push("log_nugget".into());
    let report = FitReport::from_optim(names, &r, r.x.clone(), n_obs, true);
    Ok(MarginalFit { deformation, alpha, nugget, report })
}

fn rho_names(k: usize) -> Vec<String> {
    (0..=k).flat_map(|n| (0..=k).map(move |p| format!("rho_{n}{p}"))).collect()
}

/// Maximises the joint bivariate likelihood over ρ's coefficients with both
/// marginals held fixed.
#[allow(clippy::too_many_arguments)]
pub fn fit_rho_fullml(
    mesh: &Mesh,
    a: &CsrMatrix,
    x: Arc<LatentField>,
    y: Arc<LatentField>,
    nuggets: [f64; 2],
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    bbox: BoundingBox,
    opts: &FitOptions,
) -> Result<RhoFit> {
    let k = opts.rho_order;
    let n_obs = observed(xs) + observed(ys);
    if n_obs == 0 {
        return Err(Error::Data("no observations to fit".into()));
    }
    let objective = |c: &[f64]| -> f64 {
        let Ok(rf) = CosineField::from_coefficients(k, bbox, c.to_vec()) else { return f64::INFINITY };
        BivariateModel::from_fields(mesh, x.clone(), y.clone(), &CrossCorrField { rho: rf })
            .and_then(|m| joint_loglik(&m, a, nuggets, xs, ys))
            .map(|ll| -ll / n_obs as f64)
            .unwrap_or(f64::INFINITY)
    };
    let x0 = vec![0.0; (k + 1) * (k + 1)];
    let r = minimize(&objective, &x0, &opts.optim);
    if !r.f.is_finite() {
        return Err(Error::Model("joint likelihood is not finite at ρ ≡ 0".into()));
    }
    let rho = CrossCorrField { rho: CosineField::from_coefficients(k, bbox, r.x.clone())? };
    Ok(RhoFit { rho, report: FitReport::from_optim(rho_names(k), &r, r.x.clone(), n_obs, false) })
}

/// Maximises the pointwise product likelihood of the sample correlations.
///
/// Locations with `NaN` in `gamma_hat` are skipped; `|γ̂ⱼ| ≥ 1` is a data error.
#[allow(clippy::too_many_arguments)]
pub fn fit_rho_pointwise(
    mesh: &Mesh,
    a: &CsrMatrix,
    x: Arc<LatentField>,
    y: Arc<LatentField>,
    gamma_hat: &[f64],
    counts: &[usize],
    bbox: BoundingBox,
    opts: &FitOptions,
) -> Result<RhoFit> {
    if gamma_hat.len() != a.nrows() || counts.len() != a.nrows() {
        return Err(Error::Dimension("sample correlations must match observation rows".into()));
    }
    if let Some(j) = gamma_hat.iter().position(|g| g.abs() >= 1.0) {
        return Err(Error::Data(format!("sample cross-correlation at location {j} has magnitude ≥ 1")));
    }
    let keep: Vec<usize> = (0..gamma_hat.len()).filter(|&j| !gamma_hat[j].is_nan() && counts[j] >= 2).collect();
    if keep.is_empty() {
        return Err(Error::Data("no location has a sample cross-correlation".into()));
    }
    let cols: Vec<usize> = (0..a.ncols()).collect();
    let ak = a.select(&keep, &cols);
    let gh: Vec<f64> = keep.iter().map(|&j| gamma_hat[j]).collect();
    let ok: Vec<usize> = keep.iter().map(|&j| counts[j]).collect();
    let n_obs: usize = ok.iter().sum();
    let k = opts.rho_order;
    let objective = |c: &[f64]| -> f64 {
        let Ok(rf) = CosineField::from_coefficients(k, bbox, c.to_vec()) else { return f64::INFINITY };
        BivariateModel::from_fields(mesh, x.clone(), y.clone(), &CrossCorrField { rho: rf })
            .and_then(|m| m.pointwise_crosscorr(&ak))
            .map(|cc| -pointwise_loglik(&cc.gamma, &gh, &ok) / n_obs as f64)
            .unwrap_or(f64::INFINITY)
    };
    let x0 = vec![0.0; (k + 1) * (k + 1)];
    let r = minimize(&objective, &x0, &opts.optim);
    if !r.f.is_finite() {
        return Err(Error::Model("pointwise likelihood is not finite at ρ ≡ 0".into()));
    }
    let rho = CrossCorrField { rho: CosineField::from_coefficients(k, bbox, r.x.clone())? };
    Ok(RhoFit { rho, report: FitReport::from_optim(rho_names(k), &r, r.x.clone(), n_obs, false) })
}

/// Fitted bivariate model with all reports.
#[derive(Debug, Clone)]
pub struct BivariateFit {
    pub x: MarginalSpec,
    pub y: MarginalSpec,
    pub rho: CrossCorrField,
    pub x_report: FitReport,
    pub y_report: FitReport,
    pub rho_report: FitReport,
    /// Locations dropped before fitting for lack of data.
    pub dropped: Vec<usize>,
}

/// The full stepwise pipeline on raw log-scale data.
///
/// Both marginals are fitted concurrently; `ρ` is then fitted with the
/// marginals fixed.
pub fn fit_bivariate(mesh: &Mesh, data: &Dataset, bbox: BoundingBox, opts: &FitOptions) -> Result<BivariateFit> {
    let usable = data.usable_locations();
    if usable.is_empty() {
        return Err(Error::Data("no location has at least two observations".into()));
    }
    let dropped: Vec<usize> = (0..data.n_locations()).filter(|j| !usable.contains(j)).collect();
    let data = data.select_locations(&usable);
    let a = mesh.observation_matrix(&data.locations)?;
    let (sx, sy) = (point_stats(&data.x), point_stats(&data.y));
    let zx = standardize_with(&data.x, &sx)?;
    let zy = standardize_with(&data.y, &sy)?;
    let (fx, fy) = rayon::join(
        || fit_marginal(mesh, &a, &data.locations, &zx, bbox, opts),
        || fit_marginal(mesh, &a, &data.locations, &zy, bbox, opts),
    );
    let (fx, fy) = (fx?, fy?);
    let lx = Arc::new(LatentField::build(mesh, &fx.deformation, fx.alpha, opts.rational_order)?);
    let ly = Arc::new(LatentField::build(mesh, &fy.deformation, fy.alpha, opts.rational_order)?);
    let rho_fit = match opts.rho_method {
        RhoMethod::FullMl => fit_rho_fullml(mesh, &a, lx, ly, [fx.nugget, fy.nugget], &zx, &zy, bbox, opts)?,
        RhoMethod::Pointwise | RhoMethod::PointwiseShifted => {
            let zdata = Dataset::new(data.locations.clone(), zx, zy)?;
            let radius = if opts.rho_method == RhoMethod::Pointwise { 0.0 } else { opts.shift_radius };
            let st = sample_crosscorr_stats(&zdata, radius)?;
            let g = if opts.rho_method == RhoMethod::Pointwise { st.gamma_hat } else { st.shifted_gamma_hat };
            fit_rho_pointwise(mesh, &a, lx, ly, &g, &st.counts, bbox, opts)?
        }
    };
    let spec = |f: &MarginalFit, s: &super::data::PointStats| MarginalSpec {
        deformation: f.deformation.clone(),
        alpha: f.alpha,
        nugget: f.nugget,
        mean: s.mean.clone(),
        var: s.var.clone(),
    };
    Ok(BivariateFit {
        x: spec(&fx, &sx),
        y: spec(&fy, &sy),
        rho: rho_fit.rho,
        x_report: fx.report,
        y_report: fy.report,
        rho_report: rho_fit.report,
        dropped,
    })
}
