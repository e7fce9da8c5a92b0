//! Sea-state scenarios along a route: model draws, observed days and the risk statistic.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bivar::{BivariateModel, MarginalSpec};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::risk::{accumulate_damage, baseline_period, route_capsize_intensity, BaselineMode, BroachingConfig, FatigueConfig, Route, RouteSeaState};
use crate::seastate::{MomentTable, PeriodKind};
use crate::sparse::CsrMatrix;

/// Salt separating the nugget noise streams from the latent ones.
const NUGGET_SALT: u64 = 0x6e75_6767_6574;

fn nugget_noise(n: usize, sd: f64, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NUGGET_SALT);
    rng.set_stream(stream);
    (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(&mut rng);
            sd * g
        })
        .collect()
}

/// Restricts a marginal's pointwise statistics to the given locations.
pub fn restrict_spec(spec: &MarginalSpec, idx: &[usize]) -> MarginalSpec {
    MarginalSpec {
        deformation: spec.deformation.clone(),
        alpha: spec.alpha,
        nugget: spec.nugget,
        mean: idx.iter().map(|&j| spec.mean[j]).collect(),
        var: idx.iter().map(|&j| spec.var[j]).collect(),
    }
}

/// Draws observation-scale fields (latent field plus nugget, then destandardised)
/// at the rows of a vertex-indexed observation matrix.
pub struct ObservationSampler<'a> {
    pub model: &'a BivariateModel,
    pub a: CsrMatrix,
    pub x: MarginalSpec,
    pub y: MarginalSpec,
}

impl<'a> ObservationSampler<'a> {
    pub fn new(model: &'a BivariateModel, a: CsrMatrix, x: MarginalSpec, y: MarginalSpec) -> Result<Self> {
        if a.nrows() != x.mean.len() || a.nrows() != y.mean.len() {
            return Err(Error::Dimension("observation rows and statistics differ in length".into()));
        }
        Ok(ObservationSampler { model, a, x, y })
    }

    fn observe(&self, u: &[f64], spec: &MarginalSpec, seed: u64, stream: u64) -> Vec<f64> {
        let z = self.a.mul_vec(u);
        let e = nugget_noise(z.len(), spec.nugget.sqrt(), seed, stream);
        (0..z.len()).map(|j| (spec.mean[j] + spec.var[j].sqrt() * (z[j] + e[j])).exp()).collect()
    }

    /// Realisation `r`: `(Hs, period)` per row.
    pub fn bivariate(&self, seed: u64, r: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (ux, uy) = self.model.sample_indexed(seed, r)?;
        Ok((self.observe(&ux, &self.x, seed, 2 * r), self.observe(&uy, &self.y, seed, 2 * r + 1)))
    }

    /// Realisation `r` of Hs from the `X` marginal alone.
    pub fn univariate(&self, seed: u64, r: u64) -> Result<Vec<f64>> {
        let ux = self.model.x.sample_indexed(seed, r)?;
        Ok(self.observe(&ux, &self.x, seed, 2 * r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskKind {
    Fatigue,
    Broaching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Bivariate,
    UnivariateProxy,
    UnivariateConditionalMean,
}

/// A route snapped to model locations with fixed wave directions.
pub struct RouteScenario {
    pub route: Route,
    /// Model location index per waypoint.
    pub idx: Vec<usize>,
    pub dirs: Vec<[f64; 2]>,
    pub kind: RiskKind,
    pub fatigue: FatigueConfig,
    pub broaching: BroachingConfig,
    pub table: MomentTable,
}

impl RouteScenario {
    /// Damage or capsize intensity for one sea state along the route.
    pub fn statistic(&self, hs: &[f64], period: &[f64], kind: PeriodKind) -> Result<f64> {
        let sea = RouteSeaState { hs: hs.to_vec(), period: period.to_vec(), kind, dirs: self.dirs.clone() };
        match self.kind {
            RiskKind::Fatigue => Ok(accumulate_damage(&self.route, &sea, &self.fatigue)?.total),
            RiskKind::Broaching => Ok(route_capsize_intensity(&self.route, &sea, &self.table, &self.broaching)?.lambda),
        }
    }

    /// Statistic per observed replicate; replicates with a missing value on the route are skipped.
    pub fn observed(&self, hs: &[Vec<f64>], period: &[Vec<f64>], kind: PeriodKind) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (h, t) in hs.iter().zip(period) {
            let rh: Vec<f64> = self.idx.iter().map(|&j| h[j]).collect();
            let rt: Vec<f64> = self.idx.iter().map(|&j| t[j]).collect();
            if rh.iter().chain(&rt).any(|v| !v.is_finite()) {
                continue;
            }
            out.push(self.statistic(&rh, &rt, kind)?);
        }
        Ok(out)
    }
}

/// Draws route sea states from a fitted model under one of the model choices.
pub struct RouteSampler<'a> {
    pub sampler: ObservationSampler<'a>,
    pub choice: ModelChoice,
    /// Period kind of the `y` marginal.
    pub kind: PeriodKind,
    gamma: Option<Vec<f64>>,
}

impl<'a> RouteSampler<'a> {
    /// `a` is the vertex-indexed observation matrix of all model locations.
    pub fn new(model: &'a BivariateModel, mesh: &Mesh, locations: &[[f64; 2]], x: &MarginalSpec, y: &MarginalSpec, idx: &[usize], choice: ModelChoice, kind: PeriodKind) -> Result<Self> {
        let pts: Vec<[f64; 2]> = idx.iter().map(|&j| locations[j]).collect();
        let a = mesh.observation_matrix(&pts)?;
        let gamma = match choice {
            ModelChoice::UnivariateConditionalMean => Some(model.pointwise_crosscorr(&a)?.gamma),
            _ => None,
        };
        let sampler = ObservationSampler::new(model, a, restrict_spec(x, idx), restrict_spec(y, idx))?;
        Ok(RouteSampler { sampler, choice, kind, gamma })
    }

    /// Realisation `r` as `(Hs, period, period kind)`.
    pub fn draw(&self, seed: u64, r: u64) -> Result<(Vec<f64>, Vec<f64>, PeriodKind)> {
        match self.choice {
            ModelChoice::Bivariate => {
                let (h, t) = self.sampler.bivariate(seed, r)?;
                Ok((h, t, self.kind))
            }
            ModelChoice::UnivariateProxy => {
                let h = self.sampler.univariate(seed, r)?;
                let t = baseline_period(BaselineMode::Proxy, &h, None, None, None)?;
                Ok((h, t, PeriodKind::Tz))
            }
            ModelChoice::UnivariateConditionalMean => {
                let h = self.sampler.univariate(seed, r)?;
                let t = baseline_period(BaselineMode::ConditionalMean, &h, Some(&self.sampler.x), Some(&self.sampler.y), self.gamma.as_deref())?;
                Ok((h, t, self.kind))
            }
        }
    }
}
