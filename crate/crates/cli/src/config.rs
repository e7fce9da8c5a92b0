//! TOML run configuration. Every field has a default so an empty file is valid.

use serde::{Deserialize, Serialize};

use seafield::estimation::RhoMethod;
use seafield::mesh::Geometry;
use seafield::risk::{BroachingConfig, FatigueConfig};
use seafield::scenario::{ModelChoice, RiskKind};
use seafield::seastate::{CutoffPolicy, PeriodKind};
use seafield::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub data: DataConfig,
    pub ingest: IngestConfig,
    pub mesh: MeshConfig,
    pub fit: FitConfig,
    pub simulate: SimulateConfig,
    pub risk: RiskConfig,
    pub crosscorr: CrossCorrConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryName {
    Planar,
    Sphere,
}

impl From<GeometryName> for Geometry {
    fn from(g: GeometryName) -> Self {
        match g {
            GeometryName::Planar => Geometry::Planar,
            GeometryName::Sphere => Geometry::Sphere,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub geometry: GeometryName,
    /// Kind of the period column.
    pub period_kind: PeriodKind,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { geometry: GeometryName::Sphere, period_kind: PeriodKind::T1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub time_column: String,
    pub lon_column: String,
    pub lat_column: String,
    pub hs_column: String,
    pub period_column: String,
    /// Keep one record per this many hours; 0 keeps everything.
    pub thin_hours: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            time_column: "time".into(),
            lon_column: "lon".into(),
            lat_column: "lat".into(),
            hs_column: "hs".into(),
            period_column: "t1".into(),
            thin_hours: 24.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshConfig {
    /// Extension zone width in location units.
    pub extension_width: f64,
    pub extension_spacing: Option<f64>,
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { extension_width: 3.0, extension_spacing: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub order: usize,
    pub rho_order: usize,
    pub rational_order: usize,
    pub rho_method: RhoMethod,
    pub shift_radius: f64,
    pub alpha_init: f64,
    pub alpha_fixed: Option<f64>,
    pub nugget_init: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            order: 0,
            rho_order: 0,
            rational_order: 2,
            rho_method: RhoMethod::Pointwise,
            shift_radius: 0.0,
            alpha_init: 2.0,
            alpha_fixed: None,
            nugget_init: 1e-2,
            max_iter: 500,
            grad_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub realizations: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { realizations: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Traversal {
    ToEurope,
    ToAmerica,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskConfig {
    pub kind: RiskKind,
    pub model: ModelChoice,
    /// Polyline of the route, travelled in order when heading to Europe.
    pub waypoints: Vec<[f64; 2]>,
    pub points: usize,
    /// Ship speed in m/s.
    pub speed: f64,
    /// Voyage duration; derived from the route length and speed when absent.
    pub duration_hours: Option<f64>,
    /// Metres per location unit for planar routes.
    pub planar_unit_m: f64,
    pub direction: Traversal,
    pub realizations: usize,
    pub repeats: usize,
    /// Waypoints further than this from every model location are an error.
    pub snap_max_distance: Option<f64>,
    /// CSV `lon,lat,theta_deg` of propagation directions; gradient of mean log Hs when absent.
    pub directions: Option<String>,
    pub gradient_neighbours: usize,
    pub fatigue: FatigueConfig,
    pub broaching: BroachingConfig,
    pub cutoff: CutoffPolicy,
}

impl Default for RiskConfig {
    fn default() -> Self {
        RiskConfig {
            kind: RiskKind::Fatigue,
            model: ModelChoice::Bivariate,
            waypoints: vec![[-74.0, 40.0], [-9.0, 47.0]],
            points: 100,
            speed: 10.0,
            duration_hours: None,
            planar_unit_m: 1.0,
            direction: Traversal::Both,
            realizations: 200,
            repeats: 20,
            snap_max_distance: None,
            directions: None,
            gradient_neighbours: 8,
            fatigue: FatigueConfig::default(),
            broaching: BroachingConfig::default(),
            cutoff: CutoffPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossCorrConfig {
    pub shift_radius: f64,
}

impl Default for CrossCorrConfig {
    fn default() -> Self {
        CrossCorrConfig { shift_radius: 1.5 }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: Option<&std::path::Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_toml(&std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
            None => Ok(Config::default()),
        }
    }

    /// SHA-256 of the canonical TOML rendering of the effective configuration.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let text = toml::to_string(self).expect("config serialises");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
