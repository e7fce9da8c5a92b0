//! Spatially varying parameters as cosine-basis regressions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned chart box with `origin` at its lower-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub origin: [f64; 2],
    pub extent: [f64; 2],
}

impl BoundingBox {
    pub fn new(origin: [f64; 2], extent: [f64; 2]) -> Result<Self> {
        if !(extent[0] > 0.0 && extent[1] > 0.0) || !origin[0].is_finite() || !origin[1].is_finite() {
            return Err(Error::Config("bounding box extents must be positive".into()));
        }
        Ok(BoundingBox { origin, extent })
    }

    /// Smallest box containing the points.
    pub fn from_points(points: &[[f64; 2]]) -> Result<Self> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in points {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        BoundingBox::new(lo, [hi[0] - lo[0], hi[1] - lo[1]])
    }
}

/// `f(s) = Σ_n Σ_p β_np cos(nπ s₁/S₁) cos(pπ s₂/S₂)` with `s` measured from the box origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosineField {
    k: usize,
    /// Row-major `(k+1)×(k+1)`, entry `n*(k+1) + p`.
    coefficients: Vec<f64>,
    bbox: BoundingBox,
}

impl CosineField {
    pub fn zeros(k: usize, bbox: BoundingBox) -> Self {
        CosineField { k, coefficients: vec![0.0; (k + 1) * (k + 1)], bbox }
    }

    pub fn constant(k: usize, bbox: BoundingBox, c: f64) -> Self {
        let mut f = Self::zeros(k, bbox);
        f.coefficients[0] = c;
        f
    }

    pub fn from_coefficients(k: usize, bbox: BoundingBox, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != (k + 1) * (k + 1) {
            return Err(Error::Dimension(format!("expected {} coefficients, got {}", (k + 1) * (k + 1), coefficients.len())));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::ParameterOverflow("non-finite cosine coefficient".into()));
        }
        Ok(CosineField { k, coefficients, bbox })
    }

    pub fn order(&self) -> usize {
        self.k
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn beta(&self, n: usize, p: usize) -> f64 {
        self.coefficients[n * (self.k + 1) + p]
    }

    pub fn set_beta(&mut self, n: usize, p: usize, v: f64) {
        self.coefficients[n * (self.k + 1) + p] = v;
    }

    /// Basis function values at `s`, in coefficient order.
    pub fn basis(&self, s: [f64; 2]) -> Vec<f64> {
        let k1 = self.k + 1;
        let u = (s[0] - self.bbox.origin[0]) / self.bbox.extent[0];
        let v = (s[1] - self.bbox.origin[1]) / self.bbox.extent[1];
        let cu: Vec<f64> = (0..k1).map(|n| (n as f64 * PI * u).cos()).collect();
        let cv: Vec<f64> = (0..k1).map(|p| (p as f64 * PI * v).cos()).collect();
        let mut out = Vec::with_capacity(k1 * k1);
        for n in 0..k1 {
            for p in 0..k1 {
                out.push(cu[n] * cv[p]);
            }
        }
        out
    }

    pub fn eval(&self, s: [f64; 2]) -> f64 {
        self.basis(s).iter().zip(&self.coefficients).map(|(b, c)| b * c).sum()
    }
}

pub fn eval_cosine(field: &CosineField, s: [f64; 2]) -> f64 {
    field.eval(s)
}

/// The three fields defining `H̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeformationParams {
    pub h1: CosineField,
    pub h2: CosineField,
    pub h3: CosineField,
}

/// Local operator coefficients at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HKappa {
    pub h: [[f64; 2]; 2],
    pub h_tilde: [[f64; 2]; 2],
    pub kappa: f64,
}

/// Builds `H̃`, `κ = det(H̃)^{-1/2}` and `H = κ² H̃` from the raw field values.
pub fn h_kappa_from_values(h1: f64, h2: f64, h3: f64) -> Result<HKappa> {
    let a = h1.exp();
    let d = h2.exp();
    let g = (0.5 * (h1 + h2)).exp();
    // 2S(h3) − 1 = tanh(h3/2), and 1 − tanh² = sech²
    let off = 0.5 * h3;
    let b = off.tanh() * g;
    let sech2 = {
        let e = (-off.abs()).exp();
        4.0 * e * e / ((1.0 + e * e) * (1.0 + e * e))
    };
    let det = (h1 + h2).exp() * sech2;
    let kappa = det.sqrt().recip();
    let k2 = 1.0 / det;
    let vals = [a, b, d, det, kappa, k2];
    if vals.iter().any(|v| !v.is_finite()) || !(det > 0.0) {
        return Err(Error::ParameterOverflow(format!("h = ({h1}, {h2}, {h3})")));
    }
    Ok(HKappa {
        h_tilde: [[a, b], [b, d]],
        h: [[k2 * a, k2 * b], [k2 * b, k2 * d]],
        kappa,
    })
}

impl DeformationParams {
    /// Isotropic stationary parameters with all fields constant.
    pub fn isotropic(k: usize, bbox: BoundingBox, h: f64) -> Self {
        DeformationParams {
            h1: CosineField::constant(k, bbox, h),
            h2: CosineField::constant(k, bbox, h),
            h3: CosineField::zeros(k, bbox),
        }
    }

    pub fn order(&self) -> usize {
        self.h1.order()
    }

    pub fn eval(&self, s: [f64; 2]) -> Result<HKappa> {
        h_kappa_from_values(self.h1.eval(s), self.h2.eval(s), self.h3.eval(s))
    }

    /// All coefficients as one vector: h1, then h2, then h3.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.h1.coefficients().to_vec();
        v.extend_from_slice(self.h2.coefficients());
        v.extend_from_slice(self.h3.coefficients());
        v
    }

    pub fn from_vec(k: usize, bbox: BoundingBox, v: &[f64]) -> Result<Self> {
        let m = (k + 1) * (k + 1);
        if v.len() != 3 * m {
            return Err(Error::Dimension("deformation coefficient count".into()));
        }
        Ok(DeformationParams {
            h1: CosineField::from_coefficients(k, bbox, v[..m].to_vec())?,
            h2: CosineField::from_coefficients(k, bbox, v[m..2 * m].to_vec())?,
            h3: CosineField::from_coefficients(k, bbox, v[2 * m..].to_vec())?,
        })
    }
}

pub fn eval_h_kappa(d: &DeformationParams, s: [f64; 2]) -> Result<HKappa> {
    d.eval(s)
}

/// Cross-correlation parameter field ρ(s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrField {
    pub rho: CosineField,
}

impl CrossCorrField {
    pub fn constant(k: usize, bbox: BoundingBox, rho: f64) -> Self {
        CrossCorrField { rho: CosineField::constant(k, bbox, rho) }
    }

    pub fn eval(&self, s: [f64; 2]) -> f64 {
        self.rho.eval(s)
    }
}

/// Correlation range of an isotropic stationary field with `h1 = h2 = h`, `h3 = 0`,
/// using the Matérn range `√(8ν)/κ` with `ν = α − 1`.
pub fn isotropic_range(h: f64, alpha: f64) -> f64 {
    (8.0 * (alpha - 1.0)).sqrt() * (0.5 * h).exp()
}

/// Inverse of [`isotropic_range`].
pub fn isotropic_h_for_range(range: f64, alpha: f64) -> f64 {
    2.0 * (range / (8.0 * (alpha - 1.0)).sqrt()).ln()
}
