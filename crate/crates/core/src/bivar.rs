//! Bivariate model for standardised log Hs (X) and log period (Y).
//!
//! `√(1+ρ²) 𝓛_X^{α/2}(τ_X X) − ρ 𝓛_Y^{β/2}(τ_Y Y) = 𝒲`, `𝓛_Y^{β/2}(τ_Y Y) = 𝒱`.
//! With `P_X = D P_l`, `D = diag(√(1+ρᵢ²))`, the latent precision is
//! `Q̃ = [P_Xᵀ C⁻¹ P_X, −P_Xᵀ C⁻² C_ρ Q_l; ·, Q_lᵀ (C⁻¹ + C_ρ C⁻³ C_ρ) Q_l]`.

use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_lumped_rho, assemble_mass};
use crate::fractional::mass_noise;
use crate::latent::{combined_row, LatentField, SelectedForms};
use crate::mesh::Mesh;
use crate::paramfield::{BoundingBox, CosineField, CrossCorrField, DeformationParams};
use crate::sparse::{factorize, takahashi, CsrMatrix, SelectedInverse, SparseChol};

/// One marginal: operator parameters plus the pointwise standardisation.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSpec {
    pub deformation: DeformationParams,
    pub alpha: f64,
    pub nugget: f64,
    /// Per-location sample mean of the log field.
    pub mean: Vec<f64>,
    /// Per-location sample variance of the log field.
    pub var: Vec<f64>,
}

impl MarginalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 1.0) {
            return Err(Error::Config(format!("smoothness must be at least 1, got {}", self.alpha)));
        }
        if !(self.nugget >= 0.0) {
            return Err(Error::Config(format!("nugget variance must be nonnegative, got {}", self.nugget)));
        }
        if self.mean.len() != self.var.len() {
            return Err(Error::Dimension("mean and variance fields differ in length".into()));
        }
        if let Some(j) = self.var.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Data(format!("non-positive sample variance at location {j}")));
        }
        Ok(())
    }
}

/// `exp(mean + √var · z)` per location.
pub fn destandardize(z: &[f64], spec: &MarginalSpec) -> Result<Vec<f64>> {
    if z.len() != spec.mean.len() || z.len() != spec.var.len() {
        return Err(Error::Data(format!("field has {} locations but statistics cover {}", z.len(), spec.mean.len())));
    }
    Ok(z.iter().zip(&spec.mean).zip(&spec.var).map(|((z, m), v)| (m + v.sqrt() * z).exp()).collect())
}

/// `(log x − mean)/√var` per location.
pub fn standardize(x: &[f64], spec: &MarginalSpec) -> Result<Vec<f64>> {
    if x.len() != spec.mean.len() || x.len() != spec.var.len() {
        return Err(Error::Data(format!("field has {} locations but statistics cover {}", x.len(), spec.mean.len())));
    }
    Ok(x.iter().zip(&spec.mean).zip(&spec.var).map(|((x, m), v)| (x.ln() - m) / v.sqrt()).collect())
}

/// Pointwise correlations with the marginal variances used to normalise them.
#[derive(Debug, Clone)]
pub struct CrossCorr {
    pub gamma: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_y: Vec<f64>,
    /// Bilinear forms that needed a solve because the selected pattern was too small.
    pub fallback_solves: usize,
}

#[derive(Debug)]
pub struct BivariateModel {
    pub x: Arc<LatentField>,
    pub y: Arc<LatentField>,
    pub rho: CrossCorrField,
    /// `(C_ρ)ᵢᵢ / Cᵢᵢ` on free nodes.
    pub rho_nodal: Vec<f64>,
    /// `√(1 + ρᵢ²)` on free nodes.
    pub d: Vec<f64>,
    pub q_tilde: CsrMatrix,
    factor: OnceLock<std::result::Result<(SparseChol, SelectedInverse), String>>,
}

impl BivariateModel {
    pub fn build(mesh: &Mesh, x: &MarginalSpec, y: &MarginalSpec, rho: &CrossCorrField, m: usize) -> Result<Self> {
        x.validate()?;
        y.validate()?;
        let lx = LatentField::build(mesh, &x.deformation, x.alpha, m)?;
        let ly = LatentField::build(mesh, &y.deformation, y.alpha, m)?;
        Self::from_fields(mesh, Arc::new(lx), Arc::new(ly), rho)
    }

    /// Couples two already built marginals on the same mesh.
    pub fn from_fields(mesh: &Mesh, x: Arc<LatentField>, y: Arc<LatentField>, rho: &CrossCorrField) -> Result<Self> {
        if x.free != y.free || x.n_vertices != mesh.num_vertices() {
            return Err(Error::Dimension("both marginals must share one mesh".into()));
        }
        let c_full = assemble_mass(mesh)?;
        let cr_full = assemble_lumped_rho(mesh, rho);
        let rho_nodal: Vec<f64> = x.free.iter().map(|&i| cr_full[i] / c_full[i]).collect();
        if rho_nodal.iter().any(|r| !r.is_finite()) {
            return Err(Error::ParameterOverflow("cross-correlation field is not finite".into()));
        }
        let d: Vec<f64> = rho_nodal.iter().map(|r| (1.0 + r * r).sqrt()).collect();
        let c = &x.op.c;
        let pl = &x.op.pl;
        let ql = &y.op.pl;
        let wxx: Vec<f64> = d.iter().zip(c).map(|(d, c)| d * d / c).collect();
        let wxy: Vec<f64> = d.iter().zip(&rho_nodal).zip(c).map(|((d, r), c)| -d * r / c).collect();
        let wyy: Vec<f64> = rho_nodal.iter().zip(c).map(|(r, c)| (1.0 + r * r) / c).collect();
        let plt = pl.transpose();
        let qxx = plt.matmul(&pl.scale_rows(&wxx));
        let qxy = plt.matmul(&ql.scale_rows(&wxy));
        let qyy = ql.transpose().matmul(&ql.scale_rows(&wyy));
        let q_tilde = CsrMatrix::block2(&qxx, &qxy, &qxy.transpose(), &qyy).symmetrized();
        Ok(BivariateModel { x, y, rho: rho.clone(), rho_nodal, d, q_tilde, factor: OnceLock::new() })
    }

    pub fn n(&self) -> usize {
        self.x.n()
    }

    /// Cholesky factor of `Q̃` and its selected inverse, computed on first use.
    pub fn factor(&self) -> Result<(&SparseChol, &SelectedInverse)> {
        let r = self.factor.get_or_init(|| {
            let chol = factorize(&self.q_tilde).map_err(|e| e.to_string())?;
            let sel = takahashi(&chol);
            Ok((chol, sel))
        });
        match r {
            Ok((c, s)) => Ok((c, s)),
            Err(msg) => Err(Error::Model(format!("joint latent precision: {msg}"))),
        }
    }

    /// Block-diagonal map `[T_X⁻¹ P_r, 0; 0, T_Y⁻¹ Q_r]` from latent to nodal weights.
    pub fn weights_map(&self) -> CsrMatrix {
        let n = self.n();
        CsrMatrix::block2(&self.x.weights, &CsrMatrix::zeros(n, n), &CsrMatrix::zeros(n, n), &self.y.weights)
    }

    /// Realisation `r` of the seeded family, as vertex fields `(U_X, U_Y)`.
    ///
    /// `X` uses noise stream `2r` and `Y` stream `2r+1`, so with `ρ ≡ 0`
    /// the `X` draw is the univariate draw of the same index.
    pub fn sample_indexed(&self, seed: u64, r: u64) -> Result<(Vec<f64>, Vec<f64>)> {
        let sc: Vec<f64> = self.x.op.c.iter().map(|v| v.sqrt()).collect();
        let w = mass_noise(&sc, seed, 2 * r);
        let v = mass_noise(&sc, seed, 2 * r + 1);
        let uy = self.y.op.solve_pl(&v)?;
        let rhs: Vec<f64> = (0..self.n()).map(|i| (w[i] + self.rho_nodal[i] * v[i]) / self.d[i]).collect();
        let ux = self.x.op.solve_pl(&rhs)?;
        Ok((self.x.lift(&self.x.weights.mul_vec(&ux)), self.y.lift(&self.y.weights.mul_vec(&uy))))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        (0..n as u64).into_par_iter().map(|r| self.sample_indexed(seed, r)).collect()
    }

    /// Correlation of X and Y at each row of the vertex-indexed observation matrix.
    pub fn pointwise_crosscorr(&self, a: &CsrMatrix) -> Result<CrossCorr> {
        let af = self.x.free_columns(a)?;
        let (chol, sel) = self.factor()?;
        let forms = SelectedForms::new(chol, sel);
        let n = self.n();
        let rows: Vec<(f64, f64, f64)> = (0..af.nrows())
            .into_par_iter()
            .map(|j| {
                let u = combined_row(af.row(j), &self.x.weights, 0);
                let w = combined_row(af.row(j), &self.y.weights, n);
                let vx = forms.bilinear(&u, &u);
                let vy = forms.bilinear(&w, &w);
                let cxy = forms.bilinear(&u, &w);
                let g = if vx > 0.0 && vy > 0.0 { (cxy / (vx * vy).sqrt()).clamp(-1.0, 1.0) } else { 0.0 };
                (g, vx, vy)
            })
            .collect();
        Ok(CrossCorr {
            gamma: rows.iter().map(|r| r.0).collect(),
            var_x: rows.iter().map(|r| r.1).collect(),
            var_y: rows.iter().map(|r| r.2).collect(),
            fallback_solves: forms.fallbacks(),
        })
    }
}

/// Everything needed to rebuild a fitted model, apart from the mesh itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub mesh_path: String,
    pub order: usize,
    pub x: MarginalSpec,
    pub y: MarginalSpec,
    pub rho: CrossCorrField,
    pub locations: Vec<[f64; 2]>,
}

fn csv_line(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

fn parse_csv(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse { line, msg: format!("bad number '{t}'") }))
        .collect()
}

impl ModelFile {
    pub fn to_text(&self) -> String {
        let bbox = self.x.deformation.h1.bbox();
        let mut s = String::new();
        let _ = writeln!(s, "# seafield model");
        let _ = writeln!(s, "mesh = {}", self.mesh_path);
        let _ = writeln!(s, "order = {}", self.order);
        let _ = writeln!(s, "k = {}", self.x.deformation.order());
        let _ = writeln!(s, "bbox = {}", csv_line(&[bbox.origin[0], bbox.origin[1], bbox.extent[0], bbox.extent[1]]));
        for (name, spec) in [("x", &self.x), ("y", &self.y)] {
            let _ = writeln!(s, "[{name}]");
            let _ = writeln!(s, "alpha = {:e}", spec.alpha);
            let _ = writeln!(s, "nugget = {:e}", spec.nugget);
            let _ = writeln!(s, "h1 = {}", csv_line(spec.deformation.h1.coefficients()));
            let _ = writeln!(s, "h2 = {}", csv_line(spec.deformation.h2.coefficients()));
            let _ = writeln!(s, "h3 = {}", csv_line(spec.deformation.h3.coefficients()));
        }
        let _ = writeln!(s, "[rho]");
        let _ = writeln!(s, "k = {}", self.rho.rho.order());
        let _ = writeln!(s, "rho = {}", csv_line(self.rho.rho.coefficients()));
        let _ = writeln!(s, "[stats]");
        let _ = writeln!(s, "lon,lat,mean_x,var_x,mean_y,var_y");
        for j in 0..self.locations.len() {
            let l = self.locations[j];
            let _ = writeln!(s, "{}", csv_line(&[l[0], l[1], self.x.mean[j], self.x.var[j], self.y.mean[j], self.y.var[j]]));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut top = std::collections::HashMap::new();
        let mut blocks: std::collections::HashMap<String, std::collections::HashMap<String, (usize, String)>> = Default::default();
        let mut stats: Vec<(usize, Vec<f64>)> = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let ln = ln + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].to_string();
                continue;
            }
            if section == "stats" {
                if line.starts_with("lon") {
                    continue;
                }
                stats.push((ln, parse_csv(line, ln)?));
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(Error::Parse { line: ln, msg: "expected key = value".into() })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if section.is_empty() {
                top.insert(k, (ln, v));
            } else {
                blocks.entry(section.clone()).or_default().insert(k, (ln, v));
            }
        }
        let get = |map: &std::collections::HashMap<String, (usize, String)>, key: &str| -> Result<(usize, String)> {
            map.get(key).cloned().ok_or(Error::Parse { line: 0, msg: format!("missing key '{key}'") })
        };
        let num = |(ln, v): (usize, String)| -> Result<f64> { v.parse::<f64>().map_err(|_| Error::Parse { line: ln, msg: format!("bad number '{v}'") }) };
        let int = |(ln, v): (usize, String)| -> Result<usize> { v.parse::<usize>().map_err(|_| Error::Parse { line: ln, msg: format!("bad integer '{v}'") }) };
        let mesh_path = get(&top, "mesh")?.1;
        let order = int(get(&top, "order")?)?;
        let k = int(get(&top, "k")?)?;
        let (bl, bv) = get(&top, "bbox")?;
        let b = parse_csv(&bv, bl)?;
        if b.len() != 4 {
            return Err(Error::Parse { line: bl, msg: "bbox needs four numbers".into() });
        }
        let bbox = BoundingBox::new([b[0], b[1]], [b[2], b[3]])?;
        let empty = std::collections::HashMap::new();
        let marginal = |name: &str| -> Result<MarginalSpec> {
            let m = blocks.get(name).unwrap_or(&empty);
            let field = |key: &str| -> Result<CosineField> {
                let (ln, v) = get(m, key)?;
                CosineField::from_coefficients(k, bbox, parse_csv(&v, ln)?)
            };
            Ok(MarginalSpec {
                deformation: DeformationParams { h1: field("h1")?, h2: field("h2")?, h3: field("h3")? },
                alpha: num(get(m, "alpha")?)?,
                nugget: num(get(m, "nugget")?)?,
                mean: vec![],
                var: vec![],
            })
        };
        let mut x = marginal("x")?;
        let mut y = marginal("y")?;
        let rb = blocks.get("rho").unwrap_or(&empty);
        let kr = int(get(rb, "k")?)?;
        let (rl, rv) = get(rb, "rho")?;
        let rho = CrossCorrField { rho: CosineField::from_coefficients(kr, bbox, parse_csv(&rv, rl)?)? };
        let mut locations = Vec::with_capacity(stats.len());
        for (ln, row) in stats {
            if row.len() != 6 {
                return Err(Error::Parse { line: ln, msg: "stats rows need six columns".into() });
            }
            locations.push([row[0], row[1]]);
            x.mean.push(row[2]);
            x.var.push(row[3]);
            y.mean.push(row[4]);
            y.var.push(row[5]);
        }
        Ok(ModelFile { mesh_path, order, x, y, rho, locations })
    }
}
