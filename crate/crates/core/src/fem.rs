//! Piecewise linear finite element matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::paramfield::{CrossCorrField, DeformationParams, HKappa};
use crate::sparse::CsrMatrix;

/// Lumped mass `C`, reaction `B`, diffusion `G` and `K = B + G`.
#[derive(Debug, Clone)]
pub struct OperatorMatrices {
    pub c: Vec<f64>,
    pub c_inv: Vec<f64>,
    pub b: CsrMatrix,
    pub g: CsrMatrix,
    pub k: CsrMatrix,
    /// Row sums of the reaction term before any restriction.
    pub b_lumped: Vec<f64>,
}

/// Lumped cross-coupling mass and `K_ρ = −C⁻¹ C_ρ K_Y`.
#[derive(Debug, Clone)]
pub struct CrossMatrices {
    pub c_rho: CsrMatrix,
    pub k_rho: CsrMatrix,
}

/// Per-triangle 2D geometry: signed double area and barycentric gradients.
fn element_geometry(mesh: &Mesh, t: usize) -> (f64, [[f64; 2]; 3]) {
    let q = mesh.local_coords(t);
    let d = (q[1][0] - q[0][0]) * (q[2][1] - q[0][1]) - (q[1][1] - q[0][1]) * (q[2][0] - q[0][0]);
    let g = [
        [(q[1][1] - q[2][1]) / d, (q[2][0] - q[1][0]) / d],
        [(q[2][1] - q[0][1]) / d, (q[0][0] - q[2][0]) / d],
        [(q[0][1] - q[1][1]) / d, (q[1][0] - q[0][0]) / d],
    ];
    (0.5 * d.abs(), g)
}

pub fn assemble_mass(mesh: &Mesh) -> Result<Vec<f64>> {
    let mut c = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(t);
        if !(a > 0.0) {
            return Err(Error::Assembly { triangle: t, msg: "zero area".into() });
        }
        for &v in &tri.vertices {
            c[v] += a / 3.0;
        }
    }
    Ok(c)
}

/// Consistent mass `⟨φ_i, φ_j⟩`, kept for testing against the lumped form.
pub fn assemble_consistent_mass(mesh: &Mesh) -> CsrMatrix {
    let mut t = Vec::with_capacity(9 * mesh.num_triangles());
    for (e, tri) in mesh.triangles().iter().enumerate() {
        let a = mesh.triangle_area(e);
        for i in 0..3 {
            for j in 0..3 {
                let m = if i == j { a / 6.0 } else { a / 12.0 };
                t.push((tri.vertices[i], tri.vertices[j], m));
            }
        }
    }
    let n = mesh.num_vertices();
    CsrMatrix::from_triplets(n, n, &t)
}

/// Assembles B and G with one coefficient pair per triangle.
///
/// `coef(t)` returns `κ` and `H` at the centroid of triangle `t`. The
/// operator prefactor `κ^{2/α−2}` multiplies both forms, so the reaction
/// weight is `κ^{2/α}` and the diffusion tensor is `κ^{2/α−2} H`.
pub fn assemble_operator_with<F>(mesh: &Mesh, alpha: f64, coef: F) -> Result<OperatorMatrices>
where
    F: Fn(usize) -> Result<HKappa> + Sync,
{
    if !(alpha >= 1.0) {
        return Err(Error::Config(format!("alpha must be at least 1, got {alpha}")));
    }
    let n = mesh.num_vertices();
    let c = assemble_mass(mesh)?;
    let locals: Vec<Result<[[f64; 9]; 2]>> = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let hk = coef(t)?;
            let h = hk.h;
            let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
            if !(h[0][0] > 0.0 && det > 0.0 && det.is_finite() && hk.kappa > 0.0 && hk.kappa.is_finite()) {
                return Err(Error::Assembly { triangle: t, msg: "H is not positive definite".into() });
            }
            let (area, grad) = element_geometry(mesh, t);
            let cb = hk.kappa.powf(2.0 / alpha);
            let cg = hk.kappa.powf(2.0 / alpha - 2.0);
            let mut be = [0.0; 9];
            let mut ge = [0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    be[3 * i + j] = cb * if i == j { area / 6.0 } else { area / 12.0 };
                    let hg = [h[0][0] * grad[j][0] + h[0][1] * grad[j][1], h[1][0] * grad[j][0] + h[1][1] * grad[j][1]];
                    ge[3 * i + j] = cg * area * (grad[i][0] * hg[0] + grad[i][1] * hg[1]);
                }
            }
            Ok([be, ge])
        })
        .collect();
    let mut tb = Vec::with_capacity(9 * mesh.num_triangles());
    let mut tg = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, loc) in locals.into_iter().enumerate() {
        let [be, ge] = loc?;
        let v = mesh.triangles()[t].vertices;
        for i in 0..3 {
            for j in 0..3 {
                tb.push((v[i], v[j], be[3 * i + j]));
                tg.push((v[i], v[j], ge[3 * i + j]));
            }
        }
    }
    let b = CsrMatrix::from_triplets(n, n, &tb);
    let g = CsrMatrix::from_triplets(n, n, &tg);
    let k = b.add(&g);
    let c_inv = c.iter().map(|v| 1.0 / v).collect();
    let b_lumped = (0..n).map(|i| b.row(i).1.iter().sum()).collect();
    Ok(OperatorMatrices { c, c_inv, b, g, k, b_lumped })
}

/// Assembles the operator for the deformation fields, evaluated at chart centroids.
pub fn assemble_operator(mesh: &Mesh, d: &DeformationParams, alpha: f64) -> Result<OperatorMatrices> {
    assemble_operator_with(mesh, alpha, |t| {
        d.eval(mesh.chart_centroid(t)).map_err(|e| Error::Assembly { triangle: t, msg: e.to_string() })
    })
}

/// Constant `κ` and `H` everywhere.
pub fn assemble_operator_const(mesh: &Mesh, kappa: f64, h: [[f64; 2]; 2], alpha: f64) -> Result<OperatorMatrices> {
    assemble_operator_with(mesh, alpha, |_| Ok(HKappa { h, h_tilde: h, kappa }))
}

/// Mass-lumped `⟨ρ φ_i, φ_j⟩` with ρ evaluated at centroids.
pub fn assemble_lumped_rho(mesh: &Mesh, rho: &CrossCorrField) -> Vec<f64> {
    let mut c = vec![0.0; mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w = rho.eval(mesh.chart_centroid(t)) * mesh.triangle_area(t) / 3.0;
        for &v in &tri.vertices {
            c[v] += w;
        }
    }
    c
}

pub fn assemble_cross(mesh: &Mesh, rho: &CrossCorrField, k_y: &CsrMatrix, c: &[f64]) -> Result<CrossMatrices> {
    let n = mesh.num_vertices();
    if k_y.nrows() != n || k_y.ncols() != n || c.len() != n {
        return Err(Error::Dimension("cross assembly needs vertex-sized K_Y and C".into()));
    }
    let cr = assemble_lumped_rho(mesh, rho);
    let scale: Vec<f64> = cr.iter().zip(c).map(|(r, ci)| -r / ci).collect();
    Ok(CrossMatrices { c_rho: CsrMatrix::diag(&cr), k_rho: k_y.scale_rows(&scale) })
}

impl OperatorMatrices {
    /// Removes boundary rows and columns (homogeneous Dirichlet condition).
    pub fn restrict(&self, free: &[usize]) -> OperatorMatrices {
        let c: Vec<f64> = free.iter().map(|&i| self.c[i]).collect();
        OperatorMatrices {
            c_inv: c.iter().map(|v| 1.0 / v).collect(),
            c,
            b: self.b.select(free, free),
            g: self.g.select(free, free),
            k: self.k.select(free, free),
            b_lumped: free.iter().map(|&i| self.b_lumped[i]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }
}
