//! Unit-variance univariate latent model.
//!
//! Nodal weights are `U = T⁻¹ P_r Ũ` with `Ũ ~ N(0, Q⁻¹)`, `Q = P_lᵀ C⁻¹ P_l`
//! and `T = diag(τ)` chosen so every free node has unit marginal variance.
//! Boundary vertices carry the homogeneous Dirichlet value zero.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_operator, OperatorMatrices};
use crate::fractional::{mass_noise, FractionalOperator};
use crate::mesh::Mesh;
use crate::paramfield::DeformationParams;
use crate::sparse::{factorize, takahashi, CsrMatrix, SelectedInverse, SparseChol};

/// Bilinear forms `uᵀ Q⁻¹ w` read from a selected inverse.
///
/// Entries outside the selected pattern are replaced by one solve with `Q`;
/// the number of such fallbacks is counted.
#[derive(Debug)]
pub struct SelectedForms<'a> {
    pub chol: &'a SparseChol,
    pub sel: &'a SelectedInverse,
    fallbacks: AtomicUsize,
}

impl<'a> SelectedForms<'a> {
    pub fn new(chol: &'a SparseChol, sel: &'a SelectedInverse) -> Self {
        SelectedForms { chol, sel, fallbacks: AtomicUsize::new(0) }
    }

    pub fn bilinear(&self, u: &[(usize, f64)], w: &[(usize, f64)]) -> f64 {
        let mut s = 0.0;
        for &(a, ua) in u {
            for &(b, wb) in w {
                match self.sel.get(a, b) {
                    Some(v) => s += ua * v * wb,
                    None => return self.solve_form(u, w),
                }
            }
        }
        s
    }

    fn solve_form(&self, u: &[(usize, f64)], w: &[(usize, f64)]) -> f64 {
        self.fallbacks.fetch_add(1, Ordering::Relaxed);
        let mut rhs = vec![0.0; self.chol.n()];
        for &(b, wb) in w {
            rhs[b] += wb;
        }
        let x = self.chol.solve(&rhs);
        u.iter().map(|&(a, ua)| ua * x[a]).sum()
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks.load(Ordering::Relaxed)
    }
}

/// Sparse row `i` of `m` as `(column + offset, value)` pairs.
pub fn sparse_row(m: &CsrMatrix, i: usize, offset: usize) -> Vec<(usize, f64)> {
    let (c, v) = m.row(i);
    c.iter().zip(v).map(|(&j, &a)| (j + offset, a)).collect()
}

/// Row `r` of `a · m` as sparse pairs, for a sparse observation row.
pub fn combined_row(a_row: (&[usize], &[f64]), m: &CsrMatrix, offset: usize) -> Vec<(usize, f64)> {
    let mut acc: Vec<(usize, f64)> = Vec::new();
    for (&k, &ak) in a_row.0.iter().zip(a_row.1) {
        let (c, v) = m.row(k);
        for (&j, &mj) in c.iter().zip(v) {
            acc.push((j + offset, ak * mj));
        }
    }
    acc.sort_by_key(|p| p.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(acc.len());
    for (j, v) in acc {
        match out.last_mut() {
            Some(l) if l.0 == j => l.1 += v,
            _ => out.push((j, v)),
        }
    }
    out
}

#[derive(Debug)]
pub struct LatentField {
    pub free: Vec<usize>,
    pub n_vertices: usize,
    pub alpha: f64,
    pub op: FractionalOperator,
    /// Marginal standard deviations of `P_r Ũ` before normalisation.
    pub tau: Vec<f64>,
    /// `T⁻¹ P_r`.
    pub weights: CsrMatrix,
    chol: SparseChol,
    pub fallback_solves: usize,
}

impl LatentField {
    pub fn build(mesh: &Mesh, d: &DeformationParams, alpha: f64, m: usize) -> Result<Self> {
        let ops = assemble_operator(mesh, d, alpha)?;
        Self::from_operator(&ops, mesh.free_vertices(), alpha, m)
    }

    /// Builds from vertex-sized matrices, keeping the `free` vertices.
    pub fn from_operator(full: &OperatorMatrices, free: Vec<usize>, alpha: f64, m: usize) -> Result<Self> {
        if free.is_empty() {
            return Err(Error::Mesh("mesh has no free vertices".into()));
        }
        let ops = full.restrict(&free);
        let op = FractionalOperator::new(&ops, alpha, m)?;
        let chol = factorize(op.latent_precision()).map_err(|e| match e {
            Error::NotSpd { pivot } => Error::Model(format!("latent precision not positive definite at node {pivot}")),
            other => other,
        })?;
        let sel = takahashi(&chol);
        let forms = SelectedForms::new(&chol, &sel);
        let var: Vec<f64> = (0..ops.n())
            .into_par_iter()
            .map(|i| {
                let r = sparse_row(&op.pr, i, 0);
                forms.bilinear(&r, &r)
            })
            .collect();
        if let Some(i) = var.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::Model(format!("non-positive latent variance at node {}", free[i])));
        }
        let fallback_solves = forms.fallbacks();
        let tau: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
        let inv: Vec<f64> = tau.iter().map(|t| 1.0 / t).collect();
        let weights = op.pr.scale_rows(&inv);
        Ok(LatentField { free, n_vertices: full.n(), alpha, op, tau, weights, chol, fallback_solves })
    }

    /// Number of free nodes.
    pub fn n(&self) -> usize {
        self.free.len()
    }

    pub fn precision(&self) -> &CsrMatrix {
        self.op.latent_precision()
    }

    pub fn chol(&self) -> &SparseChol {
        &self.chol
    }

    /// Keeps only the columns of a vertex-indexed observation matrix that belong to free nodes.
    pub fn free_columns(&self, a: &CsrMatrix) -> Result<CsrMatrix> {
        if a.ncols() != self.n_vertices {
            return Err(Error::Dimension(format!("observation matrix has {} columns, mesh has {} vertices", a.ncols(), self.n_vertices)));
        }
        let rows: Vec<usize> = (0..a.nrows()).collect();
        Ok(a.select(&rows, &self.free))
    }

    /// Free-node values extended by zeros to all vertices.
    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vertices];
        for (&i, &v) in self.free.iter().zip(u) {
            out[i] = v;
        }
        out
    }

    /// Normalised nodal weights from mass-weighted noise `w ~ N(0, C)`.
    pub fn weights_from_noise(&self, w: &[f64]) -> Result<Vec<f64>> {
        let ut = self.op.solve_pl(w)?;
        Ok(self.weights.mul_vec(&ut))
    }

    /// Realisation `r` of the seeded family, on all vertices.
    pub fn sample_indexed(&self, seed: u64, r: u64) -> Result<Vec<f64>> {
        let sc: Vec<f64> = self.op.c.iter().map(|v| v.sqrt()).collect();
        let w = mass_noise(&sc, seed, 2 * r);
        Ok(self.lift(&self.weights_from_noise(&w)?))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        (0..n as u64).into_par_iter().map(|r| self.sample_indexed(seed, r)).collect()
    }
}
