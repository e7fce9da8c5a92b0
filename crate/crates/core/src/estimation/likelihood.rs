//! Gaussian log-likelihood for latent GMRF models with independent noise.
//!
//! For `x = B Ũ + ε`, `Ũ ~ N(0, Q⁻¹)`, `ε ~ N(0, diag(σ²))`:
//! `log p(x) = ½log|Q| − ½log|Q_post| − ½Σlog(2πσ²) − ½xᵀΣ⁻¹x + ½bᵀQ_post⁻¹b`
//! with `Q_post = Q + BᵀΣ⁻¹B` and `b = BᵀΣ⁻¹x`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::bivar::BivariateModel;
use crate::error::{Error, Result};
use crate::latent::LatentField;
use crate::sparse::{factorize, CsrMatrix, SparseChol};

/// Sum of log-likelihoods of independent replicates; `NaN` entries are missing.
pub fn latent_gaussian_loglik(q_chol: &SparseChol, q: &CsrMatrix, b: &CsrMatrix, noise_var: &[f64], reps: &[Vec<f64>]) -> Result<f64> {
    let m = b.nrows();
    if noise_var.len() != m || b.ncols() != q.nrows() {
        return Err(Error::Dimension("observation map, noise and precision sizes disagree".into()));
    }
    if noise_var.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Config("noise variances must be positive".into()));
    }
    let mut groups: BTreeMap<Vec<bool>, Vec<usize>> = BTreeMap::new();
    for (r, x) in reps.iter().enumerate() {
        if x.len() != m {
            return Err(Error::Dimension(format!("replicate {r} has {} values, expected {m}", x.len())));
        }
        groups.entry(x.iter().map(|v| !v.is_nan()).collect()).or_default().push(r);
    }
    let half_logdet_q = 0.5 * q_chol.logdet();
    let mut total = 0.0;
    for (mask, members) in groups {
        let rows: Vec<usize> = (0..m).filter(|&i| mask[i]).collect();
        if rows.is_empty() {
            continue;
        }
        let cols: Vec<usize> = (0..b.ncols()).collect();
        let bg = b.select(&rows, &cols);
        let inv: Vec<f64> = rows.iter().map(|&i| 1.0 / noise_var[i]).collect();
        let post = q.add(&bg.transpose().matmul(&bg.scale_rows(&inv))).symmetrized();
        let chol = factorize(&post)?;
        let constant = half_logdet_q - 0.5 * chol.logdet() - 0.5 * rows.iter().map(|&i| (2.0 * PI * noise_var[i]).ln()).sum::<f64>();
        let part: f64 = members
            .par_iter()
            .map(|&r| {
                let xw: Vec<f64> = rows.iter().zip(&inv).map(|(&i, w)| reps[r][i] * w).collect();
                let quad_x: f64 = rows.iter().zip(&xw).map(|(&i, xw)| reps[r][i] * xw).sum();
                let bv = bg.tr_mul_vec(&xw);
                let sol = chol.solve(&bv);
                let quad_b: f64 = bv.iter().zip(&sol).map(|(a, b)| a * b).sum();
                constant - 0.5 * quad_x + 0.5 * quad_b
            })
            .collect::<Vec<f64>>()
            // sequential sum keeps the result independent of thread scheduling
            .iter()
            .sum();
        total += part;
    }
    Ok(total)
}

/// Log-likelihood of standardised replicates of one field at the rows of `a`.
pub fn marginal_loglik(field: &LatentField, a: &CsrMatrix, nugget: f64, reps: &[Vec<f64>]) -> Result<f64> {
    let b = field.free_columns(a)?.matmul(&field.weights);
    latent_gaussian_loglik(field.chol(), field.precision(), &b, &vec![nugget; a.nrows()], reps)
}

/// Joint log-likelihood of paired replicates `(x_r, y_r)` under the bivariate model.
pub fn joint_loglik(model: &BivariateModel, a: &CsrMatrix, nuggets: [f64; 2], xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::Data("x and y replicate counts differ".into()));
    }
    let af = model.x.free_columns(a)?;
    let bx = af.matmul(&model.x.weights);
    let by = af.matmul(&model.y.weights);
    let (mo, n) = (af.nrows(), model.n());
    let b = CsrMatrix::block2(&bx, &CsrMatrix::zeros(mo, n), &CsrMatrix::zeros(mo, n), &by);
    let mut noise = vec![nuggets[0]; mo];
    noise.extend(std::iter::repeat(nuggets[1]).take(mo));
    let reps: Vec<Vec<f64>> = xs.iter().zip(ys).map(|(x, y)| x.iter().chain(y).copied().collect()).collect();
    let (chol, _) = model.factor()?;
    latent_gaussian_loglik(chol, &model.q_tilde, &b, &noise, &reps)
}

/// Complete bivariate-normal product log-likelihood for unit-variance pairs,
/// written through the sample correlations `γ̂ⱼ` and counts `Oⱼ`.
pub fn pointwise_loglik(gamma: &[f64], gamma_hat: &[f64], counts: &[usize]) -> f64 {
    gamma
        .iter()
        .zip(gamma_hat)
        .zip(counts)
        .map(|((&g, &gh), &o)| {
            let o = o as f64;
            let one = 1.0 - g * g;
            if !(one > 0.0) {
                return f64::NEG_INFINITY;
            }
            o * (-(2.0 * PI).ln() - 0.5 * one.ln() - 1.0 / one + g / one * ((o - 1.0) / o) * gh)
        })
        .sum()
}
