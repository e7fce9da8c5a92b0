//! Rational approximation of fractional operator powers.
//!
//! With `A = C⁻¹K`, the target covariance of the nodal weights is
//! `A^{−α} C⁻¹`, so `P_r P_l⁻¹` has to approximate `A^{−α/2} C⁻¹`. The
//! exponent `e = α/2` is split into `q = ⌊e⌋` factors of `A` and a
//! fractional part in `(0, 1)` handled by a type `(m+1, m)` rational:
//!
//! `P_l = b · C · A^q · Π_j (I − r₂ⱼ A)`, `P_r = c · Π_i (I − r₁ᵢ A)`.
//!
//! `P_l` is symmetric, and every factor `C(I − rA) = C − rK` with `r < 0`
//! is positive definite, so solves with `P_l` can be done factor by factor.

pub mod remez;

use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::fem::OperatorMatrices;
use crate::sparse::{CholSymbolic, CsrMatrix, SparseChol};

pub use remez::{fit_power, PowerFit};

/// Fractional parts this close to 0 or 1 use the exact integer path.
const INTEGER_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RationalCoeffs {
    /// Rational order; numerator has `m+1` factors and denominator `m`.
    pub m: usize,
    /// Number of whole factors of `A` in `P_l`.
    pub int_power: usize,
    /// Target exponent `α/2`.
    pub exponent: f64,
    /// `r₂ⱼ` in `Π (I − r₂ⱼ A)` of `P_l`; empty on the integer path.
    pub poles_r2: Vec<f64>,
    /// `r₁ᵢ` in `Π (I − r₁ᵢ A)` of `P_r`; empty on the integer path.
    pub roots_r1: Vec<f64>,
    pub scale_b: f64,
    pub scale_c: f64,
    pub interval: [f64; 2],
    /// Max relative error of the rational part on the interval (0 when exact).
    pub max_rel_error: f64,
}

impl RationalCoeffs {
    /// Integer exponent: `P_l = C A^e`, `P_r = I`.
    pub fn exact(exponent: usize, m: usize) -> Self {
        RationalCoeffs {
            m,
            int_power: exponent,
            exponent: exponent as f64,
            poles_r2: vec![],
            roots_r1: vec![],
            scale_b: 1.0,
            scale_c: 1.0,
            interval: [0.0, f64::INFINITY],
            max_rel_error: 0.0,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.poles_r2.is_empty() && self.roots_r1.is_empty()
    }

    /// The scalar function `λ^q · (b/c) Π(1 − r₂λ)/Π(1 − r₁λ) ≈ λ^{α/2}`.
    pub fn eval(&self, lambda: f64) -> f64 {
        let mut v = lambda.powi(self.int_power as i32) * self.scale_b / self.scale_c;
        for &r in &self.poles_r2 {
            v *= 1.0 - r * lambda;
        }
        for &r in &self.roots_r1 {
            v /= 1.0 - r * lambda;
        }
        v
    }

    /// Largest relative error against `λ^{α/2}` on `n` log-spaced points of the interval.
    pub fn dense_max_rel_error(&self, n: usize) -> f64 {
        let [lo, hi] = self.interval;
        (0..n)
            .map(|i| {
                let l = (lo.ln() + (hi / lo).ln() * i as f64 / (n - 1) as f64).exp();
                (self.eval(l) / l.powf(self.exponent) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Fits the rational part of `λ^{α/2}` on `[lo, hi]`.
pub fn fit_rational(alpha: f64, interval: [f64; 2], m: usize) -> Result<RationalCoeffs> {
    if !(alpha >= 1.0) {
        return Err(Error::Config(format!("alpha must be at least 1, got {alpha}")));
    }
    let [lo, hi] = interval;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::RationalFit { msg: format!("invalid interval [{lo}, {hi}]"), residual: f64::NAN });
    }
    if m == 0 {
        return Err(Error::Config("rational order m must be at least 1".into()));
    }
    let e = 0.5 * alpha;
    let q = e.floor();
    let frac = e - q;
    if frac < INTEGER_SNAP {
        let mut c = RationalCoeffs::exact(q as usize, m);
        c.interval = interval;
        return Ok(c);
    }
    if frac > 1.0 - INTEGER_SNAP {
        let mut c = RationalCoeffs::exact(q as usize + 1, m);
        c.interval = interval;
        return Ok(c);
    }
    let fit = fit_power(frac, hi / lo, m)?;
    Ok(RationalCoeffs {
        m,
        int_power: q as usize,
        exponent: e,
        poles_r2: fit.zeros.iter().map(|z| -1.0 / (lo * z)).collect(),
        roots_r1: fit.poles.iter().map(|w| -1.0 / (lo * w)).collect(),
        scale_b: fit.log_b.exp() * lo.powf(frac),
        scale_c: 1.0,
        interval,
        max_rel_error: fit.max_rel_error,
    })
}

/// Bounds on the spectrum of `C⁻¹K`.
///
/// The upper end is the Gershgorin bound. The lower end uses
/// `B ⪰ ¼ B_lumped` for P1 elements, which holds for the diffusion-free
/// part alone, so it stays valid however strong the diffusion is.
/// Both ends are padded by 10%.
pub fn spectral_interval(ops: &OperatorMatrices) -> [f64; 2] {
    let n = ops.n();
    let mut hi = 0.0f64;
    let mut lo = f64::INFINITY;
    for i in 0..n {
        let (_, v) = ops.k.row(i);
        let s: f64 = v.iter().map(|a| a.abs()).sum();
        hi = hi.max(s * ops.c_inv[i]);
        lo = lo.min(ops.b_lumped[i] * ops.c_inv[i]);
    }
    [0.25 * lo / 1.1, 1.1 * hi]
}

/// Gaussian noise scaled by `sqrt_c`, drawn from stream `stream` of `seed`.
pub fn mass_noise(sqrt_c: &[f64], seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    sqrt_c
        .iter()
        .map(|s| {
            let g: f64 = StandardNormal.sample(&mut rng);
            s * g
        })
        .collect()
}

/// Sparse factors of the rational operator plus cached factorizations.
#[derive(Debug)]
pub struct FractionalOperator {
    pub k: CsrMatrix,
    pub c: Vec<f64>,
    pub c_inv: Vec<f64>,
    pub coeffs: RationalCoeffs,
    pub pl: CsrMatrix,
    pub pr: CsrMatrix,
    factor_cache: OnceLock<Result<Vec<SparseChol>>>,
    latent_cache: OnceLock<CsrMatrix>,
}

impl Clone for FractionalOperator {
    fn clone(&self) -> Self {
        FractionalOperator {
            k: self.k.clone(),
            c: self.c.clone(),
            c_inv: self.c_inv.clone(),
            coeffs: self.coeffs.clone(),
            pl: self.pl.clone(),
            pr: self.pr.clone(),
            factor_cache: OnceLock::new(),
            latent_cache: OnceLock::new(),
        }
    }
}

/// `P · A` for `A = C⁻¹K`.
fn times_a(p: &CsrMatrix, k: &CsrMatrix, c_inv: &[f64]) -> CsrMatrix {
    p.scale_cols(c_inv).matmul(k)
}

/// Builds `P_l` and `P_r` by repeated sparse products.
pub fn build_factors(k: &CsrMatrix, c: &[f64], coeffs: &RationalCoeffs) -> Result<FractionalOperator> {
    let n = k.nrows();
    if k.ncols() != n || c.len() != n {
        return Err(Error::Dimension("operator and mass sizes differ".into()));
    }
    let c_inv: Vec<f64> = c.iter().map(|v| 1.0 / v).collect();
    let mut p = CsrMatrix::identity(n);
    for _ in 0..coeffs.int_power {
        p = times_a(&p, k, &c_inv);
    }
    for &r in &coeffs.poles_r2 {
        p = p.add_scaled(1.0, &times_a(&p, k, &c_inv), -r);
    }
    let pl = p.scale_rows(c).scale(coeffs.scale_b).symmetrized();
    let mut pr = CsrMatrix::identity(n);
    for &r in &coeffs.roots_r1 {
        pr = pr.add_scaled(1.0, &times_a(&pr, k, &c_inv), -r);
    }
    let pr = pr.scale(coeffs.scale_c);
    Ok(FractionalOperator {
        k: k.clone(),
        c: c.to_vec(),
        c_inv,
        coeffs: coeffs.clone(),
        pl,
        pr,
        factor_cache: OnceLock::new(),
        latent_cache: OnceLock::new(),
    })
}

impl FractionalOperator {
    /// Interval estimate, fit and factor construction in one step.
    pub fn new(ops: &OperatorMatrices, alpha: f64, m: usize) -> Result<Self> {
        let coeffs = fit_rational(alpha, spectral_interval(ops), m)?;
        build_factors(&ops.k, &ops.c, &coeffs)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Latent precision `P_lᵀ C⁻¹ P_l`.
    pub fn latent_precision(&self) -> &CsrMatrix {
        self.latent_cache.get_or_init(|| self.pl.transpose().matmul(&self.pl.scale_rows(&self.c_inv)).symmetrized())
    }

    fn factors(&self) -> Result<&[SparseChol]> {
        let r = self.factor_cache.get_or_init(|| {
            // every factor shares the pattern of K, so one ordering serves all
            let mut mats = Vec::new();
            if self.coeffs.int_power > 0 {
                mats.push(self.k.clone());
            }
            let cm = CsrMatrix::diag(&self.c);
            for &r in &self.coeffs.poles_r2 {
                mats.push(cm.add_scaled(1.0, &self.k, -r));
            }
            let base = cm.add(&self.k);
            let sym = Arc::new(CholSymbolic::analyze(&base)?);
            mats.iter()
                .map(|m| {
                    let m = base.add_scaled(0.0, m, 1.0);
                    sym.factor(&m).map_err(|e| match e {
                        Error::NotSpd { pivot } => Error::Conditioning(format!("factor of P_l singular near node {pivot}")),
                        other => other,
                    })
                })
                .collect()
        });
        match r {
            Ok(v) => Ok(v),
            Err(e) => Err(Error::Conditioning(e.to_string())),
        }
    }

    /// Solves `P_l x = y` one factor at a time.
    pub fn solve_pl(&self, y: &[f64]) -> Result<Vec<f64>> {
        let f = self.factors()?;
        let mut v: Vec<f64> = y.iter().zip(&self.c_inv).map(|(a, b)| a * b / self.coeffs.scale_b).collect();
        let mut idx = 0;
        if self.coeffs.int_power > 0 {
            for _ in 0..self.coeffs.int_power {
                let cv: Vec<f64> = v.iter().zip(&self.c).map(|(a, b)| a * b).collect();
                v = f[0].solve(&cv);
            }
            idx = 1;
        }
        for j in 0..self.coeffs.poles_r2.len() {
            let cv: Vec<f64> = v.iter().zip(&self.c).map(|(a, b)| a * b).collect();
            v = f[idx + j].solve(&cv);
        }
        Ok(v)
    }

    /// Covariance column `P_r P_l⁻¹ C P_l⁻¹ P_rᵀ e_j` without forming any inverse.
    pub fn covariance_column(&self, j: usize) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.n()];
        e[j] = 1.0;
        self.covariance_apply(&e)
    }

    /// Applies the approximate covariance `P_r P_l⁻¹ C P_l⁻¹ P_rᵀ`.
    pub fn covariance_apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.pr.tr_mul_vec(x);
        let v = self.solve_pl(&v)?;
        let v: Vec<f64> = v.iter().zip(&self.c).map(|(a, b)| a * b).collect();
        let v = self.solve_pl(&v)?;
        Ok(self.pr.mul_vec(&v))
    }

    /// Nested sampling: solve `P_l Ũ = noise`, return `U = P_r Ũ`.
    /// `noise` should have covariance `C`.
    pub fn nested_sample(&self, noise: &[f64]) -> Result<Vec<f64>> {
        if noise.len() != self.n() {
            return Err(Error::Dimension("noise length".into()));
        }
        let u = self.solve_pl(noise)?;
        Ok(self.pr.mul_vec(&u))
    }

    /// Draws `n` samples; sample `r` uses noise stream `2r` of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        let sc: Vec<f64> = self.c.iter().map(|v| v.sqrt()).collect();
        (0..n as u64).map(|r| self.nested_sample(&mass_noise(&sc, seed, 2 * r))).collect()
    }
}
