use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::CsrMatrix;
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Ordering and elimination structure of a symmetric sparsity pattern.
///
/// Matrices sharing the pattern can be refactored without repeating the
/// ordering, which matters inside optimisation loops.
#[derive(Debug, Clone)]
pub struct CholSymbolic {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<usize>,
    lp: Vec<usize>,
    // upper triangle of P A Pᵀ, column-compressed
    cp: Vec<usize>,
    ci: Vec<usize>,
    // position in the upper triangle for each stored entry of A, or NONE
    amap: Vec<usize>,
    a_indptr: Vec<usize>,
    a_indices: Vec<usize>,
}

/// Sparse Cholesky factor `P A Pᵀ = L Lᵀ` with `L` stored column-compressed,
/// diagonal first in every column and row indices ascending.
#[derive(Debug, Clone)]
pub struct SparseChol {
    sym: std::sync::Arc<CholSymbolic>,
    li: Vec<usize>,
    lx: Vec<f64>,
    logdet: f64,
}

impl CholSymbolic {
    /// Orders with approximate minimum degree and computes the factor pattern.
    pub fn analyze(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension("Cholesky needs a square matrix".into()));
        }
        let perm = if n == 0 {
            vec![]
        } else {
            let (p, _, _) = amd::order::<usize>(n, a.indptr(), a.indices(), &amd::Control::default())
                .map_err(|s| Error::Dimension(format!("ordering failed: {s:?}")))?;
            p
        };
        Self::with_permutation(a, perm)
    }

    /// Uses the caller's ordering; `perm[k]` is the original index of pivot `k`.
    pub fn with_permutation(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        if perm.len() != n {
            return Err(Error::Dimension("permutation length".into()));
        }
        let mut pinv = vec![NONE; n];
        for (k, &p) in perm.iter().enumerate() {
            if p >= n || pinv[p] != NONE {
                return Err(Error::Dimension("invalid permutation".into()));
            }
            pinv[p] = k;
        }

        let mut counts = vec![0usize; n + 1];
        for (r, c, _) in a.iter() {
            let (i, j) = (pinv[r], pinv[c]);
            if i <= j {
                counts[j + 1] += 1;
            }
        }
        for k in 0..n {
            counts[k + 1] += counts[k];
        }
        let cp = counts.clone();
        let mut next = counts;
        let mut ci = vec![0usize; cp[n]];
        let mut amap = vec![NONE; a.nnz()];
        let mut pos = 0;
        for r in 0..n {
            let (cols, _) = a.row(r);
            for &c in cols {
                let (i, j) = (pinv[r], pinv[c]);
                if i <= j {
                    ci[next[j]] = i;
                    amap[pos] = next[j];
                    next[j] += 1;
                }
                pos += 1;
            }
        }

        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &i0 in &ci[cp[k]..cp[k + 1]] {
                let mut i = i0;
                while i != NONE && i < k {
                    let inext = ancestor[i];
                    ancestor[i] = k;
                    if inext == NONE {
                        parent[i] = k;
                    }
                    i = inext;
                }
            }
        }

        let mut colcount = vec![1usize; n];
        let mut s = vec![0usize; n];
        let mut flag = vec![NONE; n];
        for k in 0..n {
            let top = ereach(k, &cp, &ci, &parent, &mut s, &mut flag);
            for &i in &s[top..n] {
                colcount[i] += 1;
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + colcount[k];
        }

        Ok(CholSymbolic {
            n,
            perm,
            pinv,
            parent,
            lp,
            cp,
            ci,
            amap,
            a_indptr: a.indptr().to_vec(),
            a_indices: a.indices().to_vec(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lp[self.n]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    fn same_pattern(&self, a: &CsrMatrix) -> bool {
        a.nrows() == self.n && a.indptr() == self.a_indptr.as_slice() && a.indices() == self.a_indices.as_slice()
    }

    /// Numeric factorization of a matrix with the analysed pattern.
    pub fn factor(self: &std::sync::Arc<Self>, a: &CsrMatrix) -> Result<SparseChol> {
        if !self.same_pattern(a) {
            return Err(Error::Dimension("matrix pattern differs from the analysed pattern".into()));
        }
        let n = self.n;
        let mut cx = vec![0.0; self.ci.len()];
        for (p, &v) in a.data().iter().enumerate() {
            let q = self.amap[p];
            if q != NONE {
                cx[q] = v;
            }
        }
        let nnz = self.lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut c: Vec<usize> = self.lp[..n].to_vec();
        let mut x = vec![0.0; n];
        let mut s = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut logdet = 0.0;
        for k in 0..n {
            let top = ereach(k, &self.cp, &self.ci, &self.parent, &mut s, &mut flag);
            for p in self.cp[k]..self.cp[k + 1] {
                x[self.ci[p]] = cx[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &s[top..n] {
                let lki = x[i] / lx[self.lp[i]];
                x[i] = 0.0;
                for p in self.lp[i] + 1..c[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = c[i];
                c[i] += 1;
                li[p] = k;
                lx[p] = lki;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotSpd { pivot: self.perm[k] });
            }
            let p = c[k];
            c[k] += 1;
            li[p] = k;
            lx[p] = d.sqrt();
            logdet += d.ln();
        }
        Ok(SparseChol { sym: self.clone(), li, lx, logdet })
    }
}

/// Nonzero pattern of row `k` of L, returned in `s[top..n]` in topological order.
fn ereach(k: usize, cp: &[usize], ci: &[usize], parent: &[usize], s: &mut [usize], flag: &mut [usize]) -> usize {
    let n = s.len();
    let mut top = n;
    flag[k] = k;
    for &i0 in &ci[cp[k]..cp[k + 1]] {
        let mut i = i0;
        if i > k {
            continue;
        }
        let mut len = 0;
        while flag[i] != k {
            s[len] = i;
            len += 1;
            flag[i] = k;
            i = parent[i];
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            s[top] = s[len];
        }
    }
    top
}

/// Factorizes a symmetric positive definite matrix with a fresh ordering.
pub fn factorize(a: &CsrMatrix) -> Result<SparseChol> {
    let sym = std::sync::Arc::new(CholSymbolic::analyze(a)?);
    sym.factor(a)
}

impl SparseChol {
    pub fn n(&self) -> usize {
        self.sym.n
    }

    pub fn symbolic(&self) -> &std::sync::Arc<CholSymbolic> {
        &self.sym
    }

    pub fn permutation(&self) -> &[usize] {
        &self.sym.perm
    }

    pub fn pinv(&self) -> &[usize] {
        &self.sym.pinv
    }

    /// `log det A = 2 Σ log L_kk`.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    pub fn nnz_l(&self) -> usize {
        self.lx.len()
    }

    /// Column `j` of L as `(rows, values)` in permuted indexing.
    pub fn l_col(&self, j: usize) -> (&[usize], &[f64]) {
        let r = self.sym.lp[j]..self.sym.lp[j + 1];
        (&self.li[r.clone()], &self.lx[r])
    }

    /// L as a CSR matrix in permuted indexing.
    pub fn l_matrix(&self) -> CsrMatrix {
        let n = self.n();
        let mut t = Vec::with_capacity(self.nnz_l());
        for j in 0..n {
            let (r, v) = self.l_col(j);
            t.extend(r.iter().zip(v).map(|(&i, &x)| (i, j, x)));
        }
        CsrMatrix::from_triplets(n, n, &t)
    }

    fn lsolve_in_place(&self, x: &mut [f64]) {
        let lp = &self.sym.lp;
        for j in 0..self.n() {
            let xj = x[j] / self.lx[lp[j]];
            x[j] = xj;
            for p in lp[j] + 1..lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
    }

    fn ltsolve_in_place(&self, x: &mut [f64]) {
        let lp = &self.sym.lp;
        for j in (0..self.n()).rev() {
            let mut xj = x[j];
            for p in lp[j] + 1..lp[j + 1] {
                xj -= self.lx[p] * x[self.li[p]];
            }
            x[j] = xj / self.lx[lp[j]];
        }
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n());
        let perm = &self.sym.perm;
        let mut y: Vec<f64> = perm.iter().map(|&p| b[p]).collect();
        self.lsolve_in_place(&mut y);
        self.ltsolve_in_place(&mut y);
        let mut x = vec![0.0; y.len()];
        for (k, &p) in perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    pub fn solve_many(&self, bs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        bs.par_iter().map(|b| self.solve(b)).collect()
    }

    /// Returns `L⁻¹ P b`, so that `bᵀ A⁻¹ b = |L⁻¹ P b|²`.
    pub fn half_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.sym.perm.iter().map(|&p| b[p]).collect();
        self.lsolve_in_place(&mut y);
        y
    }

    /// Returns `Pᵀ L⁻ᵀ z`; for standard normal `z` this has covariance `A⁻¹`.
    pub fn transform_noise(&self, z: &[f64]) -> Vec<f64> {
        let mut y = z.to_vec();
        self.ltsolve_in_place(&mut y);
        let mut x = vec![0.0; y.len()];
        for (k, &p) in self.sym.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }

    /// Draws `n` samples from `N(0, A⁻¹)` using one seeded stream.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: Vec<f64> = (0..self.n()).map(|_| StandardNormal.sample(&mut rng)).collect();
                self.transform_noise(&z)
            })
            .collect()
    }

    /// Residual `max |P A Pᵀ v − L Lᵀ v| / max |P A Pᵀ v|` for a probe vector in permuted indexing.
    pub fn residual(&self, a: &CsrMatrix, v: &[f64]) -> f64 {
        let n = self.n();
        let perm = &self.sym.perm;
        let mut vo = vec![0.0; n];
        for k in 0..n {
            vo[perm[k]] = v[k];
        }
        let av = a.mul_vec(&vo);
        let pav: Vec<f64> = perm.iter().map(|&p| av[p]).collect();
        // w = Lᵀ v
        let lp = &self.sym.lp;
        let mut w = vec![0.0; n];
        for j in 0..n {
            for p in lp[j]..lp[j + 1] {
                w[j] += self.lx[p] * v[self.li[p]];
            }
        }
        let mut llv = vec![0.0; n];
        for j in 0..n {
            for p in lp[j]..lp[j + 1] {
                llv[self.li[p]] += self.lx[p] * w[j];
            }
        }
        let num = pav.iter().zip(&llv).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let den = pav.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        num / den.max(f64::MIN_POSITIVE)
    }

    pub(super) fn raw(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.sym.lp, &self.li, &self.lx)
    }
}
