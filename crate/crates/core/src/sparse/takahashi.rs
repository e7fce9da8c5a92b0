use super::SparseChol;

/// Entries of `A⁻¹` on the pattern of `L + Lᵀ`.
#[derive(Debug, Clone)]
pub struct SelectedInverse {
    lp: Vec<usize>,
    li: Vec<usize>,
    sx: Vec<f64>,
    pinv: Vec<usize>,
    perm: Vec<usize>,
}

fn lookup(lp: &[usize], li: &[usize], sx: &[f64], r: usize, c: usize) -> Option<f64> {
    let (r, c) = if r >= c { (r, c) } else { (c, r) };
    let rows = &li[lp[c]..lp[c + 1]];
    rows.binary_search(&r).ok().map(|p| sx[lp[c] + p])
}

/// Runs the Takahashi recursion backwards over the columns of the factor.
pub fn takahashi(chol: &SparseChol) -> SelectedInverse {
    let (lp, li, lx) = chol.raw();
    let n = chol.n();
    let mut sx = vec![0.0; lx.len()];
    for i in (0..n).rev() {
        let start = lp[i];
        let end = lp[i + 1];
        let lii = lx[start];
        let rows = &li[start + 1..end];
        let vals = &lx[start + 1..end];
        for (a, &j) in rows.iter().enumerate() {
            let mut s = 0.0;
            for (&k, &lki) in rows.iter().zip(vals) {
                let skj = lookup(lp, li, &sx, k, j).expect("selected pattern not closed");
                s += lki * skj;
            }
            sx[start + 1 + a] = -s / lii;
        }
        let mut s = 0.0;
        for (a, &lki) in vals.iter().enumerate() {
            s += lki * sx[start + 1 + a];
        }
        sx[start] = 1.0 / (lii * lii) - s / lii;
    }
    SelectedInverse {
        lp: lp.to_vec(),
        li: li.to_vec(),
        sx,
        pinv: chol.pinv().to_vec(),
        perm: chol.permutation().to_vec(),
    }
}

impl SelectedInverse {
    /// `(A⁻¹)_ab` in original indexing, if the entry lies in the selected pattern.
    pub fn get(&self, a: usize, b: usize) -> Option<f64> {
        lookup(&self.lp, &self.li, &self.sx, self.pinv[a], self.pinv[b])
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.pinv.len()).map(|a| self.sx[self.lp[self.pinv[a]]]).collect()
    }

    pub fn n(&self) -> usize {
        self.pinv.len()
    }

    /// Stored entries `(a, b, value)` with both orientations of each pair.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.sx.len());
        for c in 0..self.pinv.len() {
            for p in self.lp[c]..self.lp[c + 1] {
                let (a, b) = (self.perm[self.li[p]], self.perm[c]);
                out.push((a, b, self.sx[p]));
                if a != b {
                    out.push((b, a, self.sx[p]));
                }
            }
        }
        out
    }
}
