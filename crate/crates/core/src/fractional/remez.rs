//! Minimax relative-error rational approximation of `x^p` on `[1, R]`.
//!
//! The approximant has type `(m+1, m)` and is kept in factored form
//! `b · Π(1 + x/z_j) / Π(1 + x/w_i)` with `z_j, w_i > 0`. A linear Remez
//! iteration on a short interval provides a start, which is then carried
//! to the full interval by continuation in `R` with Newton steps on the
//! logarithms of the factors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFit {
    pub p: f64,
    pub ratio: f64,
    pub log_b: f64,
    pub zeros: Vec<f64>,
    pub poles: Vec<f64>,
    pub max_rel_error: f64,
}

impl PowerFit {
    pub fn eval(&self, x: f64) -> f64 {
        let mut l = self.log_b;
        for &z in &self.zeros {
            l += (x / z).ln_1p();
        }
        for &w in &self.poles {
            l -= (x / w).ln_1p();
        }
        l.exp()
    }

    /// `r(x)/x^p − 1`.
    pub fn rel_error(&self, x: f64) -> f64 {
        rel_err(&self.to_theta(), self.zeros.len() - 1, x, self.p)
    }

    fn to_theta(&self) -> Vec<f64> {
        let mut t = vec![self.log_b];
        t.extend(self.zeros.iter().map(|z| z.ln()));
        t.extend(self.poles.iter().map(|w| w.ln()));
        t
    }
}

const SEED_RATIO: f64 = 64.0;
const STEP: f64 = 8.0;

fn log_r(theta: &[f64], m: usize, x: f64) -> f64 {
    let mut l = theta[0];
    for &lz in &theta[1..m + 2] {
        l += (x * (-lz).exp()).ln_1p();
    }
    for &lw in &theta[m + 2..] {
        l -= (x * (-lw).exp()).ln_1p();
    }
    l
}

fn rel_err(theta: &[f64], m: usize, x: f64, p: f64) -> f64 {
    (log_r(theta, m, x) - p * x.ln()).exp_m1()
}

fn cheb_all(n: usize, u: f64) -> Vec<f64> {
    let mut t = vec![1.0; n + 1];
    if n >= 1 {
        t[1] = u;
    }
    for k in 2..=n {
        t[k] = 2.0 * u * t[k - 1] - t[k - 2];
    }
    t
}

/// Monomial coefficients (ascending) of `Σ c_k T_k(u)`.
fn cheb_to_monomial(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    let mut tkm1 = vec![0.0; n];
    let mut tk = vec![0.0; n];
    let mut out = vec![0.0; n];
    tkm1[0] = 1.0;
    out[0] += c[0];
    if n > 1 {
        tk[1] = 1.0;
        for i in 0..n {
            out[i] += c[1] * tk[i];
        }
    }
    for k in 2..n {
        let mut next = vec![0.0; n];
        for i in 0..n {
            if i + 1 < n {
                next[i + 1] += 2.0 * tk[i];
            }
            next[i] -= tkm1[i];
        }
        for i in 0..n {
            out[i] += c[k] * next[i];
        }
        tkm1 = tk;
        tk = next;
    }
    out
}

/// Real roots of an ascending-coefficient polynomial, or `None` if any root is complex.
fn real_roots(coef: &[f64]) -> Option<Vec<f64>> {
    let mut c = coef.to_vec();
    while c.len() > 1 && c.last().map_or(false, |v| v.abs() < 1e-300) {
        c.pop();
    }
    let deg = c.len() - 1;
    if deg == 0 {
        return Some(vec![]);
    }
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let ev = comp.complex_eigenvalues();
    let mut out = Vec::with_capacity(deg);
    for z in ev.iter() {
        if z.im.abs() > 1e-7 * z.re.abs().max(1e-12) {
            return None;
        }
        out.push(z.re);
    }
    Some(out)
}

/// Alternating extrema of `e` on the sorted grid, reduced to exactly `n` points.
fn alternating_extrema(err: &[f64], n: usize) -> Option<Vec<usize>> {
    let mut idx = Vec::new();
    let mut start = 0;
    for i in 1..=err.len() {
        if i == err.len() || (err[i] >= 0.0) != (err[start] >= 0.0) {
            let best = (start..i).max_by(|&a, &b| err[a].abs().partial_cmp(&err[b].abs()).unwrap()).unwrap();
            idx.push(best);
            start = i;
        }
    }
    while idx.len() > n {
        if err[idx[0]].abs() < err[*idx.last().unwrap()].abs() {
            idx.remove(0);
        } else {
            idx.pop();
        }
    }
    if idx.len() < n {
        None
    } else {
        Some(idx)
    }
}

fn log_grid(ratio: f64, n: usize) -> Vec<f64> {
    let lr = ratio.ln();
    (0..n).map(|i| (lr * i as f64 / (n - 1) as f64).exp()).collect::<Vec<_>>()
}

fn linear_start(p: f64, ratio: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (nn, dd) = (m + 1, m);
    let n_ref = nn + dd + 2;
    let lr = ratio.ln();
    let map_u = |x: f64| (2.0 * x - (1.0 + ratio)) / (ratio - 1.0);
    let mut refs: Vec<f64> =
        (0..n_ref).map(|k| (lr * (1.0 - (std::f64::consts::PI * k as f64 / (n_ref - 1) as f64).cos()) / 2.0).exp()).collect();
    let grid = log_grid(ratio, 4000);
    let mut pc = vec![0.0; nn + 1];
    let mut qc = vec![0.0; dd + 1];
    for _outer in 0..60 {
        let u: Vec<f64> = refs.iter().map(|&x| map_u(x)).collect();
        let fv: Vec<f64> = refs.iter().map(|&x| x.powf(p)).collect();
        let mut qold = vec![1.0; n_ref];
        let mut e = 0.0;
        for _inner in 0..50 {
            let mut a = DMatrix::<f64>::zeros(n_ref, n_ref);
            for k in 0..n_ref {
                let t = cheb_all(nn.max(dd), u[k]);
                for j in 0..=nn {
                    a[(k, j)] = t[j];
                }
                for j in 1..=dd {
                    a[(k, nn + j)] = -fv[k] * t[j];
                }
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                a[(k, n_ref - 1)] = -s * fv[k] * qold[k];
            }
            let sol = a
                .lu()
                .solve(&DVector::from_vec(fv.clone()))
                .ok_or_else(|| Error::RationalFit { msg: "singular levelling system".into(), residual: f64::NAN })?;
            pc.copy_from_slice(&sol.as_slice()[..=nn]);
            qc[0] = 1.0;
            qc[1..].copy_from_slice(&sol.as_slice()[nn + 1..nn + 1 + dd]);
            e = sol[n_ref - 1];
            let qnew: Vec<f64> = u
                .iter()
                .map(|&uk| {
                    let t = cheb_all(dd, uk);
                    qc.iter().zip(&t).map(|(a, b)| a * b).sum::<f64>()
                })
                .collect();
            let ch = qnew.iter().zip(&qold).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
            qold = qnew;
            if ch < 1e-14 {
                break;
            }
        }
        let err: Vec<f64> = grid
            .iter()
            .map(|&x| {
                let uk = map_u(x);
                let tp = cheb_all(nn, uk);
                let tq = cheb_all(dd, uk);
                let pv: f64 = pc.iter().zip(&tp).map(|(a, b)| a * b).sum();
                let qv: f64 = qc.iter().zip(&tq).map(|(a, b)| a * b).sum();
                pv / qv / x.powf(p) - 1.0
            })
            .collect();
        let emax = err.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let idx = alternating_extrema(&err, n_ref)
            .ok_or_else(|| Error::RationalFit { msg: "lost alternation in start phase".into(), residual: emax })?;
        refs = idx.iter().map(|&i| grid[i]).collect();
        if (emax - e.abs()).abs() < 1e-3 * emax {
            break;
        }
    }
    let to_x = |r: f64| (r * (ratio - 1.0) + (1.0 + ratio)) / 2.0;
    let zr = real_roots(&cheb_to_monomial(&pc))
        .ok_or_else(|| Error::RationalFit { msg: "complex zeros".into(), residual: f64::NAN })?;
    let pr = real_roots(&cheb_to_monomial(&qc))
        .ok_or_else(|| Error::RationalFit { msg: "complex poles".into(), residual: f64::NAN })?;
    if zr.len() != nn || pr.len() != dd {
        return Err(Error::RationalFit { msg: "degenerate start degree".into(), residual: f64::NAN });
    }
    let mut z: Vec<f64> = zr.iter().map(|&r| -to_x(r)).collect();
    let mut w: Vec<f64> = pr.iter().map(|&r| -to_x(r)).collect();
    if z.iter().chain(&w).any(|&v| !(v > 0.0)) {
        return Err(Error::RationalFit { msg: "zeros or poles on the positive axis".into(), residual: f64::NAN });
    }
    z.sort_by(|a, b| a.partial_cmp(b).unwrap());
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut theta = vec![0.0];
    theta.extend(z.iter().map(|v| v.ln()));
    theta.extend(w.iter().map(|v| v.ln()));
    let mean_q = refs.iter().map(|&x| (log_r(&theta, m, x) - p * x.ln()).exp()).sum::<f64>() / refs.len() as f64;
    theta[0] -= mean_q.ln();
    Ok((theta, refs))
}

fn newton(theta: &[f64], refs: &[f64], p: f64, m: usize) -> Result<(Vec<f64>, f64)> {
    let n = refs.len();
    let sgn = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut x: Vec<f64> = theta.to_vec();
    let e0 = (0..n).map(|k| sgn(k) * rel_err(theta, m, refs[k], p)).sum::<f64>() / n as f64;
    x.push(e0);
    let resid = |x: &[f64]| -> Vec<f64> {
        let th = &x[..n - 1];
        (0..n).map(|k| rel_err(th, m, refs[k], p) - sgn(k) * x[n - 1]).collect()
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut f = resid(&x);
    for _ in 0..60 {
        let th = &x[..n - 1];
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for k in 0..n {
            let xr = refs[k];
            let q = rel_err(th, m, xr, p) + 1.0;
            jac[(k, 0)] = q;
            for j in 0..m + 1 {
                let z = th[1 + j].exp();
                jac[(k, 1 + j)] = -q * xr / (xr + z);
            }
            for i in 0..m {
                let w = th[m + 2 + i].exp();
                jac[(k, m + 2 + i)] = q * xr / (xr + w);
            }
            jac[(k, n - 1)] = -sgn(k);
        }
        let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
        let dx = jac
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::RationalFit { msg: "singular Newton system".into(), residual: norm(&f) })?;
        let f0 = norm(&f);
        let big = dx.iter().take(n - 1).fold(0.0f64, |a, d| a.max(d.abs()));
        let mut t = if big > 1.0 { 1.0 / big } else { 1.0 };
        let mut xn = x.clone();
        let mut fnew = f.clone();
        while t > 1e-6 {
            xn = x.iter().zip(dx.iter()).map(|(a, d)| a + t * d).collect();
            fnew = resid(&xn);
            if fnew.iter().all(|v| v.is_finite()) && norm(&fnew) < f0 * (1.0 - 0.25 * t) || f0 < 1e-15 {
                break;
            }
            t *= 0.5;
        }
        let step = dx.iter().fold(0.0f64, |m, d| m.max((t * d).abs()));
        x = xn;
        f = fnew;
        if step < 1e-14 || norm(&f) < 1e-16 {
            break;
        }
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::RationalFit { msg: "Newton diverged".into(), residual: f64::NAN });
    }
    let e = x[n - 1];
    x.pop();
    Ok((x, e))
}

/// Maximises `s·e(x)` over `[a, b]` by golden section in log x.
fn refine_extremum(theta: &[f64], m: usize, p: f64, a: f64, b: f64, s: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (a.ln(), b.ln());
    let f = |lx: f64| s * rel_err(theta, m, lx.exp(), p);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-12 * (1.0 + hi.abs()) {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    let lx = 0.5 * (lo + hi);
    let (fa, fb, fm) = (f(a.ln()), f(b.ln()), f(lx));
    if fa >= fm && fa >= fb {
        (a, s * fa)
    } else if fb >= fm {
        (b, s * fb)
    } else {
        (lx.exp(), s * fm)
    }
}

fn exchange(theta: &[f64], m: usize, p: f64, ratio: f64, n_ref: usize) -> Result<(Vec<f64>, f64)> {
    let grid = log_grid(ratio, 200 * n_ref);
    let err: Vec<f64> = grid.iter().map(|&x| rel_err(theta, m, x, p)).collect();
    let emax_grid = err.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let idx = alternating_extrema(&err, n_ref)
        .ok_or_else(|| Error::RationalFit { msg: "lost alternation".into(), residual: emax_grid })?;
    let mut refs = Vec::with_capacity(n_ref);
    let mut emax = 0.0f64;
    for &i in &idx {
        let s = if err[i] >= 0.0 { 1.0 } else { -1.0 };
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(grid.len() - 1)];
        let (x, e) = refine_extremum(theta, m, p, a, b, s);
        refs.push(x);
        emax = emax.max(e.abs());
    }
    for w in refs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::RationalFit { msg: "reference points collapsed".into(), residual: emax });
        }
    }
    Ok((refs, emax.max(emax_grid)))
}

fn solve_on(theta: Vec<f64>, refs: Vec<f64>, p: f64, ratio: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let n_ref = 2 * m + 3;
    let mut theta = theta;
    let mut refs = refs;
    // best iterate so far: (theta, refs, emax, levelled gap)
    let mut best: Option<(Vec<f64>, Vec<f64>, f64, f64)> = None;
    for _ in 0..80 {
        let (th, e) = newton(&theta, &refs, p, m)?;
        theta = th;
        let (new_refs, emax) = exchange(&theta, m, p, ratio, n_ref)?;
        let gap = emax - e.abs();
        if gap <= 1e-9 * emax || emax < NOISE_FLOOR {
            return Ok((theta, new_refs, emax));
        }
        if best.as_ref().map_or(true, |b| emax < b.2) {
            best = Some((theta.clone(), new_refs.clone(), emax, gap));
        }
        refs = new_refs;
    }
    match best {
        // stalled by rounding once the error is tiny, or nearly levelled
        Some((t, r, emax, gap)) if emax < 1e-9 || gap < 1e-3 * emax => Ok((t, r, emax)),
        Some((_, _, emax, _)) => Err(Error::RationalFit { msg: "exchange did not converge".into(), residual: emax }),
        None => unreachable!(),
    }
}

/// Geometric interlaced start: zeros every `D` in log x with each pole a
/// fraction `p` of a period later, so the log-slope averages to `p`.
fn geometric_start(p: f64, ratio: f64, m: usize, periods: f64, offset: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let lr = ratio.ln();
    let d = lr / periods;
    let mut theta = vec![0.0];
    theta.extend((0..=m).map(|j| (j as f64 + offset) * d));
    theta.extend((0..m).map(|i| (i as f64 + offset + p) * d));
    let grid = log_grid(ratio, 400 * (2 * m + 3));
    let lq: Vec<f64> = grid.iter().map(|&x| log_r(&theta, m, x) - p * x.ln()).collect();
    let (lo, hi) = lq.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    theta[0] -= 0.5 * (lo + hi);
    let err: Vec<f64> = lq.iter().map(|v| (v - 0.5 * (lo + hi)).exp_m1()).collect();
    let n = 2 * m + 3;
    let refs = match alternating_extrema(&err, n) {
        Some(idx) => idx.iter().map(|&i| grid[i]).collect(),
        None => (0..n).map(|k| (lr * (1.0 - (std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()) / 2.0).exp()).collect(),
    };
    Some((theta, refs))
}

/// Below this the fit is at rounding level and levelling is meaningless.
const NOISE_FLOOR: f64 = 1e-12;

/// Lower-order fits this accurate may stand in for an order that fails.
const PAD_LIMIT: f64 = 1e-9;

fn seed_fit(p: f64, r0: f64, m: usize) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut last = None;
    for &(k, off) in &[(0.5, 0.25), (1.0, 0.0), (0.0, 0.5), (1.5, 0.0), (0.5, 0.5)] {
        if let Some((th, refs)) = geometric_start(p, r0, m, m as f64 + k, off) {
            match solve_on(th, refs, p, r0, m) {
                Ok(v) => return Ok(v),
                Err(e) => last = Some(e),
            }
        }
    }
    match linear_start(p, r0, m).and_then(|(th, refs)| solve_on(th, refs, p, r0, m)) {
        Ok(v) => Ok(v),
        Err(e) => Err(last.unwrap_or(e)),
    }
}

/// Fits `x^p`, `0 < p < 1`, on `[1, ratio]` with a type `(m+1, m)` rational.
///
/// When order `m` cannot be levelled because the order `m − 1` error is
/// already near rounding, that fit is padded with a cancelling zero/pole pair.
pub fn fit_power(p: f64, ratio: f64, m: usize) -> Result<PowerFit> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::RationalFit { msg: format!("exponent {p} outside (0, 1)"), residual: f64::NAN });
    }
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(Error::RationalFit { msg: format!("invalid interval ratio {ratio}"), residual: f64::NAN });
    }
    if m == 0 {
        return Err(Error::RationalFit { msg: "order must be at least 1".into(), residual: f64::NAN });
    }
    match fit_power_direct(p, ratio, m) {
        Ok(f) => Ok(f),
        Err(e) if m > 1 => {
            let mut f = match fit_power(p, ratio, m - 1) {
                Ok(l) if l.max_rel_error <= PAD_LIMIT => l,
                _ => return Err(e),
            };
            let far = 1e3 * ratio;
            f.zeros.push(far);
            f.poles.push(far);
            Ok(f)
        }
        Err(e) => Err(e),
    }
}

fn fit_power_direct(p: f64, ratio: f64, m: usize) -> Result<PowerFit> {
    // the seed interval grows with m so its minimax error stays well above rounding
    let preferred = SEED_RATIO.max((1.6 * m as f64).exp());
    let mut last = None;
    for seed in [preferred, SEED_RATIO, 16.0, 4.0] {
        if seed > preferred {
            continue;
        }
        match seed_fit(p, ratio.min(seed), m).and_then(|v| continue_to(v, p, ratio.min(seed), ratio, m)) {
            Ok(v) => return Ok(finish(v, p, ratio, m)),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap())
}

type Solved = (Vec<f64>, Vec<f64>, f64);

/// Stretches a solution on `[1, r_from]` out to `[1, r_to]` in log-uniform steps,
/// shortening the step whenever a stage fails.
fn continue_to(start: Solved, p: f64, r_from: f64, r_to: f64, m: usize) -> Result<Solved> {
    let (mut theta, mut refs, mut emax) = start;
    let mut rc = r_from;
    let mut step = STEP;
    while rc < r_to {
        let rn = (rc * step).min(r_to);
        let sc = rn.ln() / rc.ln();
        let th: Vec<f64> = theta.iter().enumerate().map(|(i, v)| if i == 0 { *v } else { v * sc }).collect();
        let rf: Vec<f64> = refs.iter().map(|x| (x.ln() * sc).exp()).collect();
        match solve_on(th, rf, p, rn, m) {
            Ok(out) => {
                theta = out.0;
                refs = out.1;
                emax = out.2;
                rc = rn;
                step = (step * step).min(STEP);
            }
            Err(e) if step > 1.05 => {
                step = step.sqrt();
                let _ = e;
            }
            Err(e) => return Err(e),
        }
    }
    Ok((theta, refs, emax))
}

fn finish(v: Solved, p: f64, ratio: f64, m: usize) -> PowerFit {
    let (theta, _, emax) = v;
    let mut zeros: Vec<f64> = theta[1..m + 2].iter().map(|v| v.exp()).collect();
    let mut poles: Vec<f64> = theta[m + 2..].iter().map(|v| v.exp()).collect();
    zeros.sort_by(|a, b| a.partial_cmp(b).unwrap());
    poles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    PowerFit { p, ratio, log_b: theta[0], zeros, poles, max_rel_error: emax }
}
