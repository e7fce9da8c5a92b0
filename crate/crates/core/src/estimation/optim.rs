//! BFGS with central finite-difference gradients and a strong Wolfe line search.

use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Stop when `‖∇f‖∞` falls below this.
    pub grad_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
    /// Stop (unconverged) after this many iterations without relative progress above `1e-14`.
    pub stall_iters: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions { max_iter: 500, grad_tol: 1e-5, fd_step: 1e-5, stall_iters: 5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    /// Objective value after each accepted iterate, starting with `f(x0)`.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

struct Counted<'a, F> {
    f: &'a F,
    calls: std::sync::atomic::AtomicUsize,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Counted<'_, F> {
    fn eval(&self, x: &[f64]) -> f64 {
        self.calls.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Central-difference gradient; components are evaluated in parallel.
pub fn fd_gradient<F: Fn(&[f64]) -> f64 + Sync>(f: &F, x: &[f64], rel_step: f64) -> Vec<f64> {
    (0..x.len())
        .into_par_iter()
        .map(|i| {
            let h = rel_step * x[i].abs().max(1.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let (fp, fm) = (f(&xp), f(&xm));
            if fp.is_finite() && fm.is_finite() {
                (fp - fm) / (2.0 * h)
            } else {
                let f0 = f(x);
                if fp.is_finite() {
                    (fp - f0) / h
                } else if fm.is_finite() {
                    (f0 - fm) / h
                } else {
                    f64::NAN
                }
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

struct Trial {
    step: f64,
    f: f64,
    g: Vec<f64>,
    dphi: f64,
}

/// Minimises `f` from `x0`. Non-finite objective values are treated as `+∞`.
pub fn minimize<F: Fn(&[f64]) -> f64 + Sync>(f: &F, x0: &[f64], opts: &OptimOptions) -> OptimResult {
    let n = x0.len();
    let cf = Counted { f, calls: Default::default() };
    let obj = |x: &[f64]| cf.eval(x);
    let grad = |x: &[f64]| fd_gradient(&obj, x, opts.fd_step);

    let mut x = x0.to_vec();
    let mut fx = obj(&x);
    let mut history = vec![fx];
    let finish = |x: Vec<f64>, fx: f64, it: usize, ok: bool, gn: f64, history: Vec<f64>| OptimResult {
        x,
        f: fx,
        iterations: it,
        converged: ok,
        grad_norm: gn,
        history,
        evaluations: cf.calls.load(std::sync::atomic::Ordering::Relaxed),
    };
    if !fx.is_finite() || n == 0 {
        return finish(x, fx, 0, n == 0 && fx.is_finite(), 0.0, history);
    }
    let mut g = grad(&x);
    if g.iter().any(|v| !v.is_finite()) {
        return finish(x, fx, 0, false, f64::INFINITY, history);
    }
    // inverse Hessian approximation, row-major
    let mut hinv = vec![0.0; n * n];
    let reset = |h: &mut Vec<f64>, scale: f64| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = scale;
        }
    };
    reset(&mut hinv, 1.0 / inf_norm(&g).max(1.0));
    let mut stall = 0;
    let mut it = 0;
    while it < opts.max_iter {
        let gn = inf_norm(&g);
        if gn < opts.grad_tol {
            return finish(x, fx, it, true, gn, history);
        }
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&hinv[i * n..(i + 1) * n], &g)).collect();
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            reset(&mut hinv, 1.0 / gn.max(1.0));
            d = g.iter().map(|v| -v / gn.max(1.0)).collect();
            slope = dot(&d, &g);
        }
        let trial = line_search(&obj, &grad, &x, fx, &d, slope);
        let Some(t) = trial else {
            // retry once along steepest descent with a fresh Hessian
            reset(&mut hinv, 1.0 / gn.max(1.0));
            let sd: Vec<f64> = g.iter().map(|v| -v / gn.max(1.0)).collect();
            match line_search(&obj, &grad, &x, fx, &sd, dot(&sd, &g)) {
                Some(t) => {
                    it += 1;
                    x = axpy(&x, t.step, &sd);
                    fx = t.f;
                    g = t.g;
                    history.push(fx);
                    continue;
                }
                None => return finish(x, fx, it, false, gn, history),
            }
        };
        it += 1;
        let s: Vec<f64> = d.iter().map(|v| v * t.step).collect();
        let y: Vec<f64> = t.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let progress = (fx - t.f) / fx.abs().max(1.0);
        x = axpy(&x, 1.0, &s);
        fx = t.f;
        g = t.g;
        history.push(fx);
        stall = if progress <= 1e-14 { stall + 1 } else { 0 };
        if stall >= opts.stall_iters {
            let gn = inf_norm(&g);
            return finish(x, fx, it, gn < opts.grad_tol, gn, history);
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if it == 1 {
                reset(&mut hinv, sy / dot(&y, &y));
            }
            bfgs_update(&mut hinv, &s, &y, sy);
        }
    }
    let gn = inf_norm(&g);
    finish(x, fx, it, gn < opts.grad_tol, gn, history)
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;

fn line_search<O, G>(obj: &O, grad: &G, x: &[f64], f0: f64, d: &[f64], slope0: f64) -> Option<Trial>
where
    O: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let eval = |a: f64| -> Trial {
        let xa = axpy(x, a, d);
        let f = obj(&xa);
        if !f.is_finite() {
            return Trial { step: a, f: f64::INFINITY, g: vec![], dphi: f64::NAN };
        }
        let g = grad(&xa);
        let dphi = dot(&g, d);
        Trial { step: a, f, g, dphi }
    };
    let mut prev = Trial { step: 0.0, f: f0, g: vec![], dphi: slope0 };
    let mut a = 1.0;
    for i in 0..30 {
        let t = eval(a);
        if !t.f.is_finite() {
            // shrink into the finite region
            a = 0.5 * (prev.step + a);
            if a - prev.step < 1e-16 {
                return None;
            }
            continue;
        }
        if t.f > f0 + C1 * a * slope0 || (i > 0 && t.f >= prev.f) {
            return zoom(&eval, f0, slope0, prev, t);
        }
        if t.dphi.abs() <= -C2 * slope0 {
            return Some(t);
        }
        if t.dphi >= 0.0 {
            return zoom(&eval, f0, slope0, t, prev);
        }
        prev = t;
        a *= 2.0;
    }
    None
}

fn zoom<E: Fn(f64) -> Trial>(eval: &E, f0: f64, slope0: f64, mut lo: Trial, mut hi: Trial) -> Option<Trial> {
    for _ in 0..40 {
        let a = if lo.dphi.is_finite() && hi.f.is_finite() {
            // quadratic interpolation from lo's value and slope, safeguarded
            let (a0, a1) = (lo.step, hi.step);
            let denom = 2.0 * (hi.f - lo.f - lo.dphi * (a1 - a0));
            let q = if denom.abs() > 0.0 { a0 - lo.dphi * (a1 - a0) * (a1 - a0) / denom } else { f64::NAN };
            let (l, h) = (a0.min(a1), a0.max(a1));
            if q.is_finite() && q > l + 0.1 * (h - l) && q < h - 0.1 * (h - l) {
                q
            } else {
                0.5 * (a0 + a1)
            }
        } else {
            0.5 * (lo.step + hi.step)
        };
        if (hi.step - lo.step).abs() < 1e-14 * lo.step.abs().max(1.0) {
            break;
        }
        let t = eval(a);
        if !t.f.is_finite() || t.f > f0 + C1 * a * slope0 || t.f >= lo.f {
            hi = t;
        } else {
            if t.dphi.abs() <= -C2 * slope0 {
                return Some(t);
            }
            if t.dphi * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
    }
    // accept a strict decrease even without the curvature condition
    if lo.step > 0.0 && lo.f < f0 && !lo.g.is_empty() {
        Some(lo)
    } else {
        None
    }
}
