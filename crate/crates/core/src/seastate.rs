//! Bretschneider sea states: spectrum, period conversions and spectral moments.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const G: f64 = 9.81;

/// `Tp / Tz` under the Bretschneider spectrum.
pub const TP_PER_TZ: f64 = 1.408;
/// `Tp / T1` under the Bretschneider spectrum.
pub const TP_PER_T1: f64 = 1.2965;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PeriodKind {
    Tp,
    T1,
    Tz,
}

impl FromStr for PeriodKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tp" => Ok(PeriodKind::Tp),
            "t1" | "tm01" => Ok(PeriodKind::T1),
            "tz" | "tm02" => Ok(PeriodKind::Tz),
            other => Err(Error::Config(format!("unknown period kind '{other}'"))),
        }
    }
}

impl fmt::Display for PeriodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PeriodKind::Tp => "Tp",
            PeriodKind::T1 => "T1",
            PeriodKind::Tz => "Tz",
        })
    }
}

fn per_tp(kind: PeriodKind) -> f64 {
    match kind {
        PeriodKind::Tp => 1.0,
        PeriodKind::T1 => 1.0 / TP_PER_T1,
        PeriodKind::Tz => 1.0 / TP_PER_TZ,
    }
}

/// Converts a period between kinds by the fixed Bretschneider ratios.
pub fn convert_period(value: f64, from: PeriodKind, to: PeriodKind) -> Result<f64> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::DegenerateSea(format!("period must be positive, got {value}")));
    }
    if from == to {
        return Ok(value);
    }
    Ok(value / per_tp(from) * per_tp(to))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaStateParams {
    pub hs: f64,
    pub period: f64,
    pub kind: PeriodKind,
}

impl SeaStateParams {
    pub fn new(hs: f64, period: f64, kind: PeriodKind) -> Result<Self> {
        if !(hs > 0.0 && hs.is_finite()) {
            return Err(Error::DegenerateSea(format!("Hs must be positive, got {hs}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::DegenerateSea(format!("period must be positive, got {period}")));
        }
        Ok(SeaStateParams { hs, period, kind })
    }

    pub fn tp(&self) -> f64 {
        self.period / per_tp(self.kind)
    }

    pub fn omega_p(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.tp()
    }
}

/// `S(ω) = c ω⁻⁵ exp(−1.25 ω_p⁴/ω⁴)` with `c = (1.25/4) Hs² ω_p⁴`; zero for `ω ≤ 0`.
pub fn bretschneider(p: &SeaStateParams, omega: f64) -> f64 {
    if !(omega > 0.0) {
        return 0.0;
    }
    let wp4 = p.omega_p().powi(4);
    let c = 1.25 / 4.0 * p.hs * p.hs * wp4;
    let r = wp4 / omega.powi(4);
    c / omega.powi(5) * (-1.25 * r).exp()
}

/// Integration band for the moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CutoffPolicy {
    /// Band chosen so the omitted tails hold less than the given fractions of `m00` and `m02`.
    Tails { m00: f64, m02: f64 },
    /// Fixed band `[lo·ω_p, hi·ω_p]`.
    Fixed { lo: f64, hi: f64 },
}

impl Default for CutoffPolicy {
    fn default() -> Self {
        CutoffPolicy::Tails { m00: 1e-6, m02: 1e-4 }
    }
}

impl CutoffPolicy {
    /// Band as multiples of `ω_p`.
    ///
    /// For `n < 4` the upper tail of `∫ωⁿS` is below `c·ω⁻⁽⁴⁻ⁿ⁾/(4−n)`, and the full
    /// integrals are `m₀ = c/(5ω_p⁴)` and `m₂ = c√π/(4√1.25 ω_p²)`.
    pub fn band(&self) -> Result<(f64, f64)> {
        match *self {
            CutoffPolicy::Fixed { lo, hi } => {
                if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                    return Err(Error::Config(format!("invalid band [{lo}, {hi}]")));
                }
                Ok((lo, hi))
            }
            CutoffPolicy::Tails { m00, m02 } => {
                if !(m00 > 0.0 && m02 > 0.0) {
                    return Err(Error::Config("tail fractions must be positive".into()));
                }
                let x0 = (1.25 / (4.0 * m00)).powf(0.25);
                let x2 = (2.0 * 1.25f64.sqrt() / (std::f64::consts::PI.sqrt() * m02)).sqrt();
                // below 0.3 ω_p the spectrum is under e^{-150} of its peak
                Ok((0.3, 1.01 * x0.max(x2).max(8.0)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoments {
    pub m00: f64,
    pub m02: f64,
    pub m11: f64,
    pub m20: f64,
    /// Integration band in rad/s.
    pub band: (f64, f64),
}

/// `m_ij = ∫ (ω²/g)^i ω^j S(ω) dω` over the policy band.
pub fn spectral_moments(p: &SeaStateParams, policy: &CutoffPolicy) -> Result<SpectralMoments> {
    let wp = p.omega_p();
    let (lo, hi) = policy.band()?;
    let (a, b) = (lo * wp, hi * wp);
    // integrate in log ω; S is smooth on that scale
    let moment = |i: i32, j: i32| -> Result<f64> {
        let f = |t: f64| {
            let w = t.exp();
            (w * w / G).powi(i) * w.powi(j) * bretschneider(p, w) * w
        };
        Ok(gauss_kronrod(f, a.ln(), b.ln(), 1e-12, 4000)?.0)
    };
    let m = SpectralMoments { m00: moment(0, 0)?, m02: moment(0, 2)?, m11: moment(1, 1)?, m20: moment(2, 0)?, band: (a, b) };
    if !(m.m00 > 0.0) {
        return Err(Error::DegenerateSea("zero spectral mass".into()));
    }
    Ok(m)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive 7/15-point Gauss–Kronrod quadrature.
///
/// Returns the integral and its error estimate; fails when the relative
/// tolerance is not met within `max_pieces` subintervals.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, max_pieces: usize) -> Result<(f64, f64)> {
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, err: e });
    let (mut total, mut err) = (v, e);
    while err > rel_tol * total.abs() && err > f64::MIN_POSITIVE {
        if heap.len() >= max_pieces || !total.is_finite() {
            return Err(Error::Quadrature { residual: err });
        }
        let p = heap.pop().expect("nonempty");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Piece { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, err: e2 });
    }
    // re-sum to drop accumulated cancellation in the running totals
    let total: f64 = heap.iter().map(|p| p.value).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    Ok((total, err))
}

/// Moments of the unit sea state `Hs = 1`, `Tp = 1`, rescaled exactly:
/// `m_ij(Hs, Tp) = Hs² Tp^{−(2i+j)} m_ij(1, 1)` because the band scales with `ω_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTable {
    unit: SpectralMoments,
}

impl MomentTable {
    pub fn new(policy: &CutoffPolicy) -> Result<Self> {
        let unit = spectral_moments(&SeaStateParams::new(1.0, 1.0, PeriodKind::Tp)?, policy)?;
        Ok(MomentTable { unit })
    }

    pub fn at(&self, p: &SeaStateParams) -> SpectralMoments {
        let (h2, tp) = (p.hs * p.hs, p.tp());
        let u = &self.unit;
        SpectralMoments {
            m00: h2 * u.m00,
            m02: h2 * u.m02 / (tp * tp),
            m11: h2 * u.m11 / tp.powi(3),
            m20: h2 * u.m20 / tp.powi(4),
            band: (u.band.0 / tp, u.band.1 / tp),
        }
    }
}
