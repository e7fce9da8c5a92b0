//! Replicated observations, pointwise standardisation and sample statistics.

use crate::error::{Error, Result};

/// Daily replicates of log Hs and log period at fixed locations.
///
/// Missing values are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub locations: Vec<[f64; 2]>,
    /// `x[day][location]`, log Hs.
    pub x: Vec<Vec<f64>>,
    /// `y[day][location]`, log period.
    pub y: Vec<Vec<f64>>,
}

/// Per-location mean and variance of one field.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: Vec<usize>,
}

impl Dataset {
    pub fn new(locations: Vec<[f64; 2]>, x: Vec<Vec<f64>>, y: Vec<Vec<f64>>) -> Result<Self> {
        let m = locations.len();
        if x.len() != y.len() {
            return Err(Error::Data("x and y have different numbers of replicates".into()));
        }
        for (d, (rx, ry)) in x.iter().zip(&y).enumerate() {
            if rx.len() != m || ry.len() != m {
                return Err(Error::Data(format!("replicate {d} does not cover {m} locations")));
            }
            if rx.iter().chain(ry).any(|v| v.is_infinite()) {
                return Err(Error::Data(format!("replicate {d} has infinite values")));
            }
        }
        Ok(Dataset { locations, x, y })
    }

    pub fn n_replicates(&self) -> usize {
        self.x.len()
    }

    pub fn n_locations(&self) -> usize {
        self.locations.len()
    }

    /// Observations per location where both fields are present.
    pub fn counts(&self) -> Vec<usize> {
        (0..self.n_locations())
            .map(|j| self.x.iter().zip(&self.y).filter(|(a, b)| !a[j].is_nan() && !b[j].is_nan()).count())
            .collect()
    }

    /// Keeps only the given replicate indices.
    pub fn subset(&self, days: &[usize]) -> Dataset {
        Dataset {
            locations: self.locations.clone(),
            x: days.iter().map(|&d| self.x[d].clone()).collect(),
            y: days.iter().map(|&d| self.y[d].clone()).collect(),
        }
    }

    /// Keeps only the given locations.
    pub fn select_locations(&self, keep: &[usize]) -> Dataset {
        let pick = |r: &Vec<f64>| keep.iter().map(|&j| r[j]).collect::<Vec<_>>();
        Dataset {
            locations: keep.iter().map(|&j| self.locations[j]).collect(),
            x: self.x.iter().map(pick).collect(),
            y: self.y.iter().map(pick).collect(),
        }
    }

    /// Locations with at least two observations in both fields and nonzero spread.
    pub fn usable_locations(&self) -> Vec<usize> {
        let sx = point_stats(&self.x);
        let sy = point_stats(&self.y);
        (0..self.n_locations())
            .filter(|&j| sx.count[j] >= 2 && sy.count[j] >= 2 && sx.var[j] > 0.0 && sy.var[j] > 0.0)
            .collect()
    }
}

/// Mean and unbiased variance per location over non-missing replicates.
pub fn point_stats(reps: &[Vec<f64>]) -> PointStats {
    let m = reps.first().map_or(0, |r| r.len());
    let mut mean = vec![0.0; m];
    let mut var = vec![0.0; m];
    let mut count = vec![0usize; m];
    for j in 0..m {
        let vals: Vec<f64> = reps.iter().map(|r| r[j]).filter(|v| !v.is_nan()).collect();
        let n = vals.len();
        count[j] = n;
        if n == 0 {
            mean[j] = f64::NAN;
            var[j] = f64::NAN;
            continue;
        }
        let mu = vals.iter().sum::<f64>() / n as f64;
        mean[j] = mu;
        var[j] = if n > 1 { vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    }
    PointStats { mean, var, count }
}

/// `(v − mean)/√var` per location; missing values stay missing.
pub fn standardize_with(reps: &[Vec<f64>], s: &PointStats) -> Result<Vec<Vec<f64>>> {
    if let Some(j) = s.var.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Data(format!("location {j} has zero or undefined variance")));
    }
    Ok(reps
        .iter()
        .map(|r| r.iter().enumerate().map(|(j, v)| (v - s.mean[j]) / s.var[j].sqrt()).collect())
        .collect())
}

/// Alternate days: indices `0, 2, 4, …` train and `1, 3, …` test.
pub fn split_alternate(n_days: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_days < 2 {
        return Err(Error::Data(format!("need at least two days to split, got {n_days}")));
    }
    Ok(((0..n_days).step_by(2).collect(), (1..n_days).step_by(2).collect()))
}

/// Pearson correlation over replicates where both series are present.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a.iter().zip(b).filter(|(x, y)| !x.is_nan() && !y.is_nan()).map(|(x, y)| (*x, *y)).collect();
    let n = pairs.len();
    if n < 2 {
        return None;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Pointwise and shift-maximised sample cross-correlations.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossCorrStats {
    pub gamma_hat: Vec<f64>,
    /// Largest-magnitude correlation between X at `j` and Y within the search radius.
    pub shifted_gamma_hat: Vec<f64>,
    /// Offset from location `j` to the maximising Y location.
    pub shifts: Vec<[f64; 2]>,
    pub counts: Vec<usize>,
    /// Locations without a defined correlation (too few values or no spread).
    pub excluded: Vec<usize>,
}

pub fn sample_crosscorr_stats(data: &Dataset, radius: f64) -> Result<CrossCorrStats> {
    if data.n_replicates() < 2 {
        return Err(Error::Data("need at least two replicates".into()));
    }
    let m = data.n_locations();
    let col = |reps: &[Vec<f64>], j: usize| reps.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let xs: Vec<Vec<f64>> = (0..m).map(|j| col(&data.x, j)).collect();
    let ys: Vec<Vec<f64>> = (0..m).map(|j| col(&data.y, j)).collect();
    let counts = data.counts();
    let mut out = CrossCorrStats {
        gamma_hat: vec![f64::NAN; m],
        shifted_gamma_hat: vec![f64::NAN; m],
        shifts: vec![[0.0, 0.0]; m],
        counts,
        excluded: vec![],
    };
    let r2 = radius * radius;
    for j in 0..m {
        let Some(g) = pearson(&xs[j], &ys[j]) else {
            out.excluded.push(j);
            continue;
        };
        out.gamma_hat[j] = g;
        let mut best = (g, [0.0, 0.0]);
        let pj = data.locations[j];
        for l in 0..m {
            let pl = data.locations[l];
            let d = [pl[0] - pj[0], pl[1] - pj[1]];
            if l == j || d[0] * d[0] + d[1] * d[1] > r2 * (1.0 + 1e-12) {
                continue;
            }
            if let Some(v) = pearson(&xs[j], &ys[l]) {
                if v.abs() > best.0.abs() {
                    best = (v, d);
                }
            }
        }
        out.shifted_gamma_hat[j] = best.0;
        out.shifts[j] = best.1;
    }
    Ok(out)
}
