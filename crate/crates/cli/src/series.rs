//! Gridded (Hs, period) series: raw CSV ingestion, the normalised series file, day splitting.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use seafield::estimation::Dataset;
use seafield::{Error, Result};

use crate::config::IngestConfig;
use crate::output::Header;

/// Rectangular lon/lat lattice with one optional (Hs, period) pair per cell and time.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedSeries {
    pub lons: Vec<f64>,
    pub lats: Vec<f64>,
    /// Hours since the first record.
    pub times: Vec<f64>,
    /// `values[t][cell]` with cells ordered latitude-major; `None` is missing.
    pub values: Vec<Vec<Option<(f64, f64)>>>,
}

impl GriddedSeries {
    pub fn n_cells(&self) -> usize {
        self.lons.len() * self.lats.len()
    }

    pub fn cell(&self, c: usize) -> [f64; 2] {
        [self.lons[c % self.lons.len()], self.lats[c / self.lons.len()]]
    }

    pub fn locations(&self) -> Vec<[f64; 2]> {
        (0..self.n_cells()).map(|c| self.cell(c)).collect()
    }

    /// Day index of each time, counted from the first record.
    pub fn days(&self) -> Vec<i64> {
        self.times.iter().map(|t| (t / 24.0 + 1e-9).floor() as i64).collect()
    }

    /// Log Hs and log period with missing cells as `NaN`.
    pub fn to_dataset(&self) -> Result<Dataset> {
        let pick = |f: fn(&(f64, f64)) -> f64| -> Vec<Vec<f64>> {
            self.values.iter().map(|row| row.iter().map(|v| v.as_ref().map_or(f64::NAN, |p| f(p).ln())).collect()).collect()
        };
        Dataset::new(self.locations(), pick(|p| p.0), pick(|p| p.1))
    }

    fn keep_times(&self, keep: &[usize]) -> GriddedSeries {
        GriddedSeries {
            lons: self.lons.clone(),
            lats: self.lats.clone(),
            times: keep.iter().map(|&t| self.times[t]).collect(),
            values: keep.iter().map(|&t| self.values[t].clone()).collect(),
        }
    }

    /// Alternate days starting with the first day for training.
    pub fn split(&self) -> Result<(GriddedSeries, GriddedSeries)> {
        let days = self.days();
        let distinct: Vec<i64> = days.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let (train_days, _) = seafield::estimation::split_alternate(distinct.len())?;
        let train: BTreeSet<i64> = train_days.iter().map(|&k| distinct[k]).collect();
        let (a, b): (Vec<usize>, Vec<usize>) = (0..days.len()).partition(|&t| train.contains(&days[t]));
        Ok((self.keep_times(&a), self.keep_times(&b)))
    }

    /// Normalised CSV: `time,lon,lat,hs,period`, one row per present cell.
    pub fn to_csv(&self, header: &Header) -> String {
        let mut s = header.render("series");
        s.push_str("time,lon,lat,hs,period\n");
        for (t, row) in self.values.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                if let Some((h, p)) = v {
                    let l = self.cell(c);
                    s.push_str(&format!("{},{},{},{},{}\n", self.times[t], l[0], l[1], h, p));
                }
            }
        }
        s
    }

    pub fn read(path: &std::path::Path) -> Result<GriddedSeries> {
        let f = std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let cfg = IngestConfig {
            time_column: "time".into(),
            lon_column: "lon".into(),
            lat_column: "lat".into(),
            hs_column: "hs".into(),
            period_column: "period".into(),
            thin_hours: 0.0,
        };
        ingest(f, &cfg)
    }
}

fn parse_missing(field: &str, line: u64, name: &str) -> Result<Option<f64>> {
    let t = field.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("nan") || t.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    t.parse::<f64>().map(Some).map_err(|_| Error::Parse { line: line as usize, msg: format!("bad {name} value '{t}'") })
}

/// Reads a flat CSV of `time, lon, lat, Hs, period` records (any column order,
/// named by the config) into a lattice series, thinning to one time per `thin_hours`.
pub fn ingest<R: Read>(input: R, cfg: &IngestConfig) -> Result<GriddedSeries> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse { line: 1, msg: format!("missing column '{name}'") });
    let (ct, cx, cy, ch, cp) = (col(&cfg.time_column)?, col(&cfg.lon_column)?, col(&cfg.lat_column)?, col(&cfg.hs_column)?, col(&cfg.period_column)?);
    let mut records: Vec<(f64, f64, f64, Option<(f64, f64)>, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), msg: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, name: &str| -> Result<f64> {
            parse_missing(get(i), line, name)?.ok_or(Error::Parse { line: line as usize, msg: format!("{name} is required") })
        };
        let (t, lon, lat) = (num(ct, "time")?, num(cx, "lon")?, num(cy, "lat")?);
        let hs = parse_missing(get(ch), line, "Hs")?;
        let per = parse_missing(get(cp), line, "period")?;
        if let Some(h) = hs {
            if !(h > 0.0) {
                return Err(Error::Parse { line: line as usize, msg: format!("Hs must be positive, got {h}") });
            }
        }
        if let Some(p) = per {
            if !(p > 0.0) {
                return Err(Error::Parse { line: line as usize, msg: format!("period must be positive, got {p}") });
            }
        }
        let v = match (hs, per) {
            (Some(h), Some(p)) if h.is_finite() && p.is_finite() => Some((h, p)),
            _ => None,
        };
        records.push((t, lon, lat, v, line));
    }
    if records.is_empty() {
        return Err(Error::Data("input has no records".into()));
    }
    let t0 = records.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let keep = |t: f64| {
        if cfg.thin_hours <= 0.0 {
            return true;
        }
        let k = (t - t0) / cfg.thin_hours;
        (k - k.round()).abs() < 1e-6
    };
    let key = |v: f64| v.to_bits();
    let mut lons: Vec<f64> = records.iter().map(|r| r.1).collect();
    let mut lats: Vec<f64> = records.iter().map(|r| r.2).collect();
    for v in [&mut lons, &mut lats] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    let lon_ix: BTreeMap<u64, usize> = lons.iter().enumerate().map(|(i, &v)| (key(v), i)).collect();
    let lat_ix: BTreeMap<u64, usize> = lats.iter().enumerate().map(|(i, &v)| (key(v), i)).collect();
    let mut times: Vec<f64> = records.iter().map(|r| r.0 - t0).filter(|&t| keep(t + t0)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let time_ix: BTreeMap<u64, usize> = times.iter().enumerate().map(|(i, &v)| (key(v), i)).collect();
    let n_cells = lons.len() * lats.len();
    let mut values = vec![vec![None; n_cells]; times.len()];
    let mut seen = vec![vec![false; n_cells]; times.len()];
    for (t, lon, lat, v, line) in records {
        if !keep(t) {
            continue;
        }
        let ti = time_ix[&key(t - t0)];
        let c = lat_ix[&key(lat)] * lons.len() + lon_ix[&key(lon)];
        if seen[ti][c] {
            return Err(Error::Parse { line: line as usize, msg: format!("duplicate record for time {t} at ({lon}, {lat})") });
        }
        seen[ti][c] = true;
        values[ti][c] = v;
    }
    Ok(GriddedSeries { lons, lats, times, values })
}
