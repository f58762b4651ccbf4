//! Time series files, annual maxima and year pairing.
//!
//! File format: a header line `# variable=<name> units=<u>`, an optional
//! `timestamp,value` column line, then one `timestamp,value` row per
//! record. Timestamps are ISO-8601 in UTC and strictly increasing; a value
//! of `NaN` or an empty field marks a missing record.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, TimeZone, Utc};

use crate::error::{Error, Result};
use crate::hetreg::PairedMaxima;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub variable: String,
    pub units: String,
    pub times: Vec<DateTime<Utc>>,
    /// `None` for a missing record.
    pub values: Vec<Option<f64>>,
}

impl TimeSeries {
    pub fn new(variable: &str, units: &str) -> Self {
        Self { variable: variable.into(), units: units.into(), times: Vec::new(), values: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends a record; timestamps must keep increasing.
    pub fn push(&mut self, t: DateTime<Utc>, value: Option<f64>) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if t <= last {
                return Err(Error::InvalidInput(format!("timestamp {t} does not follow {last}")));
            }
        }
        self.times.push(t);
        self.values.push(value);
        Ok(())
    }
}

fn parse_header(line: &str) -> Result<(String, String)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse { line: 1, message: "expected header `# variable=<name> units=<u>`".into() })?;
    let mut variable = None;
    let mut units = None;
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("variable", v)) => variable = Some(v.to_string()),
            Some(("units", v)) => units = Some(v.to_string()),
            _ => {}
        }
    }
    match (variable, units) {
        (Some(v), Some(u)) => Ok((v, u)),
        _ => Err(Error::Parse { line: 1, message: "header must name variable= and units=".into() }),
    }
}

pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(Utc.from_utc_datetime(&t));
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().and_then(|d| Some(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0)?)))
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

fn parse_value(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() || s == "NaN" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse { line, message: format!("invalid value `{s}`") }),
    }
}

pub fn parse_series(text: &str) -> Result<TimeSeries> {
    let mut lines = text.lines().enumerate();
    let (variable, units) = match lines.next() {
        Some((_, l)) if !l.trim().is_empty() => parse_header(l.trim())?,
        _ => return Err(Error::Parse { line: 1, message: "empty file".into() }),
    };
    let mut series = TimeSeries::new(&variable, &units);
    for (i, raw) in lines {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let (ts, val) = l
            .split_once(',')
            .ok_or_else(|| Error::Parse { line, message: "expected `timestamp,value`".into() })?;
        let (ts, val) = (ts.trim(), val.trim());
        if series.is_empty() && ts.eq_ignore_ascii_case("timestamp") {
            continue;
        }
        if val.contains(',') {
            return Err(Error::Parse { line, message: "too many fields".into() });
        }
        let t = parse_timestamp(ts).ok_or_else(|| Error::Parse { line, message: format!("invalid timestamp `{ts}`") })?;
        let v = parse_value(val, line)?;
        series.push(t, v).map_err(|_| Error::Parse { line, message: format!("timestamp {ts} is not after the previous row") })?;
    }
    Ok(series)
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_series(&text)
}

/// Inverse of [`parse_series`]; values use the shortest round-trip form.
pub fn write_series(series: &TimeSeries) -> String {
    let mut out = format!("# variable={} units={}\ntimestamp,value\n", series.variable, series.units);
    for (t, v) in series.times.iter().zip(&series.values) {
        match v {
            Some(v) => out.push_str(&format!("{},{v}\n", format_timestamp(t))),
            None => out.push_str(&format!("{},NaN\n", format_timestamp(t))),
        }
    }
    out
}

/// Annual values at 1 January 00:00 UTC of each year.
pub fn annual_series(variable: &str, units: &str, years: &[i32], values: &[f64]) -> Result<TimeSeries> {
    let mut s = TimeSeries::new(variable, units);
    for (&y, &v) in years.iter().zip(values) {
        s.push(year_start(y)?, Some(v))?;
    }
    Ok(s)
}

/// `per_year[i]` values spread evenly across year `years[i]`.
pub fn spread_series(variable: &str, units: &str, years: &[i32], per_year: &[Vec<f64>]) -> Result<TimeSeries> {
    let mut s = TimeSeries::new(variable, units);
    for (&y, vals) in years.iter().zip(per_year) {
        let start = year_start(y)?;
        let span = year_start(y + 1)? - start;
        let step = span.num_seconds() / vals.len().max(1) as i64;
        for (k, &v) in vals.iter().enumerate() {
            s.push(start + chrono::Duration::seconds(step * k as i64), Some(v))?;
        }
    }
    Ok(s)
}

fn year_start(y: i32) -> Result<DateTime<Utc>> {
    Utc.with_ymd_and_hms(y, 1, 1, 0, 0, 0)
        .single()
        .ok_or_else(|| Error::InvalidInput(format!("year {y} out of range")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnualMaxima {
    pub years: Vec<i32>,
    pub maxima: Vec<f64>,
    /// Observed over expected records, capped at 1.
    pub coverage: Vec<f64>,
    /// Years below the coverage floor, with their coverage.
    pub dropped: Vec<(i32, f64)>,
}

impl AnnualMaxima {
    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }
}

/// Expected records per year follow from the median sampling interval, so
/// an hourly series expects ~8760 and an annual one expects 1.
pub fn annual_maxima(series: &TimeSeries, coverage_floor: f64) -> AnnualMaxima {
    let mut out = AnnualMaxima { years: Vec::new(), maxima: Vec::new(), coverage: Vec::new(), dropped: Vec::new() };
    if series.is_empty() {
        return out;
    }
    let mut gaps: Vec<i64> = series.times.windows(2).map(|w| (w[1] - w[0]).num_seconds()).collect();
    gaps.sort_unstable();
    let interval = if gaps.is_empty() { None } else { Some(gaps[gaps.len() / 2].max(1) as f64) };

    let mut by_year: BTreeMap<i32, (usize, Option<f64>)> = BTreeMap::new();
    for (t, v) in series.times.iter().zip(&series.values) {
        let e = by_year.entry(t.year()).or_insert((0, None));
        if let Some(v) = v {
            e.0 += 1;
            e.1 = Some(e.1.map_or(*v, |m: f64| m.max(*v)));
        }
    }
    let first = *by_year.keys().next().unwrap();
    let last = *by_year.keys().next_back().unwrap();
    for year in first..=last {
        let (count, max) = by_year.get(&year).copied().unwrap_or((0, None));
        let expected = match (interval, year_start(year), year_start(year + 1)) {
            (Some(dt), Ok(a), Ok(b)) => ((b - a).num_seconds() as f64 / dt).max(1.0),
            _ => 1.0,
        };
        let coverage = (count as f64 / expected).min(1.0);
        match max {
            Some(m) if coverage >= coverage_floor => {
                out.years.push(year);
                out.maxima.push(m);
                out.coverage.push(coverage);
            }
            _ => out.dropped.push((year, coverage)),
        }
    }
    out
}

/// Values above `u` in the years kept by [`annual_maxima`].
pub fn exceedances(series: &TimeSeries, u: f64, kept: &AnnualMaxima) -> Vec<f64> {
    series
        .times
        .iter()
        .zip(&series.values)
        .filter_map(|(t, v)| match v {
            Some(v) if *v > u && kept.years.binary_search(&t.year()).is_ok() => Some(*v),
            _ => None,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pairing {
    pub data: PairedMaxima<f64>,
    pub unpaired_x: Vec<i32>,
    pub unpaired_z: Vec<i32>,
}

/// Intersects the year sets and forms `y = z - x`.
pub fn pair_differences(x: &AnnualMaxima, z: &AnnualMaxima) -> Pairing {
    let zmap: BTreeMap<i32, f64> = z.years.iter().copied().zip(z.maxima.iter().copied()).collect();
    let (mut years, mut xs, mut ys, mut unpaired_x) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (&year, &xv) in x.years.iter().zip(&x.maxima) {
        match zmap.get(&year) {
            Some(&zv) => {
                years.push(year);
                xs.push(xv);
                ys.push(zv - xv);
            }
            None => unpaired_x.push(year),
        }
    }
    let unpaired_z = z.years.iter().copied().filter(|y| years.binary_search(y).is_err()).collect();
    if years.is_empty() {
        log::warn!("reanalysis and instrumental maxima share no years");
    }
    // Years come from a map iteration of distinct keys, so this cannot fail.
    let data = PairedMaxima::new(years, xs, ys).expect("distinct years");
    Pairing { data, unpaired_x, unpaired_z }
}
