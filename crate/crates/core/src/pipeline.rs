//! Tick data to a testable path, and the per-day threshold sweep.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::path::SamplePath;
use crate::teststat::{run_test, Decision, TestReport, ThresholdSpec};

/// Raw trades: `(seconds from midnight, price)`, sorted by time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickSeries {
    records: Vec<(f64, f64)>,
}

impl TickSeries {
    /// Validates prices and stably sorts by timestamp.
    pub fn new(mut records: Vec<(f64, f64)>) -> Result<Self> {
        if records.is_empty() {
            return domain("tick series is empty");
        }
        if let Some(i) = records.iter().position(|&(t, p)| !(p > 0.0) || !p.is_finite() || !t.is_finite()) {
            return domain(format!("record {i} has a non-positive price or non-finite field"));
        }
        records.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(TickSeries { records })
    }

    pub fn records(&self) -> &[(f64, f64)] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["timestamp", "price"])?;
        for (t, p) in &self.records {
            w.write_record([t.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a `timestamp,price` CSV. Every malformed row is reported.
pub fn load_ticks<R: Read>(source: R) -> Result<TickSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(source);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "timestamp" || &headers[1] != "price" {
        return Err(Error::Load { message: "expected header `timestamp,price`".into(), lines: vec![1] });
    }
    let mut records = Vec::new();
    let mut bad = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let line = idx + 2;
        let parsed = rec.ok().and_then(|r| {
            if r.len() != 2 {
                return None;
            }
            let t = r[0].parse::<f64>().ok()?;
            let p = r[1].parse::<f64>().ok()?;
            (t.is_finite() && p.is_finite() && p > 0.0).then_some((t, p))
        });
        match parsed {
            Some(rec) => records.push(rec),
            None => bad.push(line),
        }
    }
    if !bad.is_empty() {
        return Err(Error::Load { message: "malformed or non-positive rows".into(), lines: bad });
    }
    if records.is_empty() {
        return Err(Error::Load { message: "no tick records".into(), lines: vec![] });
    }
    TickSeries::new(records)
}

/// Trading session in seconds from midnight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub open: f64,
    pub close: f64,
}

impl Default for Session {
    /// 09:30 to 16:00.
    fn default() -> Self {
        Session { open: 34_200.0, close: 57_600.0 }
    }
}

/// Averages simultaneous prices, then samples the last price at or before
/// each grid time `open, open + interval, ...` (previous-tick rule). Only
/// ticks inside the session are used.
pub fn resample(ticks: &TickSeries, interval: f64, session: Session) -> Result<TickSeries> {
    if !(interval > 0.0) || !interval.is_finite() {
        return domain(format!("interval must be positive, got {interval}"));
    }
    if !(session.close > session.open) {
        return domain("session must have close > open");
    }
    let inside: Vec<(f64, f64)> = ticks
        .records()
        .iter()
        .copied()
        .filter(|&(t, _)| t >= session.open && t <= session.close)
        .collect();
    if inside.len() < 2 {
        return domain(format!("need at least 2 ticks inside the session, found {}", inside.len()));
    }

    let mut averaged: Vec<(f64, f64)> = Vec::with_capacity(inside.len());
    let mut i = 0;
    while i < inside.len() {
        let t = inside[i].0;
        let mut j = i;
        let mut sum = 0.0;
        while j < inside.len() && inside[j].0 == t {
            sum += inside[j].1;
            j += 1;
        }
        averaged.push((t, sum / (j - i) as f64));
        i = j;
    }

    if averaged[0].0 > session.open {
        return domain(format!(
            "leading gap: first tick at {} is after the session open {}",
            averaged[0].0, session.open
        ));
    }

    let steps = ((session.close - session.open) / interval + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut cursor = 0;
    for g in 0..=steps {
        let t = session.open + g as f64 * interval;
        while cursor + 1 < averaged.len() && averaged[cursor + 1].0 <= t {
            cursor += 1;
        }
        out.push((t, averaged[cursor].1));
    }
    TickSeries::new(out)
}

/// Regular log-price path with the trading day normalized to `T = 1`.
pub fn regularize(ticks: &TickSeries, interval: f64, session: Session) -> Result<SamplePath> {
    let grid = resample(ticks, interval, session)?;
    let logs: Vec<f64> = grid.records().iter().map(|&(_, p)| p.ln()).collect();
    if logs.len() < 3 {
        return domain("session is shorter than two sampling intervals");
    }
    SamplePath::from_values(1.0, logs)
}

/// Jump-robust realized variance `(1/T) Σ (ΔY)^2 1{|ΔY| <= Δ^{1/4}}`.
pub fn sigma_star_sq(path: &SamplePath) -> f64 {
    let cut = path.delta().powf(0.25);
    let sum: f64 = path
        .values()
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.abs() <= cut)
        .map(|d| d * d)
        .sum();
    sum / path.horizon()
}

/// Candidate threshold multipliers `δ` for `α = δ (ln n)^κ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaGrid {
    pub deltas: Vec<f64>,
    pub kappa: f64,
    pub varpi: f64,
    pub sigma_star_sq: f64,
    pub n: usize,
    pub horizon: f64,
}

impl DeltaGrid {
    /// Whether `δ (ln n)^κ Δ^ϖ <= σ̂* Δ^{1/2}`.
    pub fn admissible(&self, delta: f64) -> bool {
        let dt = self.horizon / self.n as f64;
        delta * (self.n as f64).ln().powf(self.kappa) * dt.powf(self.varpi)
            <= self.sigma_star_sq.sqrt() * dt.sqrt()
    }

    /// Largest admissible `δ`.
    pub fn delta_max(&self) -> f64 {
        let dt = self.horizon / self.n as f64;
        self.sigma_star_sq.sqrt() * dt.powf(0.5 - self.varpi) / (self.n as f64).ln().powf(self.kappa)
    }

    /// Caller-chosen grid with no admissibility filter, e.g. `1.0, 1.1, ..., 8.0`.
    pub fn fixed(path: &SamplePath, deltas: Vec<f64>, kappa: f64, varpi: f64) -> Result<Self> {
        check_grid_params(kappa, varpi)?;
        if deltas.iter().any(|&d| !(d > 0.0)) {
            return domain("grid values must be positive");
        }
        Ok(DeltaGrid { deltas, kappa, varpi, sigma_star_sq: sigma_star_sq(path), n: path.n(), horizon: path.horizon() })
    }

    /// `from, from + step, ...` up to `to` inclusive (within rounding).
    pub fn range(from: f64, to: f64, step: f64) -> Vec<f64> {
        let count = ((to - from) / step + 1e-9).floor() as usize;
        (0..=count).map(|i| from + i as f64 * step).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

fn check_grid_params(kappa: f64, varpi: f64) -> Result<()> {
    if !(kappa >= 0.0) {
        return domain(format!("kappa must be >= 0, got {kappa}"));
    }
    if !(varpi > 0.5) {
        return domain(format!("varpi must exceed 1/2, got {varpi}"));
    }
    Ok(())
}

/// Grid `{step, 2 step, ...}` of every `δ` satisfying the admissibility bound
/// for `path`. Empty when `σ̂* = 0`.
pub fn delta_grid(path: &SamplePath, kappa: f64, varpi: f64, step: f64) -> Result<DeltaGrid> {
    delta_grid_for(sigma_star_sq(path), path.n(), path.horizon(), kappa, varpi, step)
}

/// As [`delta_grid`] with `σ̂*²` supplied.
pub fn delta_grid_for(
    sigma_star_sq: f64,
    n: usize,
    horizon: f64,
    kappa: f64,
    varpi: f64,
    step: f64,
) -> Result<DeltaGrid> {
    check_grid_params(kappa, varpi)?;
    if !(step > 0.0) {
        return domain(format!("step must be positive, got {step}"));
    }
    if n < 2 {
        return domain("need n >= 2");
    }
    let mut grid = DeltaGrid { deltas: Vec::new(), kappa, varpi, sigma_star_sq, n, horizon };
    let mut i = 1usize;
    loop {
        let d = i as f64 * step;
        if !grid.admissible(d) {
            break;
        }
        grid.deltas.push(d);
        i += 1;
    }
    Ok(grid)
}

/// One grid point of a day analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayPoint {
    pub delta: f64,
    pub report: TestReport,
}

/// Runs the two-scale test at every `δ` of the grid.
pub fn analyze_day(path: &SamplePath, grid: &DeltaGrid, theta: f64) -> Result<Vec<DayPoint>> {
    if grid.is_empty() {
        return domain("delta grid is empty");
    }
    grid.deltas
        .iter()
        .map(|&delta| {
            let spec = ThresholdSpec::scaled(delta, grid.kappa, grid.varpi);
            Ok(DayPoint { delta, report: run_test(path, &spec, theta)? })
        })
        .collect()
}

/// Writes `delta,statistic,critical,reject` where `statistic` is the
/// studentized `Ṽ_n`; inconclusive points leave `statistic` empty and
/// report `reject` as `inconclusive`.
pub fn write_day_csv<W: Write>(points: &[DayPoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["delta", "statistic", "critical", "reject"])?;
    for pt in points {
        let stat = pt.report.studentized.map(|s| s.to_string()).unwrap_or_default();
        let reject = match pt.report.decision {
            Decision::Reject => "true",
            Decision::Retain => "false",
            Decision::Inconclusive => "inconclusive",
        };
        w.write_record([pt.delta.to_string(), stat, pt.report.critical_z.to_string(), reject.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One-object summary of a day analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaySummary {
    pub n: usize,
    pub sigma_star_sq: f64,
    pub kappa: f64,
    pub varpi: f64,
    pub theta: f64,
    pub grid_points: usize,
    pub rejections: usize,
    pub inconclusive: usize,
    pub min_statistic: Option<f64>,
    pub max_statistic: Option<f64>,
    /// Which variance estimate studentizes the statistic.
    pub studentization: String,
}

impl DaySummary {
    pub fn from_points(grid: &DeltaGrid, theta: f64, points: &[DayPoint]) -> Self {
        let stats: Vec<f64> = points.iter().filter_map(|p| p.report.studentized).collect();
        DaySummary {
            n: grid.n,
            sigma_star_sq: grid.sigma_star_sq,
            kappa: grid.kappa,
            varpi: grid.varpi,
            theta,
            grid_points: points.len(),
            rejections: points.iter().filter(|p| p.report.reject_h0).count(),
            inconclusive: points.iter().filter(|p| p.report.is_inconclusive()).count(),
            min_statistic: stats.iter().copied().reduce(f64::min),
            max_statistic: stats.iter().copied().reduce(f64::max),
            studentization: "sigma_tilde".into(),
        }
    }
}
