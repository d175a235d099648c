use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Equispaced observations `Y_{t_0}, ..., Y_{t_n}` on `[t0, t0 + horizon]`.
///
/// The grid spacing is always `horizon / n`; it is never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    t0: f64,
    horizon: f64,
    values: Vec<f64>,
}

impl SamplePath {
    pub fn new(t0: f64, horizon: f64, values: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return domain(format!("horizon must be positive and finite, got {horizon}"));
        }
        if values.len() < 3 {
            return domain(format!(
                "a path needs at least 2 increments, got {} observations",
                values.len()
            ));
        }
        Ok(SamplePath { t0, horizon, values })
    }

    /// Path on `[0, horizon]`.
    pub fn from_values(horizon: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(0.0, horizon, values)
    }

    /// Path built from an initial level and `n` increments.
    pub fn from_increments(horizon: f64, start: f64, increments: &[f64]) -> Result<Self> {
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut level = start;
        values.push(level);
        for dx in increments {
            level += dx;
            values.push(level);
        }
        Self::from_values(horizon, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of increments.
    pub fn n(&self) -> usize {
        self.values.len() - 1
    }

    /// Grid spacing `horizon / n`.
    pub fn delta(&self) -> f64 {
        self.horizon / self.n() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.horizon * i as f64 / self.n() as f64
    }

    /// One-step increments `Y_{t_i} - Y_{t_{i-1}}`.
    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Same grid, values mapped pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> SamplePath {
        SamplePath {
            t0: self.t0,
            horizon: self.horizon,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Writes `time,value` rows with a one-line header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["time", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([self.time(i).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `time,value` CSV. The horizon is the span of the time column
    /// unless `horizon` overrides it.
    pub fn read_csv<R: Read>(input: R, horizon: Option<f64>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "time" || &headers[1] != "value" {
            return Err(Error::Load {
                message: format!("expected header `time,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
                lines: vec![1],
            });
        }
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut bad = Vec::new();
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 2;
            let parsed = rec.ok().and_then(|r| {
                let t = r.get(0)?.parse::<f64>().ok()?;
                let v = r.get(1)?.parse::<f64>().ok()?;
                (t.is_finite() && v.is_finite()).then_some((t, v))
            });
            match parsed {
                Some((t, v)) => {
                    times.push(t);
                    values.push(v);
                }
                None => bad.push(line),
            }
        }
        if !bad.is_empty() {
            return Err(Error::Load { message: "unparsable rows".into(), lines: bad });
        }
        if values.len() < 3 {
            return Err(Error::Load { message: "path needs at least 3 rows".into(), lines: vec![] });
        }
        let t0 = times[0];
        let span = times[times.len() - 1] - t0;
        let n = (values.len() - 1) as f64;
        let step = span / n;
        let off_grid: Vec<usize> = times
            .iter()
            .enumerate()
            .filter(|(i, &t)| ((t - t0) - step * *i as f64).abs() > 1e-6 * step.abs().max(f64::MIN_POSITIVE))
            .map(|(i, _)| i + 2)
            .collect();
        if !off_grid.is_empty() {
            return Err(Error::Load { message: "time column is not equispaced".into(), lines: off_grid });
        }
        SamplePath::new(t0, horizon.unwrap_or(span), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_short_or_bad_horizon() {
        assert!(SamplePath::from_values(1.0, vec![0.0, 1.0]).is_err());
        assert!(SamplePath::from_values(0.0, vec![0.0; 5]).is_err());
        assert!(SamplePath::from_values(-1.0, vec![0.0; 5]).is_err());
        assert!(SamplePath::from_values(1.0, vec![0.0; 3]).is_ok());
    }

    #[test]
    fn delta_is_derived() {
        let p = SamplePath::from_values(2.0, vec![0.0; 5]).unwrap();
        assert_eq!(p.n(), 4);
        assert_eq!(p.delta(), 0.5);
        assert_eq!(p.time(4), 2.0);
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let vals: Vec<f64> = (0..101).map(|i| (i as f64 * 0.37).sin() * 1e-3 + 1.0 / 3.0).collect();
        let p = SamplePath::from_values(1.0, vals).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,value\n"));
        assert_eq!(text.lines().count(), 102);
        let q = SamplePath::read_csv(buf.as_slice(), None).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn read_reports_bad_lines() {
        let src = "time,value\n0,1\n0.5,x\n1,2\n";
        match SamplePath::read_csv(src.as_bytes(), None) {
            Err(Error::Load { lines, .. }) => assert_eq!(lines, vec![3]),
            other => panic!("unexpected {other:?}"),
        }
        let uneven = "time,value\n0,1\n0.2,1\n1,2\n";
        assert!(SamplePath::read_csv(uneven.as_bytes(), None).is_err());
    }
}
