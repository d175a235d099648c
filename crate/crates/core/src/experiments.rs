//! Seeded parallel Monte Carlo: rejection-rate tables, one-parameter sweeps,
//! histograms and the small-increment count demo.
//!
//! Replication `r` of cell `(model m, size i)` is simulated from
//! `master.child(m).child(i).child(r)`, so results do not depend on the
//! number of workers or on scheduling order.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aj::{aj_test, AjSpec, AjStatistics};
use crate::error::{domain, Error, Result};
use crate::path::SamplePath;
use crate::preavg::{v_bar_test, PreAvgSpec};
use crate::seed::Seed;
use crate::sim::{simulate, Jump, ModelSpec};
use crate::teststat::{count_small, run_test, v_tilde, Decision, ThresholdMode, ThresholdSpec};

/// Test applied to every simulated path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Statistic {
    SmallCount(ThresholdSpec),
    Aj(AjSpec),
}

impl Statistic {
    pub fn validate(&self) -> Result<()> {
        match self {
            Statistic::SmallCount(s) => s.validate(),
            Statistic::Aj(s) => s.validate(),
        }
    }

    /// Replaces a Monte Carlo calibration by its (cached) value.
    pub fn resolved(&self) -> Result<Statistic> {
        Ok(match self {
            Statistic::SmallCount(s) => Statistic::SmallCount(*s),
            Statistic::Aj(s) => Statistic::Aj(s.resolved()?),
        })
    }

    pub fn decide(&self, path: &SamplePath, theta: f64) -> Result<Decision> {
        Ok(match self {
            Statistic::SmallCount(s) => run_test(path, s, theta)?.decision,
            Statistic::Aj(s) => aj_test(path, s, theta)?.decision,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledModel {
    pub label: String,
    pub model: ModelSpec,
}

impl LabeledModel {
    pub fn new(label: impl Into<String>, model: ModelSpec) -> Self {
        LabeledModel { label: label.into(), model }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub models: Vec<LabeledModel>,
    pub sizes: Vec<usize>,
    pub horizon: f64,
    pub statistic: Statistic,
    pub theta: f64,
    pub replications: usize,
    pub master_seed: Seed,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.sizes.is_empty() {
            return domain("plan needs at least one model and one sample size");
        }
        if self.replications == 0 {
            return domain("replications must be >= 1");
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return domain(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return domain(format!("theta must lie in (0, 1), got {}", self.theta));
        }
        if let Some(&n) = self.sizes.iter().find(|&&n| n < 4) {
            return domain(format!("sample size {n} is too small"));
        }
        if self.workers == Some(0) {
            return domain("workers must be >= 1");
        }
        for m in &self.models {
            m.model.validate()?;
        }
        self.statistic.validate()
    }
}

/// One table cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub cell_key: String,
    /// Rejections over all `replications`, inconclusive ones included in the
    /// denominator.
    pub rejection_rate: f64,
    pub replications: usize,
    pub mc_se: f64,
    pub inconclusive: usize,
}

impl McSummary {
    pub fn from_counts(cell_key: String, rejections: usize, inconclusive: usize, replications: usize) -> Self {
        let p = rejections as f64 / replications as f64;
        McSummary {
            cell_key,
            rejection_rate: p,
            replications,
            mc_se: (p * (1.0 - p) / replications as f64).sqrt(),
            inconclusive,
        }
    }
}

/// Writes `cell_key,rejection_rate,R,mc_se,inconclusive`.
pub fn write_summaries<W: Write>(rows: &[McSummary], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["cell_key", "rejection_rate", "R", "mc_se", "inconclusive"])?;
    for r in rows {
        w.write_record([
            r.cell_key.clone(),
            r.rejection_rate.to_string(),
            r.replications.to_string(),
            r.mc_se.to_string(),
            r.inconclusive.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn cell_key(label: &str, n: usize, statistic: &Statistic) -> String {
    let tail = match statistic {
        Statistic::SmallCount(s) => match s.mode {
            ThresholdMode::Scaled { delta, kappa } => format!("delta={delta};kappa={kappa};varpi={}", s.varpi),
            ThresholdMode::Direct { alpha } => format!("alpha={alpha};varpi={}", s.varpi),
        },
        Statistic::Aj(s) => format!("aj;p={};rho={}", s.p, s.rho),
    };
    format!("{label};n={n};{tail}")
}

fn run_cell(model: &ModelSpec, n: usize, plan: &ExperimentPlan, statistic: &Statistic, seed: Seed) -> Result<(usize, usize)> {
    let outcomes: Vec<Decision> = (0..plan.replications as u64)
        .into_par_iter()
        .map(|r| {
            let path = simulate(model, n, plan.horizon, seed.child(r))?;
            statistic.decide(&path, plan.theta)
        })
        .collect::<Result<_>>()?;
    let rejections = outcomes.iter().filter(|d| **d == Decision::Reject).count();
    let inconclusive = outcomes.iter().filter(|d| **d == Decision::Inconclusive).count();
    Ok((rejections, inconclusive))
}

/// Rejection frequency for every `(model, n)` cell, models outermost.
pub fn mc_rejection_rate(plan: &ExperimentPlan) -> Result<Vec<McSummary>> {
    plan.validate()?;
    let statistic = plan.statistic.resolved()?;
    in_pool(plan.workers, || {
        let mut rows = Vec::with_capacity(plan.models.len() * plan.sizes.len());
        for (mi, lm) in plan.models.iter().enumerate() {
            for (ni, &n) in plan.sizes.iter().enumerate() {
                let seed = plan.master_seed.child(mi as u64).child(ni as u64);
                let (rej, inc) = run_cell(&lm.model, n, plan, &statistic, seed)?;
                rows.push(McSummary::from_counts(cell_key(&lm.label, n, &statistic), rej, inc, plan.replications));
            }
        }
        Ok(rows)
    })?
}

/// Scalar varied by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Scale `θ′` of the stable component of every model.
    JumpScale,
    /// Threshold multiplier `δ` (scaled small-count thresholds only).
    Delta,
    /// Observation noise standard deviation of every model.
    NoiseSd,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::JumpScale => "theta_prime",
            SweepParam::Delta => "delta",
            SweepParam::NoiseSd => "noise_sd",
        }
    }

    fn apply(&self, plan: &ExperimentPlan, value: f64) -> Result<ExperimentPlan> {
        let mut p = plan.clone();
        match self {
            SweepParam::JumpScale => {
                for lm in &mut p.models {
                    match &mut lm.model.jump {
                        Jump::Stable { scale, .. } => *scale = value,
                        Jump::None => return domain(format!("model `{}` has no stable component", lm.label)),
                    }
                }
            }
            SweepParam::Delta => match &mut p.statistic {
                Statistic::SmallCount(ThresholdSpec { mode: ThresholdMode::Scaled { delta, .. }, .. }) => *delta = value,
                _ => return domain("delta sweep needs a scaled small-count threshold"),
            },
            SweepParam::NoiseSd => {
                for lm in &mut p.models {
                    lm.model.noise_sd = value;
                }
            }
        }
        Ok(p)
    }
}

/// [`mc_rejection_rate`] at each value, all with the plan's master seed.
/// Cell keys are prefixed with `name=value;`.
pub fn sweep(plan: &ExperimentPlan, param: SweepParam, values: &[f64]) -> Result<Vec<McSummary>> {
    if values.is_empty() {
        return domain("sweep needs at least one value");
    }
    let mut out = Vec::new();
    for &v in values {
        let rows = mc_rejection_rate(&param.apply(plan, v)?)?;
        if values.len() == 1 {
            out.extend(rows);
        } else {
            out.extend(rows.into_iter().map(|mut r| {
                r.cell_key = format!("{}={v};{}", param.name(), r.cell_key);
                r
            }));
        }
    }
    Ok(out)
}

/// Quantity collected by [`histogram_export`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HistogramSelector {
    /// Every one-step increment of every path.
    Increments,
    VTilde(ThresholdSpec),
    /// `(S_n - k^{1-p/2}) / sqrt(v_n)`.
    AjStudentized(AjSpec),
    VBar(PreAvgSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Replications whose statistic was undefined.
    pub dropped: usize,
    pub mean: Option<f64>,
}

impl Histogram {
    /// Equal-width bins over the sample range. A sample with a single distinct
    /// value `v` uses the range `[v - 1/2, v + 1/2]`.
    pub fn from_samples(samples: &[f64], bins: usize, dropped: usize) -> Result<Self> {
        if bins < 10 {
            return domain(format!("need at least 10 bins, got {bins}"));
        }
        if samples.is_empty() {
            return Err(Error::Degenerate("no samples to bin".into()));
        }
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * width).collect();
        let mut counts = vec![0; bins];
        for &x in samples {
            let i = (((x - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        Ok(Histogram { edges, counts, dropped, mean: Some(mean) })
    }

    /// Writes `lower,upper,count`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["lower", "upper", "count"])?;
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([self.edges[i].to_string(), self.edges[i + 1].to_string(), c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Collects `selector` over `reps` simulated paths and bins the values.
pub fn histogram_export(
    model: &ModelSpec,
    n: usize,
    horizon: f64,
    selector: HistogramSelector,
    bins: usize,
    reps: usize,
    seed: Seed,
) -> Result<Histogram> {
    if reps == 0 {
        return domain("reps must be >= 1");
    }
    let selector = match selector {
        HistogramSelector::AjStudentized(s) => HistogramSelector::AjStudentized(s.resolved()?),
        other => other,
    };
    let per_rep: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let path = simulate(model, n, horizon, seed.child(r))?;
            collect_statistic(&path, &selector)
        })
        .collect::<Result<_>>()?;
    let dropped = per_rep.iter().filter(|v| v.is_empty()).count();
    let samples: Vec<f64> = per_rep.into_iter().flatten().collect();
    Histogram::from_samples(&samples, bins, dropped)
}

/// Values of `selector` on one path; empty when the statistic is undefined.
pub fn collect_statistic(path: &SamplePath, selector: &HistogramSelector) -> Result<Vec<f64>> {
    Ok(match selector {
        HistogramSelector::Increments => path.increments(),
        HistogramSelector::VTilde(s) => match v_tilde(path, s) {
            Ok(v) => vec![v.v_tilde],
            Err(Error::Degenerate(_)) => vec![],
            Err(e) => return Err(e),
        },
        HistogramSelector::AjStudentized(s) => aj_test(path, s, 0.05)?.studentized.into_iter().collect(),
        HistogramSelector::VBar(s) => v_bar_test(path, s)?.v_bar.into_iter().collect(),
    })
}

/// Mean small-increment counts for one stability index.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub beta: f64,
    /// `W + S`.
    pub mixture: f64,
    pub brownian: f64,
    pub stable: f64,
}

/// Diffusion volatility of the count demo.
pub const COUNT_DEMO_SIGMA: f64 = 0.5;

/// Mean `U(Δ)` with `α = 2`, `ϖ = 1`, `n = 23,400`, `T = 1` for `0.5 W`, the
/// unit stable process `S` and their sum, averaged over `reps` paths, for
/// `β ∈ {1.5, 1.0, 0.5}`. The sum reuses the draws of its two parts.
pub fn table1_demo(seed: Seed, reps: usize) -> Result<Vec<CountRow>> {
    const N: usize = 23_400;
    if reps == 0 {
        return domain("reps must be >= 1");
    }
    let thr = ThresholdSpec::direct(2.0, 1.0).threshold(N, 1.0 / N as f64)?;
    [1.5, 1.0, 0.5]
        .iter()
        .enumerate()
        .map(|(bi, &beta)| {
            let base = seed.child(bi as u64);
            let sums = (0..reps as u64)
                .into_par_iter()
                .map(|r| -> Result<[usize; 3]> {
                    let s = base.child(r);
                    let w = simulate(&ModelSpec::brownian(COUNT_DEMO_SIGMA), N, 1.0, s)?;
                    let j = simulate(&ModelSpec::pure_stable(beta, 1.0), N, 1.0, s)?;
                    let y: Vec<f64> = w.values().iter().zip(j.values()).map(|(a, b)| a + b).collect();
                    let y = SamplePath::from_values(1.0, y)?;
                    Ok([count_small(&y, 1, 0, thr)?, count_small(&w, 1, 0, thr)?, count_small(&j, 1, 0, thr)?])
                })
                .try_reduce(|| [0; 3], |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2]]))?;
            let r = reps as f64;
            Ok(CountRow { beta, mixture: sums[0] as f64 / r, brownian: sums[1] as f64 / r, stable: sums[2] as f64 / r })
        })
        .collect()
}

/// Writes `beta,mixture,brownian,stable`.
pub fn write_count_table<W: Write>(rows: &[CountRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["beta", "mixture", "brownian", "stable"])?;
    for r in rows {
        w.write_record([r.beta.to_string(), r.mixture.to_string(), r.brownian.to_string(), r.stable.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and Monte Carlo standard error of a statistic over replications.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub mc_se: f64,
    pub used: usize,
    pub dropped: usize,
}

/// Mean of `selector` (one value per path) over `reps` simulated paths.
pub fn mc_mean(
    model: &ModelSpec,
    n: usize,
    horizon: f64,
    selector: HistogramSelector,
    reps: usize,
    seed: Seed,
) -> Result<MeanEstimate> {
    if matches!(selector, HistogramSelector::Increments) {
        return domain("mean estimate needs a per-path statistic");
    }
    let selector = match selector {
        HistogramSelector::AjStudentized(s) => HistogramSelector::AjStudentized(s.resolved()?),
        other => other,
    };
    let xs: Vec<Option<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| Ok(collect_statistic(&simulate(model, n, horizon, seed.child(r))?, &selector)?.first().copied()))
        .collect::<Result<_>>()?;
    let used: Vec<f64> = xs.iter().flatten().copied().collect();
    if used.len() < 2 {
        return Err(Error::Degenerate("fewer than 2 usable replications".into()));
    }
    let m = used.len() as f64;
    let mean = used.iter().sum::<f64>() / m;
    let var = used.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
    Ok(MeanEstimate { mean, mc_se: (var / m).sqrt(), used: used.len(), dropped: reps - used.len() })
}

/// Components of the baseline statistic over replications, for diagnostics.
pub fn aj_statistics(model: &ModelSpec, n: usize, spec: &AjSpec, reps: usize, seed: Seed) -> Result<Vec<AjStatistics>> {
    (0..reps as u64)
        .into_par_iter()
        .map(|r| AjStatistics::compute(&simulate(model, n, 1.0, seed.child(r))?, spec))
        .collect()
}
