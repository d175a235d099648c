//! Two-scale small-increment count test for the presence of a diffusion.
//!
//! `U(Δ)` counts increments with `|ΔY| <= α Δ^ϖ`. Under a diffusion the count
//! grows like `Δ^{ϖ-3/2}`, under a pure jump process like `Δ^{ϖ-1-1/β}`, so the
//! ratio of counts at spacings `Δ` and `2Δ` converges to `2^{3/2-ϖ}` in the
//! first case and to something strictly larger in the second. The test
//! rejects "a diffusion is present" when the ratio is too large.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::normal::upper_critical;
use crate::path::SamplePath;

/// How the threshold multiplier `α` is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Fixed `α`.
    Direct { alpha: f64 },
    /// `α = δ (ln n)^κ`.
    Scaled { delta: f64, kappa: f64 },
}

/// Small-increment threshold `α Δ^ϖ` and the coarse time-scale multiple `k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub mode: ThresholdMode,
    pub varpi: f64,
    pub k: usize,
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec { mode: ThresholdMode::Scaled { delta: 2.0, kappa: 2.0 }, varpi: 1.5, k: 2 }
    }
}

impl ThresholdSpec {
    pub fn direct(alpha: f64, varpi: f64) -> Self {
        ThresholdSpec { mode: ThresholdMode::Direct { alpha }, varpi, k: 2 }
    }

    pub fn scaled(delta: f64, kappa: f64, varpi: f64) -> Self {
        ThresholdSpec { mode: ThresholdMode::Scaled { delta, kappa }, varpi, k: 2 }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            ThresholdMode::Direct { alpha } if !(alpha > 0.0 && alpha.is_finite()) => {
                return domain(format!("alpha must be positive, got {alpha}"));
            }
            ThresholdMode::Scaled { delta, kappa } if !(delta > 0.0 && kappa >= 0.0 && delta.is_finite() && kappa.is_finite()) => {
                return domain(format!("need delta > 0 and kappa >= 0, got delta={delta}, kappa={kappa}"));
            }
            _ => {}
        }
        if !(self.varpi > 0.5) || !self.varpi.is_finite() {
            return domain(format!("varpi must exceed 1/2, got {}", self.varpi));
        }
        if self.k < 2 {
            return domain(format!("time-scale multiple k must be >= 2, got {}", self.k));
        }
        Ok(())
    }

    /// Threshold at spacing `spacing` for a sample of `n` increments.
    pub fn threshold(&self, n: usize, spacing: f64) -> Result<f64> {
        Ok(compute_alpha(self, n)? * spacing.powf(self.varpi))
    }
}

/// `α` for a sample of `n` increments.
pub fn compute_alpha(spec: &ThresholdSpec, n: usize) -> Result<f64> {
    spec.validate()?;
    if n < 2 {
        return domain(format!("need n >= 2, got {n}"));
    }
    Ok(match spec.mode {
        ThresholdMode::Direct { alpha } => alpha,
        ThresholdMode::Scaled { delta, kappa } => delta * (n as f64).ln().powf(kappa),
    })
}

/// Counts `|values[j + step] - values[j]| <= threshold` for
/// `j = offset, offset + step, ...`, at most `limit` blocks.
pub(crate) fn count_blocks(values: &[f64], step: usize, offset: usize, threshold: f64, limit: usize) -> usize {
    if values.len() <= offset + step {
        return 0;
    }
    values[offset..]
        .iter()
        .step_by(step)
        .zip(values[offset + step..].iter().step_by(step))
        .take(limit)
        .filter(|(a, b)| (*b - *a).abs() <= threshold)
        .count()
}

/// Counts sums of `step` consecutive increments with magnitude `<= threshold`,
/// using complete blocks from the left.
pub(crate) fn count_small_increments(increments: &[f64], step: usize, threshold: f64) -> usize {
    increments
        .chunks_exact(step)
        .filter(|c| c.iter().sum::<f64>().abs() <= threshold)
        .count()
}

/// Number of `step`-increments starting at `offset` whose magnitude is at most
/// `threshold` (inclusive). `step = 1, offset = 0` is `U(Δ)`; `step = 2,
/// offset = 1` is the shifted coarse count.
pub fn count_small(path: &SamplePath, step: usize, offset: usize, threshold: f64) -> Result<usize> {
    if step == 0 {
        return domain("step must be >= 1");
    }
    if offset >= step {
        return domain(format!("offset {offset} must be smaller than step {step}"));
    }
    if !(threshold > 0.0) {
        return domain(format!("threshold must be positive, got {threshold}"));
    }
    Ok(count_blocks(path.values(), step, offset, threshold, usize::MAX))
}

/// `V_n = U(Δ) / U(kΔ)`; the coarse count uses threshold `α (kΔ)^ϖ`.
pub fn v_n(path: &SamplePath, spec: &ThresholdSpec) -> Result<f64> {
    let n = path.n();
    let dt = path.delta();
    let fine = count_small(path, 1, 0, spec.threshold(n, dt)?)?;
    let coarse = count_small(path, spec.k, 0, spec.threshold(n, spec.k as f64 * dt)?)?;
    if coarse == 0 {
        return Err(Error::Degenerate(format!("zero coarse count (fine count {fine})")));
    }
    Ok(fine as f64 / coarse as f64)
}

/// Counts entering `Ṽ_n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoScaleCounts {
    /// `U(Δ)`.
    pub u_fine: usize,
    /// `U(2Δ)` from `t_0`.
    pub u_coarse: usize,
    /// `U'(2Δ)` from `t_1`, over `⌊n/2⌋ - 1` blocks.
    pub u_offset: usize,
    /// `(U(2Δ) + U'(2Δ)) / 2`.
    pub u_l: f64,
    /// `α` used for both thresholds.
    pub alpha: f64,
}

impl TwoScaleCounts {
    pub fn compute(path: &SamplePath, spec: &ThresholdSpec) -> Result<Self> {
        spec.validate()?;
        if spec.k != 2 {
            return domain(format!("the averaged two-scale statistic requires k = 2, got {}", spec.k));
        }
        let n = path.n();
        let dt = path.delta();
        let alpha = compute_alpha(spec, n)?;
        let fine_thr = alpha * dt.powf(spec.varpi);
        let coarse_thr = alpha * (2.0 * dt).powf(spec.varpi);
        let values = path.values();
        let u_fine = count_blocks(values, 1, 0, fine_thr, usize::MAX);
        let u_coarse = count_blocks(values, 2, 0, coarse_thr, n / 2);
        let u_offset = count_blocks(values, 2, 1, coarse_thr, (n / 2).saturating_sub(1));
        Ok(TwoScaleCounts { u_fine, u_coarse, u_offset, u_l: (u_coarse + u_offset) as f64 / 2.0, alpha })
    }
}

/// `Ṽ_n = U(Δ) / U_L(2Δ)` together with its counts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VTilde {
    pub v_tilde: f64,
    pub counts: TwoScaleCounts,
}

pub fn v_tilde(path: &SamplePath, spec: &ThresholdSpec) -> Result<VTilde> {
    let counts = TwoScaleCounts::compute(path, spec)?;
    if counts.u_l <= 0.0 {
        return Err(Error::Degenerate(format!("zero coarse counts (fine count {})", counts.u_fine)));
    }
    Ok(VTilde { v_tilde: counts.u_fine as f64 / counts.u_l, counts })
}

/// Variance estimate for the studentized `Ṽ_n`:
/// `(U + 2^{3/2-ϖ} U_L / 2) / (Δ^{3/2-ϖ} U_L^2)`.
pub fn sigma_tilde_sq(u_fine: usize, u_l: f64, n: usize, horizon: f64, varpi: f64) -> Result<f64> {
    if !(u_l > 0.0) {
        return Err(Error::Degenerate(format!("U_L must be positive, got {u_l}")));
    }
    let dt = horizon / n as f64;
    let e = 1.5 - varpi;
    Ok((u_fine as f64 + 2f64.powf(e) * u_l / 2.0) / (dt.powf(e) * u_l * u_l))
}

/// Variance estimate for the studentized `V_n` with general `k`:
/// `(1 + k^{3/2-ϖ}) k^{3-2ϖ} / (Δ^{3/2-ϖ} U(Δ))`.
pub fn sigma_hat_sq(u_fine: usize, n: usize, horizon: f64, varpi: f64, k: usize) -> Result<f64> {
    if u_fine == 0 {
        return Err(Error::Degenerate("zero fine count".into()));
    }
    let dt = horizon / n as f64;
    let e = 1.5 - varpi;
    let k = k as f64;
    Ok((1.0 + k.powf(e)) * k.powf(3.0 - 2.0 * varpi) / (dt.powf(e) * u_fine as f64))
}

/// Which statistic produced a [`TestReport`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Two-scale small-increment counts.
    SmallCount,
    /// Truncated power variation baseline.
    Aj,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Reject,
    Retain,
    /// A zero denominator count or sum; neither decision is made.
    Inconclusive,
}

/// Outcome of a test on one path, flat so that it serializes to one CSV row.
///
/// Fields that do not apply to the statistic family are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub family: Family,
    pub n: usize,
    pub horizon: f64,
    pub theta: f64,
    /// Upper-tail normal quantile `z_{1-θ}`.
    pub critical_z: f64,
    pub k: usize,
    pub alpha: Option<f64>,
    pub varpi: Option<f64>,
    pub u_fine: Option<usize>,
    pub u_coarse: Option<usize>,
    pub u_offset: Option<usize>,
    pub u_l: Option<f64>,
    pub v_tilde: Option<f64>,
    pub sigma_tilde_sq: Option<f64>,
    pub p: Option<f64>,
    pub truncation: Option<f64>,
    pub b_fine: Option<f64>,
    pub b_coarse: Option<f64>,
    pub b_2p: Option<f64>,
    pub s_n: Option<f64>,
    pub v_n: Option<f64>,
    pub calibration_c: Option<f64>,
    /// Probability limit of the statistic under the null.
    pub null_limit: f64,
    pub studentized: Option<f64>,
    /// Rejection boundary on the scale of the raw statistic.
    pub critical_value: Option<f64>,
    pub decision: Decision,
    pub reject_h0: bool,
}

impl TestReport {
    pub fn is_inconclusive(&self) -> bool {
        self.decision == Decision::Inconclusive
    }

    /// The raw statistic (`Ṽ_n` or `S_n`).
    pub fn statistic(&self) -> Option<f64> {
        self.v_tilde.or(self.s_n)
    }

    /// Header plus one row.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.serialize(self)?;
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta < 1.0) {
        return domain(format!("level theta must lie in (0, 1), got {theta}"));
    }
    Ok(())
}

/// Level-`theta` test of "a diffusion is present" against a pure jump model.
///
/// Rejects when `Δ^{(ϖ-3/2)/2} (Ṽ_n - 2^{3/2-ϖ}) / σ̃ > z_{1-θ}`,
/// equivalently `Ṽ_n > 2^{3/2-ϖ} + z_{1-θ} Δ^{3/4-ϖ/2} σ̃`. A zero
/// `U_L(2Δ)` gives an inconclusive report carrying the raw counts.
pub fn run_test(path: &SamplePath, spec: &ThresholdSpec, theta: f64) -> Result<TestReport> {
    check_theta(theta)?;
    let counts = TwoScaleCounts::compute(path, spec)?;
    let n = path.n();
    let horizon = path.horizon();
    let dt = path.delta();
    let varpi = spec.varpi;
    let z = upper_critical(theta);
    let null_limit = 2f64.powf(1.5 - varpi);

    let mut report = TestReport {
        family: Family::SmallCount,
        n,
        horizon,
        theta,
        critical_z: z,
        k: 2,
        alpha: Some(counts.alpha),
        varpi: Some(varpi),
        u_fine: Some(counts.u_fine),
        u_coarse: Some(counts.u_coarse),
        u_offset: Some(counts.u_offset),
        u_l: Some(counts.u_l),
        v_tilde: None,
        sigma_tilde_sq: None,
        p: None,
        truncation: None,
        b_fine: None,
        b_coarse: None,
        b_2p: None,
        s_n: None,
        v_n: None,
        calibration_c: None,
        null_limit,
        studentized: None,
        critical_value: None,
        decision: Decision::Inconclusive,
        reject_h0: false,
    };
    if counts.u_l <= 0.0 {
        return Ok(report);
    }
    let v = counts.u_fine as f64 / counts.u_l;
    let s2 = sigma_tilde_sq(counts.u_fine, counts.u_l, n, horizon, varpi)?;
    let sd = s2.sqrt();
    let studentized = dt.powf((varpi - 1.5) / 2.0) * (v - null_limit) / sd;
    let critical_value = null_limit + z * dt.powf(0.75 - varpi / 2.0) * sd;
    let reject = studentized > z;
    report.v_tilde = Some(v);
    report.sigma_tilde_sq = Some(s2);
    report.studentized = Some(studentized);
    report.critical_value = Some(critical_value);
    report.decision = if reject { Decision::Reject } else { Decision::Retain };
    report.reject_h0 = reject;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize) -> SamplePath {
        SamplePath::from_values(1.0, vec![0.0; n + 1]).unwrap()
    }

    #[test]
    fn alpha_modes() {
        assert_eq!(compute_alpha(&ThresholdSpec::direct(2.0, 1.5), 10).unwrap(), 2.0);
        assert_eq!(compute_alpha(&ThresholdSpec::direct(2.0, 1.5), 1_000_000).unwrap(), 2.0);
        let a = compute_alpha(&ThresholdSpec::scaled(2.0, 2.0, 1.5), 2340).unwrap();
        // 2 * ln(2340)^2 evaluated by hand: ln 2340 = 7.757906..., squared 60.185..
        assert!((a - 120.37).abs() < 0.01, "alpha={a}");
        assert_eq!(compute_alpha(&ThresholdSpec::scaled(1.0, 0.0, 1.5), 100).unwrap(), 1.0);
        assert!(compute_alpha(&ThresholdSpec::scaled(1.0, 2.0, 1.5), 1).is_err());
        assert!(compute_alpha(&ThresholdSpec::direct(1.0, 0.5), 100).is_err());
        assert!(compute_alpha(&ThresholdSpec::direct(-1.0, 1.5), 100).is_err());
        assert!(compute_alpha(&ThresholdSpec::direct(1.0, 1.5).with_k(1), 100).is_err());
    }

    #[test]
    fn count_small_enumeration() {
        let p = SamplePath::from_increments(1.0, 0.0, &[0.10, -0.05, 0.20]).unwrap();
        // 0.1 is compared through floating-point differences; pick a
        // threshold that is unambiguous at the tie.
        assert_eq!(count_small(&p, 1, 0, 0.10 + 1e-12).unwrap(), 2);
        assert_eq!(count_small(&p, 1, 0, 0.04).unwrap(), 0);
        assert_eq!(count_small(&p, 1, 0, 1.0).unwrap(), 3);
        // two-step sums: 0.05 from t0, (0.15) from t1
        assert_eq!(count_small(&p, 2, 0, 0.06).unwrap(), 1);
        assert_eq!(count_small(&p, 2, 1, 0.16).unwrap(), 1);
    }

    #[test]
    fn ties_are_counted() {
        let p = SamplePath::from_values(1.0, vec![0.0, 0.5, 0.0, 0.75]).unwrap();
        assert_eq!(count_small(&p, 1, 0, 0.5).unwrap(), 2);
        assert_eq!(count_small(&p, 1, 0, 0.75).unwrap(), 3);
    }

    #[test]
    fn count_small_rejects_bad_args() {
        let p = flat(10);
        assert!(count_small(&p, 2, 2, 1.0).is_err());
        assert!(count_small(&p, 0, 0, 1.0).is_err());
        assert!(count_small(&p, 1, 0, 0.0).is_err());
    }

    #[test]
    fn constant_path_counts_every_block() {
        for n in [10usize, 11, 101] {
            let p = flat(n);
            for (step, offset) in [(1, 0), (2, 0), (2, 1), (3, 2), (5, 0)] {
                assert_eq!(count_small(&p, step, offset, 1e-9).unwrap(), (n - offset) / step);
            }
        }
    }

    #[test]
    fn v_n_constant_path() {
        let p = flat(100);
        assert_eq!(v_n(&p, &ThresholdSpec::default()).unwrap(), 2.0);
        assert_eq!(v_n(&p, &ThresholdSpec::default().with_k(4)).unwrap(), 4.0);
    }

    #[test]
    fn v_n_degenerate() {
        let incs: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let p = SamplePath::from_increments(1.0, 0.0, &incs).unwrap();
        assert!(matches!(v_n(&p, &ThresholdSpec::direct(1.0, 1.5)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn v_tilde_constant_path() {
        let r = v_tilde(&flat(100), &ThresholdSpec::default()).unwrap();
        assert_eq!(r.counts.u_fine, 100);
        assert_eq!(r.counts.u_coarse, 50);
        assert_eq!(r.counts.u_offset, 49);
        assert_eq!(r.counts.u_l, 49.5);
        assert!((r.v_tilde - 100.0 / 49.5).abs() < 1e-12);
        assert!((r.v_tilde - 2.0202).abs() < 1e-4);
    }

    #[test]
    fn offset_count_respects_block_bound_for_odd_n() {
        let r = v_tilde(&flat(101), &ThresholdSpec::default()).unwrap();
        assert_eq!(r.counts.u_coarse, 50);
        assert_eq!(r.counts.u_offset, 49);
    }

    #[test]
    fn v_tilde_requires_k2() {
        assert!(v_tilde(&flat(100), &ThresholdSpec::default().with_k(3)).is_err());
    }

    #[test]
    fn sigma_tilde_values() {
        let s = sigma_tilde_sq(100, 49.5, 100, 1.0, 1.5).unwrap();
        assert!((s - 124.75 / 2450.25).abs() < 1e-15);
        assert!((s - 0.050913).abs() < 1e-6);
        // zero fine count: 2^{3/2-ϖ} / (2 Δ^{3/2-ϖ} U_L)
        let n = 400;
        let dt = 1.0 / n as f64;
        let s0 = sigma_tilde_sq(0, 12.0, n, 1.0, 1.2).unwrap();
        let expect = 2f64.powf(0.3) / (2.0 * dt.powf(0.3) * 12.0);
        assert!((s0 - expect).abs() < 1e-12 * expect);
        assert!(sigma_tilde_sq(5, 0.0, 100, 1.0, 1.5).is_err());
    }

    #[test]
    fn sigma_hat_values() {
        // ϖ = 3/2, k = 2: (1 + 1) * 1 / U
        assert_eq!(sigma_hat_sq(40, 100, 1.0, 1.5, 2).unwrap(), 2.0 / 40.0);
        assert!(sigma_hat_sq(0, 100, 1.0, 1.5, 2).is_err());
    }

    #[test]
    fn constant_path_decision() {
        let r = run_test(&flat(100), &ThresholdSpec::default(), 0.05).unwrap();
        let s2 = (100.0 + 49.5 / 2.0) / (49.5 * 49.5);
        assert!((r.sigma_tilde_sq.unwrap() - s2).abs() < 1e-15);
        let crit = 1.0 + 1.6448536269514727 * s2.sqrt();
        assert!((r.critical_value.unwrap() - crit).abs() < 1e-12);
        assert!(r.v_tilde.unwrap() > crit);
        assert!(r.reject_h0);
        assert_eq!(r.decision, Decision::Reject);
    }

    #[test]
    fn inconclusive_on_zero_coarse() {
        let incs: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { 2.0 }).collect();
        let p = SamplePath::from_increments(1.0, 0.0, &incs).unwrap();
        let r = run_test(&p, &ThresholdSpec::direct(1.0, 1.5), 0.05).unwrap();
        assert!(r.is_inconclusive());
        assert!(!r.reject_h0);
        assert_eq!(r.u_l, Some(0.0));
        assert!(r.v_tilde.is_none());
    }

    #[test]
    fn report_csv_is_one_row() {
        let r = run_test(&flat(100), &ThresholdSpec::default(), 0.05).unwrap();
        let text = r.to_csv().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("family,n,horizon,theta,critical_z"));
        assert!(lines[1].starts_with("small_count,100,"));
        let back: TestReport = csv::Reader::from_reader(text.as_bytes()).deserialize().next().unwrap().unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn bad_theta() {
        assert!(run_test(&flat(10), &ThresholdSpec::default(), 0.0).is_err());
        assert!(run_test(&flat(10), &ThresholdSpec::default(), 1.0).is_err());
    }
}
