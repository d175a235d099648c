//! Truncated power variation baseline test.
//!
//! `B(p, u, Δ) = Σ |ΔY|^p 1{|ΔY| <= u}` and `S_n = B(p, u_n, Δ) / B(p, u_n, kΔ)`.
//! Under a diffusion `S_n -> k^{1-p/2} > 1`, under a pure jump process with
//! `p > β` it tends to 1, so small values reject. The studentizing variance is
//! `v_n = C B(2p, u_n, Δ) / B(p, u_n, Δ)^2` with a constant `C` that is either
//! supplied or calibrated once by Monte Carlo on Brownian paths.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::normal::upper_critical;
use crate::path::SamplePath;
use crate::pipeline::sigma_star_sq;
use crate::seed::Seed;
use crate::sim::{simulate, ModelSpec};
use crate::teststat::{check_theta, Decision, Family, TestReport};

/// Brownian replications used to calibrate `C`.
pub const CALIBRATION_REPS: usize = 10_000;
/// Sample size of each calibration path.
pub const CALIBRATION_N: usize = 23_400;
const CALIBRATION_SEED: Seed = Seed(0x0041_4A43_414C);

/// Unit in which the truncation level `u_n = α_u · scale · Δ^ρ` is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TruncationScale {
    /// `scale = σ̂*`, the jump-robust volatility of the path itself.
    #[default]
    SigmaStar,
    /// `scale = 1`.
    Unit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibration {
    /// Calibrate `C` by Monte Carlo on Brownian paths (cached per spec).
    #[default]
    MonteCarlo,
    Fixed { c: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AjSpec {
    /// Power `p ∈ (1, 2)`.
    pub p: f64,
    pub alpha_u: f64,
    /// Truncation exponent `ρ ∈ (0, 1/2)`.
    pub rho: f64,
    pub scale: TruncationScale,
    pub k: usize,
    pub calibration: Calibration,
}

impl Default for AjSpec {
    fn default() -> Self {
        AjSpec {
            p: 1.5,
            alpha_u: 5.0,
            rho: 0.48,
            scale: TruncationScale::SigmaStar,
            k: 2,
            calibration: Calibration::MonteCarlo,
        }
    }
}

impl AjSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p < 2.0) {
            return domain(format!("power p must lie in (1, 2), got {}", self.p));
        }
        if !(self.rho > 0.0 && self.rho < 0.5) {
            return domain(format!("truncation exponent rho must lie in (0, 1/2), got {}", self.rho));
        }
        if !(self.alpha_u > 0.0) || !self.alpha_u.is_finite() {
            return domain(format!("alpha_u must be positive, got {}", self.alpha_u));
        }
        if self.k < 2 {
            return domain(format!("k must be >= 2, got {}", self.k));
        }
        if let Calibration::Fixed { c } = self.calibration {
            if !(c > 0.0) || !c.is_finite() {
                return domain(format!("calibration constant must be positive, got {c}"));
            }
        }
        Ok(())
    }

    /// Whether `ρ <= (p-1)/p`, the condition for `S_n -> 1` under a pure jump
    /// alternative. Violations are legal but weaken power.
    pub fn consistent_under_alternative(&self) -> bool {
        self.rho <= (self.p - 1.0) / self.p
    }

    /// Null limit `k^{1-p/2}`.
    pub fn null_limit(&self) -> f64 {
        (self.k as f64).powf(1.0 - self.p / 2.0)
    }

    /// Truncation level for `path`.
    pub fn truncation(&self, path: &SamplePath) -> f64 {
        let unit = match self.scale {
            TruncationScale::SigmaStar => sigma_star_sq(path).sqrt(),
            TruncationScale::Unit => 1.0,
        };
        self.alpha_u * unit * path.delta().powf(self.rho)
    }

    /// Copy with a fixed calibration constant, calibrating if needed.
    pub fn resolved(&self) -> Result<AjSpec> {
        self.validate()?;
        let c = calibration_constant(self)?;
        Ok(AjSpec { calibration: Calibration::Fixed { c }, ..*self })
    }
}

fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 1.5 {
        a * a.sqrt()
    } else if p == 3.0 {
        a * a * a
    } else if p == 2.0 {
        a * a
    } else {
        a.powf(p)
    }
}

fn power_variation(values: &[f64], step: usize, p: f64, u: f64) -> f64 {
    values
        .iter()
        .step_by(step)
        .zip(values[step..].iter().step_by(step))
        .map(|(a, b)| b - a)
        .filter(|d| d.abs() <= u)
        .map(|d| abs_pow(d, p))
        .sum()
}

/// `Σ |ΔY|^p 1{|ΔY| <= u}` over one-step increments.
pub fn truncated_power_variation(path: &SamplePath, p: f64, u: f64) -> Result<f64> {
    if !(p > 0.0) {
        return domain(format!("power must be positive, got {p}"));
    }
    if !(u > 0.0) {
        return domain(format!("truncation must be positive, got {u}"));
    }
    Ok(power_variation(path.values(), 1, p, u))
}

/// Building blocks of `S_n` for one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AjStatistics {
    pub truncation: f64,
    pub b_fine: f64,
    pub b_coarse: f64,
    pub b_2p: f64,
}

impl AjStatistics {
    pub fn compute(path: &SamplePath, spec: &AjSpec) -> Result<Self> {
        spec.validate()?;
        let u = spec.truncation(path);
        let values = path.values();
        // Trailing partial coarse block dropped.
        let full = (path.n() / spec.k) * spec.k;
        Ok(AjStatistics {
            truncation: u,
            b_fine: power_variation(values, 1, spec.p, u),
            b_coarse: power_variation(&values[..=full], spec.k, spec.p, u),
            b_2p: power_variation(values, 1, 2.0 * spec.p, u),
        })
    }

    pub fn s_n(&self) -> Option<f64> {
        (self.b_coarse > 0.0).then(|| self.b_fine / self.b_coarse)
    }

    /// `(S_n - k^{1-p/2}) / sqrt(B(2p) / B(p)^2)`, before the constant `C`.
    fn unscaled_studentized(&self, spec: &AjSpec) -> Option<f64> {
        let s = self.s_n()?;
        if self.b_fine <= 0.0 || self.b_2p <= 0.0 {
            return None;
        }
        Some((s - spec.null_limit()) / (self.b_2p / (self.b_fine * self.b_fine)).sqrt())
    }
}

/// `S_n = B(p, u_n, Δ) / B(p, u_n, kΔ)`.
pub fn s_n(path: &SamplePath, spec: &AjSpec) -> Result<f64> {
    AjStatistics::compute(path, spec)?
        .s_n()
        .ok_or_else(|| Error::Degenerate("coarse truncated power variation is zero".into()))
}

type CalKey = (u64, u64, u64, u8, usize);

fn cache() -> &'static Mutex<HashMap<CalKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CalKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The constant `C` for `spec`: the fixed value, or the variance of the
/// unscaled studentized statistic over Brownian paths.
///
/// Monte Carlo values are cached per `(p, α_u, ρ, scale, k)`. The lock is not
/// held while simulating, so concurrent first calls may both compute; they
/// produce the same value.
pub fn calibration_constant(spec: &AjSpec) -> Result<f64> {
    spec.validate()?;
    if let Calibration::Fixed { c } = spec.calibration {
        return Ok(c);
    }
    let key = (spec.p.to_bits(), spec.alpha_u.to_bits(), spec.rho.to_bits(), spec.scale as u8, spec.k);
    if let Some(&c) = cache().lock().expect("calibration cache poisoned").get(&key) {
        return Ok(c);
    }
    let c = calibrate(spec, CALIBRATION_REPS, CALIBRATION_N, CALIBRATION_SEED)?;
    cache().lock().expect("calibration cache poisoned").insert(key, c);
    Ok(c)
}

/// Uncached Monte Carlo calibration of `C` with explicit effort.
pub fn calibrate(spec: &AjSpec, reps: usize, n: usize, seed: Seed) -> Result<f64> {
    spec.validate()?;
    if reps < 2 {
        return domain("calibration needs at least 2 replications");
    }
    let model = ModelSpec::brownian(1.0);
    let draws: Vec<Option<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| -> Result<Option<f64>> {
            let path = simulate(&model, n, 1.0, seed.child(r))?;
            Ok(AjStatistics::compute(&path, spec)?.unscaled_studentized(spec))
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = draws.into_iter().flatten().collect();
    if xs.len() < 2 {
        return Err(Error::Degenerate("calibration produced no usable replications".into()));
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    Ok(xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64)
}

/// One-sided level-`theta` baseline test: rejects a diffusion when
/// `(S_n - k^{1-p/2}) / sqrt(v_n) < -z_{1-θ}`.
pub fn aj_test(path: &SamplePath, spec: &AjSpec, theta: f64) -> Result<TestReport> {
    check_theta(theta)?;
    let c = calibration_constant(spec)?;
    let stats = AjStatistics::compute(path, spec)?;
    let z = upper_critical(theta);
    let null_limit = spec.null_limit();
    let mut report = TestReport {
        family: Family::Aj,
        n: path.n(),
        horizon: path.horizon(),
        theta,
        critical_z: z,
        k: spec.k,
        alpha: None,
        varpi: None,
        u_fine: None,
        u_coarse: None,
        u_offset: None,
        u_l: None,
        v_tilde: None,
        sigma_tilde_sq: None,
        p: Some(spec.p),
        truncation: Some(stats.truncation),
        b_fine: Some(stats.b_fine),
        b_coarse: Some(stats.b_coarse),
        b_2p: Some(stats.b_2p),
        s_n: stats.s_n(),
        v_n: None,
        calibration_c: Some(c),
        null_limit,
        studentized: None,
        critical_value: None,
        decision: Decision::Inconclusive,
        reject_h0: false,
    };
    let (Some(s), true) = (stats.s_n(), stats.b_fine > 0.0 && stats.b_2p > 0.0) else {
        return Ok(report);
    };
    let v = c * stats.b_2p / (stats.b_fine * stats.b_fine);
    let studentized = (s - null_limit) / v.sqrt();
    let reject = studentized < -z;
    report.v_n = Some(v);
    report.studentized = Some(studentized);
    report.critical_value = Some(null_limit - z * v.sqrt());
    report.decision = if reject { Decision::Reject } else { Decision::Retain };
    report.reject_h0 = reject;
    Ok(report)
}
