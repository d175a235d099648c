//! TOML plan files for Monte Carlo experiments.
//!
//! ```toml
//! sizes = [2340, 4680, 23400]
//! theta = 0.05
//! replications = 2000
//! seed = 1
//!
//! [statistic]
//! family = "small_count"   # or "aj"
//! delta = 2.0
//! kappa = 2.0
//! varpi = 1.5
//!
//! [[models]]
//! preset = "h0"            # h0, h1, heston, mixture, brownian, stable
//! betas = [1.5, 1.6]
//! theta_prime = 0.5
//!
//! [[models]]
//! label = "custom"
//! spec = { diffusion = { kind = "brownian", sigma = 1.0 }, noise_sd = 0.01 }
//! ```

use serde::Deserialize;

use crate::aj::{AjSpec, Calibration, TruncationScale};
use crate::error::{Error, Result};
use crate::experiments::{ExperimentPlan, LabeledModel, Statistic};
use crate::seed::Seed;
use crate::sim::ModelSpec;
use crate::teststat::ThresholdSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    sizes: Vec<usize>,
    #[serde(default = "one")]
    horizon: f64,
    #[serde(default = "five_percent")]
    theta: f64,
    #[serde(default = "default_reps")]
    replications: usize,
    #[serde(default)]
    seed: u64,
    workers: Option<usize>,
    #[serde(default)]
    statistic: StatisticFile,
    models: Vec<ModelEntry>,
}

fn one() -> f64 {
    1.0
}

fn five_percent() -> f64 {
    0.05
}

fn default_reps() -> usize {
    2000
}

#[derive(Debug, Default, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum FamilyName {
    #[default]
    SmallCount,
    Aj,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatisticFile {
    #[serde(default)]
    family: FamilyName,
    delta: Option<f64>,
    kappa: Option<f64>,
    alpha: Option<f64>,
    varpi: Option<f64>,
    k: Option<usize>,
    p: Option<f64>,
    alpha_u: Option<f64>,
    rho: Option<f64>,
    scale: Option<TruncationScale>,
    c: Option<f64>,
}

impl StatisticFile {
    fn build(&self) -> Result<Statistic> {
        match self.family {
            FamilyName::SmallCount => {
                if self.p.is_some() || self.alpha_u.is_some() || self.rho.is_some() || self.c.is_some() || self.scale.is_some() {
                    return Err(Error::Config("small_count statistic does not take p, alpha_u, rho, scale or c".into()));
                }
                let d = ThresholdSpec::default();
                let varpi = self.varpi.unwrap_or(d.varpi);
                let spec = match (self.alpha, self.delta, self.kappa) {
                    (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                        return Err(Error::Config("give either alpha or delta/kappa, not both".into()));
                    }
                    (Some(a), None, None) => ThresholdSpec::direct(a, varpi),
                    (None, delta, kappa) => ThresholdSpec::scaled(delta.unwrap_or(2.0), kappa.unwrap_or(2.0), varpi),
                };
                let spec = spec.with_k(self.k.unwrap_or(2));
                spec.validate()?;
                Ok(Statistic::SmallCount(spec))
            }
            FamilyName::Aj => {
                if self.delta.is_some() || self.kappa.is_some() || self.alpha.is_some() || self.varpi.is_some() {
                    return Err(Error::Config("aj statistic does not take delta, kappa, alpha or varpi".into()));
                }
                let d = AjSpec::default();
                let spec = AjSpec {
                    p: self.p.unwrap_or(d.p),
                    alpha_u: self.alpha_u.unwrap_or(d.alpha_u),
                    rho: self.rho.unwrap_or(d.rho),
                    scale: self.scale.unwrap_or(d.scale),
                    k: self.k.unwrap_or(d.k),
                    calibration: self.c.map_or(Calibration::MonteCarlo, |c| Calibration::Fixed { c }),
                };
                spec.validate()?;
                Ok(Statistic::Aj(spec))
            }
        }
    }
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum Preset {
    H0,
    H1,
    Heston,
    Mixture,
    Brownian,
    Stable,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelEntry {
    label: Option<String>,
    preset: Option<Preset>,
    #[serde(default)]
    betas: Vec<f64>,
    theta_prime: Option<f64>,
    gamma: Option<f64>,
    sigma: Option<f64>,
    scale: Option<f64>,
    noise_sd: Option<f64>,
    spec: Option<ModelSpec>,
}

impl ModelEntry {
    fn expand(&self, index: usize) -> Result<Vec<LabeledModel>> {
        let noise = self.noise_sd.unwrap_or(0.0);
        match (self.preset, self.spec) {
            (Some(_), Some(_)) => Err(Error::Config(format!("model {index}: give either preset or spec"))),
            (None, None) => Err(Error::Config(format!("model {index}: needs a preset or a spec"))),
            (None, Some(spec)) => {
                let label = self.label.clone().unwrap_or_else(|| format!("model{index}"));
                let spec = if self.noise_sd.is_some() { spec.with_noise(noise) } else { spec };
                Ok(vec![LabeledModel::new(label, spec)])
            }
            (Some(preset), None) => {
                if preset == Preset::Brownian {
                    let m = ModelSpec::brownian(self.sigma.unwrap_or(1.0)).with_noise(noise);
                    return Ok(vec![LabeledModel::new(self.label.clone().unwrap_or_else(|| "brownian".into()), m)]);
                }
                if self.betas.is_empty() {
                    return Err(Error::Config(format!("model {index}: preset needs a nonempty `betas` list")));
                }
                let tp = self.theta_prime.unwrap_or(0.5);
                let name = match preset {
                    Preset::H0 => "h0",
                    Preset::H1 => "h1",
                    Preset::Heston => "heston",
                    Preset::Mixture => "mixture",
                    Preset::Stable => "stable",
                    Preset::Brownian => unreachable!(),
                };
                Ok(self
                    .betas
                    .iter()
                    .map(|&beta| {
                        let model = match preset {
                            Preset::H0 => ModelSpec::null_ou(beta, tp),
                            Preset::H1 => ModelSpec::alt_pure_jump(beta, self.gamma.unwrap_or(1.0)),
                            Preset::Heston => ModelSpec::heston_sv(beta, tp),
                            Preset::Mixture => {
                                ModelSpec::mixture(self.sigma.unwrap_or(1.0), beta, self.scale.unwrap_or(1.0))
                            }
                            Preset::Stable => ModelSpec::pure_stable(beta, self.scale.unwrap_or(1.0)),
                            Preset::Brownian => unreachable!(),
                        };
                        let prefix = self.label.as_deref().unwrap_or(name);
                        LabeledModel::new(format!("{prefix};beta={beta}"), model.with_noise(noise))
                    })
                    .collect())
            }
        }
    }
}

/// Parses and validates a TOML plan.
pub fn plan_from_toml(text: &str) -> Result<ExperimentPlan> {
    let file: PlanFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    let mut models = Vec::new();
    for (i, entry) in file.models.iter().enumerate() {
        models.extend(entry.expand(i)?);
    }
    let plan = ExperimentPlan {
        models,
        sizes: file.sizes,
        horizon: file.horizon,
        statistic: file.statistic.build()?,
        theta: file.theta,
        replications: file.replications,
        master_seed: Seed(file.seed),
        workers: file.workers,
    };
    plan.validate()?;
    Ok(plan)
}
