//! Seeded simulation of the generative models on an equispaced grid.
//!
//! A model is `Y_t = X_t + d(t) + J_t (+ observation noise)` where `X` is a
//! continuous component (Brownian, Ornstein–Uhlenbeck or Heston stochastic
//! volatility), `d` a deterministic drift and `J` a scaled symmetric stable
//! Lévy process. Each component draws from its own child seed, so adding or
//! removing noise never perturbs the diffusion or jump draws.

use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::path::SamplePath;
use crate::seed::Seed;
use crate::stable::SymmetricStable;

const STREAM_DIFFUSION: u64 = 0;
const STREAM_JUMP: u64 = 1;
const STREAM_NOISE: u64 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diffusion {
    #[default]
    None,
    /// `sigma * W_t`.
    Brownian { sigma: f64 },
    /// `dX = -X dt + dW`, `X_0 = 0`.
    Ou,
    /// `dX = sqrt(v) dW`, `dv = kappa (eta - v) dt + gamma sqrt(v) dB`,
    /// `corr(dW, dB) = rho`.
    Heston { eta: f64, gamma: f64, kappa: f64, rho: f64, v0: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Drift {
    #[default]
    None,
    /// `exp(-gamma t)`.
    ExpDecay { gamma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Jump {
    #[default]
    None,
    /// `scale * S_{beta, t}` with `S` a standard symmetric stable process.
    Stable { beta: f64, scale: f64 },
}

/// Declarative description of a generative model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct ModelSpec {
    pub diffusion: Diffusion,
    pub drift: Drift,
    pub jump: Jump,
    pub noise_sd: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self.diffusion {
            Diffusion::None | Diffusion::Ou => {}
            Diffusion::Brownian { sigma } => {
                if !(sigma >= 0.0) || !sigma.is_finite() {
                    return domain(format!("brownian sigma must be >= 0, got {sigma}"));
                }
            }
            Diffusion::Heston { eta, gamma, kappa, rho, v0 } => {
                if !(eta > 0.0 && gamma >= 0.0 && kappa > 0.0 && (-1.0..=1.0).contains(&rho) && v0 >= 0.0) {
                    return domain(format!(
                        "heston parameters out of range: eta={eta}, gamma={gamma}, kappa={kappa}, rho={rho}, v0={v0}"
                    ));
                }
            }
        }
        if let Drift::ExpDecay { gamma } = self.drift {
            if !gamma.is_finite() {
                return domain("drift rate must be finite");
            }
        }
        if let Jump::Stable { beta, scale } = self.jump {
            SymmetricStable::new(beta, scale)?;
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return domain(format!("noise_sd must be >= 0, got {}", self.noise_sd));
        }
        if self.diffusion == Diffusion::None && self.drift == Drift::None && self.jump == Jump::None {
            return domain("model has no diffusion, drift or jump component");
        }
        Ok(())
    }

    /// Null-hypothesis design: OU diffusion plus `theta_prime * S_beta`.
    pub fn null_ou(beta: f64, theta_prime: f64) -> Self {
        ModelSpec {
            diffusion: Diffusion::Ou,
            jump: Jump::Stable { beta, scale: theta_prime },
            ..Default::default()
        }
    }

    /// Alternative design: `exp(-gamma t) + 0.5 S_beta`, no diffusion.
    ///
    /// The drift is switched off for `beta <= 1`, where the power theory
    /// requires a driftless jump process.
    pub fn alt_pure_jump(beta: f64, gamma: f64) -> Self {
        let drift = if beta > 1.0 && gamma != 0.0 { Drift::ExpDecay { gamma } } else { Drift::None };
        ModelSpec { drift, jump: Jump::Stable { beta, scale: 0.5 }, ..Default::default() }
    }

    /// `sigma * W + scale * S_beta`.
    pub fn mixture(sigma: f64, beta: f64, scale: f64) -> Self {
        ModelSpec {
            diffusion: Diffusion::Brownian { sigma },
            jump: Jump::Stable { beta, scale },
            ..Default::default()
        }
    }

    pub fn brownian(sigma: f64) -> Self {
        ModelSpec { diffusion: Diffusion::Brownian { sigma }, ..Default::default() }
    }

    pub fn pure_stable(beta: f64, scale: f64) -> Self {
        ModelSpec { jump: Jump::Stable { beta, scale }, ..Default::default() }
    }

    /// Heston stochastic-volatility diffusion (`eta = 1/16, gamma = 0.5,
    /// kappa = 5, rho = -0.5`, `v0 = eta`) plus `theta_prime * S_beta`.
    pub fn heston_sv(beta: f64, theta_prime: f64) -> Self {
        let eta = 1.0 / 16.0;
        ModelSpec {
            diffusion: Diffusion::Heston { eta, gamma: 0.5, kappa: 5.0, rho: -0.5, v0: eta },
            jump: Jump::Stable { beta, scale: theta_prime },
            ..Default::default()
        }
    }

    pub fn with_noise(mut self, noise_sd: f64) -> Self {
        self.noise_sd = noise_sd;
        self
    }
}

fn check_grid(n: usize, horizon: f64) -> Result<()> {
    if n < 2 {
        return domain(format!("need n >= 2 increments, got {n}"));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain(format!("horizon must be positive, got {horizon}"));
    }
    Ok(())
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Adds the continuous component to `values` in place; returns the effective
/// (truncated) variance path for Heston.
fn add_diffusion(values: &mut [f64], diffusion: Diffusion, dt: f64, seed: Seed) -> Option<Vec<f64>> {
    let mut rng = seed.rng();
    match diffusion {
        Diffusion::None => None,
        Diffusion::Brownian { sigma } => {
            let sd = sigma * dt.sqrt();
            let mut x = 0.0;
            for v in values.iter_mut().skip(1) {
                x += sd * normal(&mut rng);
                *v += x;
            }
            None
        }
        Diffusion::Ou => {
            let decay = (-dt).exp();
            let sd = ((1.0 - (-2.0 * dt).exp()) / 2.0).sqrt();
            let mut x = 0.0;
            for v in values.iter_mut().skip(1) {
                x = x * decay + sd * normal(&mut rng);
                *v += x;
            }
            None
        }
        Diffusion::Heston { eta, gamma, kappa, rho, v0 } => {
            let sq = dt.sqrt();
            let rho_c = (1.0 - rho * rho).max(0.0).sqrt();
            let mut x = 0.0;
            let mut var = v0;
            let mut effective = Vec::with_capacity(values.len());
            effective.push(var.max(0.0));
            for v in values.iter_mut().skip(1) {
                let vp = var.max(0.0);
                let z1 = normal(&mut rng);
                let z2 = normal(&mut rng);
                let vol = vp.sqrt();
                x += vol * sq * z1;
                var += kappa * (eta - vp) * dt + gamma * vol * sq * (rho * z1 + rho_c * z2);
                effective.push(var.max(0.0));
                *v += x;
            }
            Some(effective)
        }
    }
}

fn build(model: &ModelSpec, n: usize, horizon: f64, seed: Seed) -> Result<(SamplePath, Option<Vec<f64>>)> {
    model.validate()?;
    check_grid(n, horizon)?;
    let dt = horizon / n as f64;
    let mut values = vec![0.0; n + 1];

    let variance = add_diffusion(&mut values, model.diffusion, dt, seed.child(STREAM_DIFFUSION));

    if let Drift::ExpDecay { gamma } = model.drift {
        for (i, v) in values.iter_mut().enumerate() {
            *v += (-gamma * horizon * i as f64 / n as f64).exp();
        }
    }

    if let Jump::Stable { beta, scale } = model.jump {
        if scale > 0.0 {
            let law = SymmetricStable::new(beta, scale * dt.powf(1.0 / beta))?;
            let mut rng = seed.child(STREAM_JUMP).rng();
            let mut level = 0.0;
            for v in values.iter_mut().skip(1) {
                level += law.sample(&mut rng);
                *v += level;
            }
        }
    }

    if model.noise_sd > 0.0 {
        perturb(&mut values, model.noise_sd, seed.child(STREAM_NOISE));
    }
    Ok((SamplePath::from_values(horizon, values)?, variance))
}

fn perturb(values: &mut [f64], sd: f64, seed: Seed) {
    let mut rng = seed.rng();
    for v in values.iter_mut() {
        *v += sd * normal(&mut rng);
    }
}

/// Simulates `model` on `n` equal steps over `[0, horizon]`.
pub fn simulate(model: &ModelSpec, n: usize, horizon: f64, seed: Seed) -> Result<SamplePath> {
    build(model, n, horizon, seed).map(|(p, _)| p)
}

/// Like [`simulate`] but also returns the variance process actually used by
/// the Heston scheme (`max(v, 0)` at each grid point). `None` for other
/// diffusions.
pub fn simulate_with_variance(
    model: &ModelSpec,
    n: usize,
    horizon: f64,
    seed: Seed,
) -> Result<(SamplePath, Option<Vec<f64>>)> {
    build(model, n, horizon, seed)
}

/// Adds iid `N(0, noise_sd^2)` observation noise on the same grid.
pub fn add_noise(path: &SamplePath, noise_sd: f64, seed: Seed) -> Result<SamplePath> {
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return domain(format!("noise_sd must be >= 0, got {noise_sd}"));
    }
    if noise_sd == 0.0 {
        return Ok(path.clone());
    }
    let mut values = path.values().to_vec();
    perturb(&mut values, noise_sd, seed);
    SamplePath::new(path.t0(), path.horizon(), values)
}
