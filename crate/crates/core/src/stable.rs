//! Symmetric β-stable draws via the Chambers–Mallows–Stuck transform.

use std::f64::consts::FRAC_PI_2;

use rand::distr::{Distribution, Open01};
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{domain, Result};
use crate::seed::Seed;

/// Symmetric stable law with characteristic function `exp(-|scale * u|^beta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricStable {
    beta: f64,
    scale: f64,
}

impl SymmetricStable {
    pub fn new(beta: f64, scale: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return domain(format!("stability index must lie in (0, 2], got {beta}"));
        }
        if !(scale >= 0.0) || !scale.is_finite() {
            return domain(format!("scale must be nonnegative and finite, got {scale}"));
        }
        Ok(SymmetricStable { beta, scale })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Unit-scale draw.
    fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // V uniform on (-pi/2, pi/2), open at both ends.
        let u: f64 = Open01.sample(rng);
        let v = FRAC_PI_2 * (2.0 * u - 1.0);
        let beta = self.beta;
        if beta == 1.0 {
            return v.tan();
        }
        let w: f64 = Exp1.sample(rng);
        if beta == 2.0 {
            // sin(2V)/sqrt(cos V) * (cos V / W)^(-1/2) = 2 sin(V) sqrt(W)
            return 2.0 * v.sin() * w.sqrt();
        }
        let bv = beta * v;
        let cos_v = v.cos();
        bv.sin() / cos_v.powf(1.0 / beta) * ((v - bv).cos() / w).powf((1.0 - beta) / beta)
    }
}

impl Distribution<f64> for SymmetricStable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale * self.standard(rng)
    }
}

/// `count` iid symmetric β-stable draws with the given scale.
pub fn sample_stable(beta: f64, scale: f64, count: usize, seed: Seed) -> Result<Vec<f64>> {
    let law = SymmetricStable::new(beta, scale)?;
    let mut rng = seed.rng();
    Ok((0..count).map(|_| law.sample(&mut rng)).collect())
}
