//! Noise-robust variant: average the `K`-step increments inside disjoint
//! blocks, then run the two-scale count ratio on the block averages.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::path::SamplePath;
use crate::teststat::{compute_alpha, count_small_increments, ThresholdSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreAvgSpec {
    /// Observations per block `M`.
    pub block_size: usize,
    /// Increment step `K` inside a block.
    pub gap: usize,
    pub threshold: ThresholdSpec,
}

impl PreAvgSpec {
    /// Blocks of 234 observations, `K = 50`, `α = 9`, `ϖ = 1.5`.
    pub fn standard() -> Self {
        PreAvgSpec { block_size: 234, gap: 50, threshold: ThresholdSpec::direct(9.0, 1.5) }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.threshold.validate()?;
        if self.threshold.k != 2 {
            return domain(format!("pre-averaged ratio needs k = 2, got {}", self.threshold.k));
        }
        if self.gap == 0 || self.gap >= self.block_size {
            return domain(format!("need 0 < K < M, got K={} M={}", self.gap, self.block_size));
        }
        let blocks = n / self.block_size;
        if blocks < 4 {
            return domain(format!("need at least 4 blocks, n={n} gives {blocks}"));
        }
        Ok(())
    }
}

/// Block averages `Z̄_1, ..., Z̄_B` and their spacing `T / B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreAveraged {
    pub values: Vec<f64>,
    pub spacing: f64,
}

impl PreAveraged {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["block", "zbar"])?;
        for (j, z) in self.values.iter().enumerate() {
            w.write_record([j.to_string(), z.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// For block `j` (observations `jM, ..., jM + M - 1`) the mean of its `M - K`
/// increments `Z_{t_i} - Z_{t_{i-K}}`.
pub fn preaverage_blocks(path: &SamplePath, spec: &PreAvgSpec) -> Result<PreAveraged> {
    spec.validate(path.n())?;
    let (m, k) = (spec.block_size, spec.gap);
    let blocks = path.n() / m;
    let values = path.values();
    let denom = (m - k) as f64;
    let zbar: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|j| {
            let block = &values[j * m..(j + 1) * m];
            block[k..].iter().zip(block).map(|(b, a)| b - a).sum::<f64>() / denom
        })
        .collect();
    Ok(PreAveraged { values: zbar, spacing: path.horizon() / blocks as f64 })
}

/// `V̄_n` with its counts. `v_bar` is `None` when the coarse count is zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VBar {
    pub blocks: usize,
    pub spacing: f64,
    pub alpha: f64,
    pub u_fine: usize,
    pub u_coarse: usize,
    pub v_bar: Option<f64>,
}

impl VBar {
    pub fn is_inconclusive(&self) -> bool {
        self.v_bar.is_none()
    }
}

/// Counts block averages with `|Z̄_j| <= α Δ^ϖ` and sums of consecutive pairs
/// with `|Z̄_{2j} + Z̄_{2j+1}| <= α (2Δ)^ϖ`, `Δ = T / B`, and returns their ratio.
pub fn v_bar_test(noisy_path: &SamplePath, spec: &PreAvgSpec) -> Result<VBar> {
    let pre = preaverage_blocks(noisy_path, spec)?;
    let blocks = pre.values.len();
    let alpha = compute_alpha(&spec.threshold, blocks)?;
    let varpi = spec.threshold.varpi;
    let fine_thr = alpha * pre.spacing.powf(varpi);
    let coarse_thr = alpha * (2.0 * pre.spacing).powf(varpi);
    let u_fine = count_small_increments(&pre.values, 1, fine_thr);
    let u_coarse = count_small_increments(&pre.values, 2, coarse_thr);
    Ok(VBar {
        blocks,
        spacing: pre.spacing,
        alpha,
        u_fine,
        u_coarse,
        v_bar: (u_coarse > 0).then(|| u_fine as f64 / u_coarse as f64),
    })
}
