//! Testing whether a Brownian component is needed to describe a discretely
//! sampled price path, or whether a pure jump model suffices.
//!
//! The main entry points are [`simulate`] for the generative models,
//! [`run_test`] for the two-scale small-increment test, [`aj_test`] for the
//! truncated power variation baseline, [`v_bar_test`] for the noise-robust
//! pre-averaged variant and [`mc_rejection_rate`] for Monte Carlo tables.

pub mod aj;
pub mod config;
pub mod error;
pub mod experiments;
pub mod normal;
pub mod path;
pub mod pipeline;
pub mod preavg;
pub mod seed;
pub mod sim;
pub mod stable;
pub mod teststat;

pub use aj::{aj_test, calibrate, calibration_constant, s_n, truncated_power_variation, AjSpec, AjStatistics, Calibration, TruncationScale};
pub use config::plan_from_toml;
pub use error::{Error, Result};
pub use experiments::{
    histogram_export, mc_mean, mc_rejection_rate, sweep, table1_demo, write_count_table, write_summaries, CountRow,
    ExperimentPlan, Histogram, HistogramSelector, LabeledModel, McSummary, MeanEstimate, Statistic, SweepParam,
};
pub use normal::{normal_quantile, upper_critical};
pub use path::SamplePath;
pub use pipeline::{
    analyze_day, delta_grid, delta_grid_for, load_ticks, regularize, resample, sigma_star_sq, write_day_csv, DayPoint, DaySummary,
    DeltaGrid, Session, TickSeries,
};
pub use preavg::{preaverage_blocks, v_bar_test, PreAvgSpec, PreAveraged, VBar};
pub use seed::Seed;
pub use sim::{add_noise, simulate, simulate_with_variance, Diffusion, Drift, Jump, ModelSpec};
pub use stable::{sample_stable, SymmetricStable};
pub use teststat::{
    compute_alpha, count_small, run_test, sigma_hat_sq, sigma_tilde_sq, v_n, v_tilde, Decision, Family,
    TestReport, ThresholdMode, ThresholdSpec, TwoScaleCounts, VTilde,
};
