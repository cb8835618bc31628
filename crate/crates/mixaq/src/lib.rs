//! Desk-scale simulation of mixed-precision activation quantization for
//! window-attention transformer backbones.
//!
//! The crate models a small Swin-style backbone in plain `f64`, splits each
//! attention window into a high-precision branch, a low-precision branch, and
//! an optionally pruned remainder based on per-window importance scores, and
//! measures the quality/cost trade-off of per-stage compression ratios:
//!
//! * [`numerics`] — feature maps, linear layers, layer norm, window attention
//! * [`quant`] — fake quantization, min-max calibration, SQNR
//! * [`windowing`] — window partition/scatter, cyclic shift, importance scores
//! * [`block`] — the two-branch transformer block with shared weights
//! * [`backbone`] — the staged model: build, calibrate, forward passes
//! * [`cost`] — bit-operation cost model and equivalent activation bits
//! * [`sampling`] — uniform-sum ratio sampling on the tenths grid
//! * [`search`] — NSGA-II search over per-pair compression configs
//! * [`cli`] — run configuration schema and the command implementations
//!
//! The primary interface is the `examples/` directory — one runnable example
//! per capability (`cargo run -p mixaq --example <name>`):
//!
//! * `quantize_roundtrip` — fake quantization, calibration, SQNR basics
//! * `window_selection` — partition, importance scores, branch assignment
//! * `two_branch_block` — a single mixed-precision block forward
//! * `backbone_sqnr` — per-stage SQNR of a compressed model vs. its float twin
//! * `cost_report` — equivalent activation bits and BOPs for ratio configs
//! * `ratio_sampling` — uniform-sum vs. naive grid sampling statistics
//! * `evolutionary_search` — a small NSGA-II run printing the Pareto front
//!
//! A thin `mixaq` binary exposes the same capabilities as subcommands
//! (`eval`, `search`, `sqnr-map`, `sample`) for scripted use.

pub mod backbone;
pub mod block;
pub mod cli;
pub mod cost;
pub mod error;
pub mod numerics;
pub mod quant;
pub mod ratio;
pub mod sampling;
pub mod search;
pub mod seeding;
pub mod windowing;

pub use backbone::{Model, ModelSpec, QuantSettings, StageOutputs, StageSpec};
pub use error::{Error, Result};
pub use numerics::{FeatureMap, LayerNormParams, LinearWeights};
pub use quant::{calibrate_minmax, fake_quantize, sqnr_db, BranchQuant, QuantParams};
pub use ratio::{CompressionConfig, ExecMode};
pub use sampling::{lrm_round, naive_uniform_sample, uniform_sum_sample, SamplerConfig};
pub use search::{
    nsga2_search, pareto_filter, CandidateEvaluator, Evaluator, InitSampler, ParetoPoint,
    SearchOutcome, SearchParams,
};
pub use windowing::{ImportanceScores, WindowAssignment, WindowSet};
