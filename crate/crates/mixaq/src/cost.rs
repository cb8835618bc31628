//! Bit-operation cost accounting: per-pair cost fractions, equivalent
//! activation bits, total BOPs, and relative cost/speedup.
//!
//! Routing a fraction `r` of windows to the low-precision branch halves their
//! activation bits, so a pair's multiply-accumulate work effectively shrinks
//! to `1 - p - r/2` (pruned windows cost nothing); pruning alone shrinks it
//! to `1 - r`. Folding those fractions into a MAC tally gives both a
//! cost-weighted average activation bit width and a BOPs total; the two are
//! the same linear functional up to the base bit width.

use crate::backbone::{ModelSpec, QuantSettings};
use crate::error::{Error, Result};
use crate::quant::SUPPORTED_BITS;
use crate::ratio::{CompressionConfig, ExecMode};
use serde::{Deserialize, Serialize};

/// Bundled per-pair GMACs for a detection-scale Swin-Tiny backbone (six block
/// pairs), plus the fixed share below.
pub const SWIN_TINY_PAIR_GMACS: [f64; 6] = [13.3, 13.56, 14.16, 14.16, 14.16, 14.02];

/// Fixed GMACs of the same backbone spent outside the routable block pairs
/// (patch embedding, downsampling, ...) — work no window routing can save.
pub const SWIN_TINY_FIXED_GMACS: f64 = 3.0;

/// Which saving mechanism a ratio vector describes when costing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    /// Low-precision rerouting (optionally combined with pruning).
    MixAq,
    /// Pure pruning: affected windows are skipped outright.
    Pruning,
}

/// MAC tally the cost formulas are evaluated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    /// GMACs of each block pair (both blocks), in config order.
    pub gmacs_per_pair: Vec<f64>,
    /// GMACs outside the pairs; unaffected by any config.
    pub fixed_gmacs: f64,
    /// Activation bit width of the high-precision branch.
    pub base_act_bits: u8,
    /// Weight bit width (identical for both branches).
    pub weight_bits: u8,
}

impl CostModel {
    pub fn new(
        gmacs_per_pair: Vec<f64>,
        fixed_gmacs: f64,
        weight_bits: u8,
        base_act_bits: u8,
    ) -> Result<Self> {
        if gmacs_per_pair.is_empty() || gmacs_per_pair.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::Config("per-pair GMACs must be positive".into()));
        }
        if !(fixed_gmacs >= 0.0) || !fixed_gmacs.is_finite() {
            return Err(Error::Config("fixed GMACs must be finite and non-negative".into()));
        }
        for bits in [weight_bits, base_act_bits] {
            if !SUPPORTED_BITS.contains(&bits) {
                return Err(Error::Config(format!("unsupported bit width {bits}")));
            }
        }
        Ok(Self { gmacs_per_pair, fixed_gmacs, base_act_bits, weight_bits })
    }

    /// The bundled Swin-Tiny-scale tally (six pairs).
    pub fn swin_tiny(weight_bits: u8, base_act_bits: u8) -> Result<Self> {
        Self::new(SWIN_TINY_PAIR_GMACS.to_vec(), SWIN_TINY_FIXED_GMACS, weight_bits, base_act_bits)
    }

    /// Count MACs analytically from a model description. Per block:
    /// `H·W·(12·C² + 2·P²·C)` for the four linear layers plus attention
    /// mixing; patch-merging reductions (`2·H·W·C²` each) form the fixed
    /// share.
    pub fn analytic(spec: &ModelSpec, quant: &QuantSettings) -> Result<Self> {
        spec.validate()?;
        let p = spec.window_size as f64;
        let mut gmacs_per_pair = Vec::with_capacity(spec.n_pairs());
        let mut fixed = 0.0;
        let (mut h, mut w) = (spec.input_height as f64, spec.input_width as f64);
        for (i, stage) in spec.stages.iter().enumerate() {
            let c = stage.channels as f64;
            let block = h * w * (12.0 * c * c + 2.0 * p * p * c);
            for _ in 0..stage.n_block_pairs {
                gmacs_per_pair.push(2.0 * block / 1e9);
            }
            if i + 1 < spec.stages.len() {
                fixed += 2.0 * h * w * c * c / 1e9;
                h /= 2.0;
                w /= 2.0;
            }
        }
        Self::new(gmacs_per_pair, fixed, quant.weight_bits, quant.act_high_bits)
    }

    pub fn n_pairs(&self) -> usize {
        self.gmacs_per_pair.len()
    }
}

/// Cost figures for one config against one [`CostModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    /// Bit operations (MACs × weight bits × activation bits), raw count.
    pub total_bops: f64,
    /// Cost relative to the zero config, in (0, 1].
    pub relative_cost: f64,
    /// `1 / relative_cost`.
    pub speedup: f64,
    /// Cost-weighted average activation bit width.
    pub equivalent_act_bits: f64,
}

/// Fraction of a pair's MACs that remain under `(r, p)`.
///
/// [`Method::MixAq`]: `1 - p - r/2` — pruned windows cost nothing,
/// low-precision windows half. [`Method::Pruning`]: `1 - r` — the single
/// ratio names the pruned fraction and `p` must be zero.
pub fn pair_cost_fraction(r: f64, p: f64, method: Method) -> Result<f64> {
    for v in [r, p] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("ratio {v} outside [0, 1]")));
        }
    }
    let frac = match method {
        Method::MixAq => 1.0 - p - r / 2.0,
        Method::Pruning => {
            if p != 0.0 {
                return Err(Error::Config(
                    "pruning cost takes a single ratio; the pruning argument must be zero".into(),
                ));
            }
            1.0 - r
        }
    };
    if !(frac > 0.0) {
        return Err(Error::Config(format!(
            "ratios r = {r}, p = {p} leave no computation (fraction {frac})"
        )));
    }
    Ok(frac)
}

/// A pair's remaining cost fraction under an execution mode's reading of its
/// stored `(r, p)`.
pub fn pair_fraction_for_mode(mode: ExecMode, r: f64, p: f64) -> Result<f64> {
    match mode {
        ExecMode::MixAq => pair_cost_fraction(r, 0.0, Method::MixAq),
        ExecMode::Prune => pair_cost_fraction(r, 0.0, Method::Pruning),
        ExecMode::MixAqPrune => pair_cost_fraction(r, p, Method::MixAq),
    }
}

fn weighted_gmacs(cm: &CostModel, config: &CompressionConfig, mode: ExecMode) -> Result<f64> {
    if config.len() != cm.n_pairs() {
        return Err(Error::Config(format!(
            "config covers {} pairs but the cost model has {}",
            config.len(),
            cm.n_pairs()
        )));
    }
    let mut weighted = 0.0;
    for i in 0..config.len() {
        weighted += cm.gmacs_per_pair[i] * pair_fraction_for_mode(mode, config.r(i), config.p(i))?;
    }
    Ok(weighted)
}

/// Cost-weighted average activation bit width:
/// `base · (Σ fracᵢ·GMACsᵢ + fixed) / (Σ GMACsᵢ + fixed)`.
pub fn equivalent_act_bits(cm: &CostModel, config: &CompressionConfig, mode: ExecMode) -> Result<f64> {
    let weighted = weighted_gmacs(cm, config, mode)?;
    let base_sum: f64 = cm.gmacs_per_pair.iter().sum();
    let q = (weighted + cm.fixed_gmacs) / (base_sum + cm.fixed_gmacs);
    Ok(cm.base_act_bits as f64 * q)
}

/// Full cost report: BOPs, relative cost, speedup, equivalent bits.
pub fn total_bops(cm: &CostModel, config: &CompressionConfig, mode: ExecMode) -> Result<CostReport> {
    let weighted = weighted_gmacs(cm, config, mode)?;
    let base_sum: f64 = cm.gmacs_per_pair.iter().sum();
    let q = (weighted + cm.fixed_gmacs) / (base_sum + cm.fixed_gmacs);
    // Activation bits multiply last so that uniform tallies at different act
    // widths keep exact small-integer BOPs ratios (e.g. 3/4 for A3 vs. A4).
    let bops = (((weighted + cm.fixed_gmacs) * 1e9) * cm.weight_bits as f64)
        * cm.base_act_bits as f64;
    Ok(CostReport {
        total_bops: bops,
        relative_cost: q,
        speedup: 1.0 / q,
        equivalent_act_bits: cm.base_act_bits as f64 * q,
    })
}
