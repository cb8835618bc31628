//! Simulated integer quantization in float arithmetic.
//!
//! Tensors stay `f64` end to end; quantization error is injected by snapping
//! values onto an affine integer grid and immediately mapping them back:
//!
//! ```text
//! fq(v) = step * (clamp(round(v / step) + zero_point, 0, 2^bits - 1) - zero_point)
//! ```
//!
//! with round-half-away-from-zero. A bit width of 32 means "leave the tensor
//! alone" and is the float baseline throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bit widths with hardware analogues that the simulator accepts.
pub const SUPPORTED_BITS: [u8; 5] = [2, 3, 4, 8, 32];

/// Step size for degenerate calibration data (all samples equal): small
/// enough that the reconstruction error on such data is negligible.
pub const DEGENERATE_STEP: f64 = 1e-8;

/// Error-energy floor below which a quality ratio is reported as the cap
/// instead of a meaninglessly large number.
pub const SQNR_ERROR_FLOOR: f64 = 1e-20;

/// Quality cap in dB reported for (near-)exact reconstructions.
pub const SQNR_CAP_DB: f64 = 100.0;

/// Affine quantizer parameters for one tensor role.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantParams {
    /// One of 2, 3, 4, 8, or 32 (pass-through).
    pub bits: u8,
    /// Grid spacing; strictly positive.
    pub step: f64,
    /// Integer offset locating zero on the grid, within `[0, 2^bits - 1]`.
    pub zero_point: i64,
}

impl QuantParams {
    pub fn new(bits: u8, step: f64, zero_point: i64) -> Result<Self> {
        let p = Self { bits, step, zero_point };
        p.validate()?;
        Ok(p)
    }

    /// Pass-through parameters for a freshly built, not yet calibrated role.
    pub fn identity(bits: u8) -> Result<Self> {
        Self::new(bits, 1.0, 0)
    }

    pub fn validate(&self) -> Result<()> {
        if !SUPPORTED_BITS.contains(&self.bits) {
            return Err(Error::Config(format!(
                "unsupported bit width {}; expected one of {SUPPORTED_BITS:?}",
                self.bits
            )));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.step)));
        }
        if self.bits < 32 {
            let levels = (1i64 << self.bits) - 1;
            if self.zero_point < 0 || self.zero_point > levels {
                return Err(Error::Config(format!(
                    "zero point {} outside [0, {levels}] for {} bits",
                    self.zero_point, self.bits
                )));
            }
        }
        Ok(())
    }

    /// Largest representable level index, `2^bits - 1`.
    pub fn max_level(&self) -> i64 {
        (1i64 << self.bits) - 1
    }

    /// True when this role leaves tensors untouched.
    pub fn is_pass_through(&self) -> bool {
        self.bits == 32
    }
}

/// The quantizer bundle of one shared layer: independent activation
/// parameters for the two execution branches plus the weight parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchQuant {
    pub act_high: QuantParams,
    pub act_low: QuantParams,
    pub weight: QuantParams,
}

impl BranchQuant {
    pub fn validate(&self) -> Result<()> {
        self.act_high.validate()?;
        self.act_low.validate()?;
        self.weight.validate()?;
        if self.act_low.bits > self.act_high.bits {
            return Err(Error::Config(format!(
                "low branch bits {} exceed high branch bits {}",
                self.act_low.bits, self.act_high.bits
            )));
        }
        Ok(())
    }
}

#[inline]
fn round_half_away(v: f64) -> f64 {
    // f64::round is round-half-away-from-zero, which is the convention here.
    v.round()
}

/// Snap one value onto the quantizer's grid and back.
#[inline]
pub fn fake_quantize_value(v: f64, p: &QuantParams) -> f64 {
    if p.is_pass_through() {
        return v;
    }
    let q = round_half_away(v / p.step) + p.zero_point as f64;
    let clamped = q.clamp(0.0, p.max_level() as f64);
    p.step * (clamped - p.zero_point as f64)
}

/// Snap a whole tensor onto the quantizer's grid and back.
///
/// With 32 bits the input is returned bit-identically.
pub fn fake_quantize(values: &[f64], p: &QuantParams) -> Vec<f64> {
    if p.is_pass_through() {
        return values.to_vec();
    }
    values.iter().map(|&v| fake_quantize_value(v, p)).collect()
}

/// Fit an asymmetric per-tensor quantizer to samples by their min/max range.
///
/// `step = (max - min) / (2^bits - 1)`; the zero point is the clamped level
/// index nearest to real zero. Degenerate data (max == min, e.g. all zeros)
/// falls back to a tiny step with zero offset so quantization of such data is
/// effectively exact. Empty sample sets cannot be calibrated.
pub fn calibrate_minmax(samples: &[f64], bits: u8) -> Result<QuantParams> {
    if !SUPPORTED_BITS.contains(&bits) {
        return Err(Error::Config(format!(
            "unsupported bit width {bits}; expected one of {SUPPORTED_BITS:?}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::Calibration("cannot calibrate on an empty sample set".into()));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::Calibration("calibration samples contain non-finite values".into()));
    }
    if bits == 32 {
        return QuantParams::new(32, 1.0, 0);
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in samples {
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    let levels = ((1i64 << bits) - 1) as f64;
    if max == min {
        return QuantParams::new(bits, DEGENERATE_STEP, 0);
    }
    let step = (max - min) / levels;
    let zero_point = round_half_away(-min / step).clamp(0.0, levels) as i64;
    QuantParams::new(bits, step, zero_point)
}

/// Signal-to-quantization-noise ratio in dB:
/// `10 * log10(sum(ref^2) / sum((ref - approx)^2))`.
///
/// An error energy below [`SQNR_ERROR_FLOOR`] reports the cap
/// [`SQNR_CAP_DB`]; a reference with no energy has no defined ratio.
pub fn sqnr_db(reference: &[f64], approx: &[f64]) -> Result<f64> {
    if reference.len() != approx.len() {
        return Err(Error::Config(format!(
            "reference length {} does not match approximation length {}",
            reference.len(),
            approx.len()
        )));
    }
    let mut sig = 0.0;
    let mut err = 0.0;
    for (&r, &a) in reference.iter().zip(approx) {
        sig += r * r;
        let d = r - a;
        err += d * d;
    }
    if sig == 0.0 {
        return Err(Error::UndefinedSignal(
            "signal-to-noise ratio of an all-zero reference is undefined".into(),
        ));
    }
    if err < SQNR_ERROR_FLOOR {
        return Ok(SQNR_CAP_DB);
    }
    Ok(10.0 * (sig / err).log10())
}
