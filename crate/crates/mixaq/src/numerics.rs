//! Dense `f64` building blocks: feature maps, linear layers, layer norm,
//! softmax, and multi-head window attention.
//!
//! Everything is plain row-major `Vec<f64>` with explicit dimensions. The
//! point is bit-reproducibility, not speed: every operation visits its data
//! in a fixed order so two runs over the same inputs produce identical bits.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

/// A `height x width x channels` activation tensor, row-major with channels
/// innermost. All values are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::Config(format!(
                "feature map dimensions must be positive, got {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::Config(format!(
                "feature map data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("feature map contains non-finite values".into()));
        }
        Ok(Self { height, width, channels, data })
    }

    /// Zero-filled map of the given shape.
    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    /// Standard-normal map drawn from a dedicated seeded stream; the stand-in
    /// for real images throughout the crate.
    pub fn seeded_gaussian(height: usize, width: usize, channels: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(seed);
        let data: Vec<f64> = (0..height * width * channels)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self::new(height, width, channels, data)
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, value: f64) {
        self.data[(row * self.width + col) * self.channels + ch] = value;
    }
}

/// Weights of an affine layer computing `y = x W^T + b`.
///
/// `matrix` is `[out_dim x in_dim]` row-major; `bias` has length `out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearWeights {
    pub in_dim: usize,
    pub out_dim: usize,
    pub matrix: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearWeights {
    pub fn new(in_dim: usize, out_dim: usize, matrix: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::Config("linear dimensions must be positive".into()));
        }
        if matrix.len() != in_dim * out_dim {
            return Err(Error::Config(format!(
                "linear matrix length {} does not match {out_dim}x{in_dim}",
                matrix.len()
            )));
        }
        if bias.len() != out_dim {
            return Err(Error::Config(format!(
                "linear bias length {} does not match out_dim {out_dim}",
                bias.len()
            )));
        }
        if matrix.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("linear weights contain non-finite values".into()));
        }
        Ok(Self { in_dim, out_dim, matrix, bias })
    }

    /// Uniform init on `[-a, a]` with `a = 1/sqrt(in_dim)`, zero bias.
    pub fn seeded_uniform<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let a = 1.0 / (in_dim as f64).sqrt();
        let matrix: Vec<f64> = (0..in_dim * out_dim).map(|_| a * (2.0 * rng.gen::<f64>() - 1.0)).collect();
        Self { in_dim, out_dim, matrix, bias: vec![0.0; out_dim] }
    }
}

/// Per-token normalization parameters; `gamma`/`beta` have one entry per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub epsilon: f64,
}

impl LayerNormParams {
    /// Identity-style init: unit gamma, zero beta.
    pub fn unit(channels: usize, epsilon: f64) -> Self {
        Self { gamma: vec![1.0; channels], beta: vec![0.0; channels], epsilon }
    }
}

/// Apply an affine layer to a `[rows x in_dim]` token matrix (flat, row-major).
///
/// The row count is inferred from the input length; a length that is not a
/// multiple of `in_dim` is a configuration error.
pub fn linear(x: &[f64], w: &LinearWeights) -> Result<Vec<f64>> {
    if x.len() % w.in_dim != 0 {
        return Err(Error::Config(format!(
            "input length {} is not a multiple of in_dim {}",
            x.len(),
            w.in_dim
        )));
    }
    let rows = x.len() / w.in_dim;
    let mut out = vec![0.0; rows * w.out_dim];
    for r in 0..rows {
        let xi = &x[r * w.in_dim..(r + 1) * w.in_dim];
        let yo = &mut out[r * w.out_dim..(r + 1) * w.out_dim];
        for (j, y) in yo.iter_mut().enumerate() {
            let wr = &w.matrix[j * w.in_dim..(j + 1) * w.in_dim];
            let mut acc = 0.0;
            for i in 0..w.in_dim {
                acc += xi[i] * wr[i];
            }
            *y = acc + w.bias[j];
        }
    }
    Ok(out)
}

/// Normalize each row of a `[rows x channels]` token matrix to zero mean and
/// unit (biased) variance, then scale and shift per channel.
///
/// A zero-variance row maps to `beta` exactly.
pub fn layer_norm(x: &[f64], p: &LayerNormParams) -> Result<Vec<f64>> {
    let c = p.gamma.len();
    if c == 0 || p.beta.len() != c {
        return Err(Error::Config("layer norm gamma/beta lengths must match and be positive".into()));
    }
    if x.len() % c != 0 {
        return Err(Error::Config(format!(
            "input length {} is not a multiple of channel count {c}",
            x.len()
        )));
    }
    let rows = x.len() / c;
    let mut out = vec![0.0; x.len()];
    for r in 0..rows {
        let xi = &x[r * c..(r + 1) * c];
        let mut mean = 0.0;
        for &v in xi {
            mean += v;
        }
        mean /= c as f64;
        let mut var = 0.0;
        for &v in xi {
            let d = v - mean;
            var += d * d;
        }
        var /= c as f64;
        let denom = (var + p.epsilon).sqrt();
        let yo = &mut out[r * c..(r + 1) * c];
        for i in 0..c {
            yo[i] = p.gamma[i] * ((xi[i] - mean) / denom) + p.beta[i];
        }
    }
    Ok(out)
}

/// In-place numerically stable softmax over one row.
pub fn softmax_in_place(row: &mut [f64]) {
    let mut max = f64::NEG_INFINITY;
    for &v in row.iter() {
        if v > max {
            max = v;
        }
    }
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Tanh-form Gaussian error linear unit, the feed-forward nonlinearity.
pub fn gelu(x: f64) -> f64 {
    const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + 0.044715 * x * x * x)).tanh())
}

/// Scaled dot-product attention mix for one window, starting from a packed
/// `[tokens x 3*channels]` query/key/value matrix (q, then k, then v per row).
///
/// `mask`, when present, is a `[tokens x tokens]` additive bias applied to the
/// attention logits before the softmax. Returns the mixed `[tokens x channels]`
/// values, heads concatenated; no output projection.
pub fn multihead_mix(
    qkv_out: &[f64],
    tokens: usize,
    channels: usize,
    heads: usize,
    mask: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if heads == 0 || channels % heads != 0 {
        return Err(Error::Config(format!(
            "head count {heads} must divide channel count {channels}"
        )));
    }
    if qkv_out.len() != tokens * 3 * channels {
        return Err(Error::Config(format!(
            "packed qkv length {} does not match {tokens}x{}",
            qkv_out.len(),
            3 * channels
        )));
    }
    if let Some(m) = mask {
        if m.len() != tokens * tokens {
            return Err(Error::Config(format!(
                "attention mask length {} does not match {tokens}x{tokens}",
                m.len()
            )));
        }
    }
    let dh = channels / heads;
    let scale = 1.0 / (dh as f64).sqrt();
    let stride = 3 * channels;
    let mut out = vec![0.0; tokens * channels];
    let mut logits = vec![0.0; tokens];
    for h in 0..heads {
        let q_off = h * dh;
        let k_off = channels + h * dh;
        let v_off = 2 * channels + h * dh;
        for i in 0..tokens {
            let qi = &qkv_out[i * stride + q_off..i * stride + q_off + dh];
            for j in 0..tokens {
                let kj = &qkv_out[j * stride + k_off..j * stride + k_off + dh];
                let mut dot = 0.0;
                for d in 0..dh {
                    dot += qi[d] * kj[d];
                }
                let mut l = dot * scale;
                if let Some(m) = mask {
                    l += m[i * tokens + j];
                }
                logits[j] = l;
            }
            softmax_in_place(&mut logits);
            let oi = &mut out[i * channels + h * dh..i * channels + (h + 1) * dh];
            for (j, &a) in logits.iter().enumerate() {
                let vj = &qkv_out[j * stride + v_off..j * stride + v_off + dh];
                for d in 0..dh {
                    oi[d] += a * vj[d];
                }
            }
        }
    }
    Ok(out)
}

/// Full window attention for a single window: packed qkv projection, per-head
/// scaled dot-product with optional additive mask, output projection.
pub fn window_attention_single(
    tokens_data: &[f64],
    qkv: &LinearWeights,
    proj: &LinearWeights,
    heads: usize,
    mask: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let channels = qkv.in_dim;
    if qkv.out_dim != 3 * channels {
        return Err(Error::Config(format!(
            "qkv layer must map {channels} -> {}, got out_dim {}",
            3 * channels,
            qkv.out_dim
        )));
    }
    if proj.in_dim != channels || proj.out_dim != channels {
        return Err(Error::Config(format!(
            "projection layer must map {channels} -> {channels}, got {}x{}",
            proj.out_dim, proj.in_dim
        )));
    }
    if tokens_data.len() % channels != 0 {
        return Err(Error::Config("window token length is not a multiple of channels".into()));
    }
    let t = tokens_data.len() / channels;
    let qkv_out = linear(tokens_data, qkv)?;
    let mixed = multihead_mix(&qkv_out, t, channels, heads, mask)?;
    linear(&mixed, proj)
}

/// Window attention over a batch of windows laid out `[n_win x tokens x channels]`.
///
/// `masks`, when present, holds one `[tokens x tokens]` additive mask per
/// window, concatenated in window order.
pub fn window_attention(
    windows: &[f64],
    n_win: usize,
    tokens_per_window: usize,
    qkv: &LinearWeights,
    proj: &LinearWeights,
    heads: usize,
    masks: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let channels = qkv.in_dim;
    let per = tokens_per_window * channels;
    if windows.len() != n_win * per {
        return Err(Error::Config(format!(
            "window tensor length {} does not match {n_win}x{tokens_per_window}x{channels}",
            windows.len()
        )));
    }
    if let Some(m) = masks {
        if m.len() != n_win * tokens_per_window * tokens_per_window {
            return Err(Error::Config(format!(
                "mask tensor length {} does not match {n_win}x{tokens_per_window}x{tokens_per_window}",
                m.len()
            )));
        }
    }
    let mut out = vec![0.0; windows.len()];
    let msize = tokens_per_window * tokens_per_window;
    for w in 0..n_win {
        let win = &windows[w * per..(w + 1) * per];
        let mask = masks.map(|m| &m[w * msize..(w + 1) * msize]);
        let res = window_attention_single(win, qkv, proj, heads, mask)?;
        out[w * per..(w + 1) * per].copy_from_slice(&res);
    }
    Ok(out)
}
