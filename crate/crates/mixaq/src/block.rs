//! The two-branch transformer block: windows ranked important run the
//! high-precision activation path, the rest run a low-precision path through
//! the *same* weights (with their own layer norms and quantizer parameters),
//! and pruned windows are forwarded unchanged.
//!
//! Both branches execute the standard pre-norm pair of sub-layers —
//! `x + Attn(LN(x))` then `x + FFN(LN(x))` — with every layer *input* fake
//! quantized and residual additions kept in float. The shifted variant rolls
//! the map by half a window before partitioning and masks attention between
//! wrapped regions.

use crate::backbone::QuantSettings;
use crate::error::{Error, Result};
use crate::numerics::{gelu, layer_norm, linear, multihead_mix, FeatureMap, LayerNormParams, LinearWeights};
use crate::quant::{calibrate_minmax, fake_quantize, BranchQuant, QuantParams};
use crate::windowing::{
    cyclic_shift, partition, scatter, select_windows, shift_attention_masks, ImportanceScores,
    WindowAssignment, WindowSet,
};
use rand_chacha::ChaCha8Rng;

/// Layer-norm epsilon used by every block.
pub const LN_EPSILON: f64 = 1e-5;

/// Which execution path a set of windows takes through a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Float weights, no activation quantization (the reference path).
    Float,
    /// Quantized weights, high-precision activation quantizers.
    High,
    /// Quantized weights, low-precision activation quantizers.
    Low,
}

/// One linear layer as both branches see it: the float weights it was built
/// from, the single fake-quantized copy *shared* by the high and low branch,
/// and the branch quantizer parameters for its input activations.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedLayer {
    /// Original float weights (used by the [`Branch::Float`] path).
    pub float_weights: LinearWeights,
    /// Fake-quantized weights; the one tensor both quantized branches read.
    pub weights: LinearWeights,
    /// Activation quantizers per branch plus the weight quantizer.
    pub quant: BranchQuant,
}

impl QuantizedLayer {
    /// Quantize `float_weights` once with min-max parameters at the settings'
    /// weight width; activation quantizers start as placeholders until
    /// calibration.
    pub fn new(float_weights: LinearWeights, settings: &QuantSettings) -> Result<Self> {
        let weight_params = calibrate_minmax(&float_weights.matrix, settings.weight_bits)?;
        let mut weights = float_weights.clone();
        weights.matrix = fake_quantize(&float_weights.matrix, &weight_params);
        let quant = BranchQuant {
            act_high: QuantParams::identity(settings.act_high_bits)?,
            act_low: QuantParams::identity(settings.act_low_bits)?,
            weight: weight_params,
        };
        quant.validate()?;
        Ok(Self { float_weights, weights, quant })
    }

    fn weights_for(&self, branch: Branch) -> &LinearWeights {
        match branch {
            Branch::Float => &self.float_weights,
            Branch::High | Branch::Low => &self.weights,
        }
    }

    fn quantize_input(&self, values: &[f64], branch: Branch) -> Vec<f64> {
        match branch {
            Branch::Float => values.to_vec(),
            Branch::High => fake_quantize(values, &self.quant.act_high),
            Branch::Low => fake_quantize(values, &self.quant.act_low),
        }
    }

    /// Calibrate both branch quantizers from the same full-map buffer.
    fn calibrate_acts(&mut self, samples: &[f64]) -> Result<()> {
        self.quant.act_high = calibrate_minmax(samples, self.quant.act_high.bits)?;
        self.quant.act_low = calibrate_minmax(samples, self.quant.act_low.bits)?;
        Ok(())
    }
}

/// A window-attention block with duplicated layer norms and shared weights
/// across its two precision branches.
#[derive(Debug, Clone)]
pub struct TwoBranchBlock {
    pub ln1_high: LayerNormParams,
    pub ln1_low: LayerNormParams,
    pub ln2_high: LayerNormParams,
    pub ln2_low: LayerNormParams,
    pub qkv: QuantizedLayer,
    pub proj: QuantizedLayer,
    pub ffn1: QuantizedLayer,
    pub ffn2: QuantizedLayer,
    pub heads: usize,
    pub window_size: usize,
    pub channels: usize,
    /// Expected input height/width (the block is built for one stage).
    pub height: usize,
    pub width: usize,
    pub shifted: bool,
    /// Effective roll in patches; 0 disables shifting even for shifted blocks.
    pub shift: usize,
    /// Per-window additive attention masks for the rolled grid, when shifting.
    pub masks: Option<Vec<f64>>,
}

impl TwoBranchBlock {
    /// The roll applied by a shifted block: half a window, unless the map is
    /// no larger than one window (then shifting is pointless and disabled).
    pub fn effective_shift(height: usize, width: usize, window_size: usize, shifted: bool) -> usize {
        if shifted && height.min(width) > window_size {
            window_size / 2
        } else {
            0
        }
    }

    /// Build a block with seeded uniform weights (`[-a, a]`, `a = 1/√in_dim`,
    /// zero biases), unit layer norms, weight quantization applied, and
    /// shift masks precomputed.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        heads: usize,
        window_size: usize,
        shifted: bool,
        settings: &QuantSettings,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if heads == 0 || channels % heads != 0 {
            return Err(Error::Config(format!(
                "head count {heads} must divide channel count {channels}"
            )));
        }
        if window_size == 0 || height % window_size != 0 || width % window_size != 0 {
            return Err(Error::Config(format!(
                "map {height}x{width} is not divisible by window size {window_size}"
            )));
        }
        let qkv = QuantizedLayer::new(LinearWeights::seeded_uniform(channels, 3 * channels, rng), settings)?;
        let proj = QuantizedLayer::new(LinearWeights::seeded_uniform(channels, channels, rng), settings)?;
        let ffn1 = QuantizedLayer::new(LinearWeights::seeded_uniform(channels, 4 * channels, rng), settings)?;
        let ffn2 = QuantizedLayer::new(LinearWeights::seeded_uniform(4 * channels, channels, rng), settings)?;
        let shift = Self::effective_shift(height, width, window_size, shifted);
        let masks = if shift > 0 {
            Some(shift_attention_masks(height, width, window_size, shift))
        } else {
            None
        };
        Ok(Self {
            ln1_high: LayerNormParams::unit(channels, LN_EPSILON),
            ln1_low: LayerNormParams::unit(channels, LN_EPSILON),
            ln2_high: LayerNormParams::unit(channels, LN_EPSILON),
            ln2_low: LayerNormParams::unit(channels, LN_EPSILON),
            qkv,
            proj,
            ffn1,
            ffn2,
            heads,
            window_size,
            channels,
            height,
            width,
            shifted,
            shift,
            masks,
        })
    }

    fn check_input(&self, fm: &FeatureMap) -> Result<()> {
        if fm.height != self.height || fm.width != self.width || fm.channels != self.channels {
            return Err(Error::Config(format!(
                "block built for {}x{}x{} got input {}x{}x{}",
                self.height, self.width, self.channels, fm.height, fm.width, fm.channels
            )));
        }
        Ok(())
    }

    /// Mask slice for the window whose top-left corner (on the rolled grid)
    /// is `origin`.
    fn mask_for_origin(&self, origin: (usize, usize)) -> Option<&[f64]> {
        self.masks.as_deref().map(|m| {
            let cols = self.width / self.window_size;
            let t2 = self.window_size * self.window_size * self.window_size * self.window_size;
            let idx = (origin.0 / self.window_size) * cols + origin.1 / self.window_size;
            &m[idx * t2..(idx + 1) * t2]
        })
    }

    /// Run a gathered set of windows through one branch. Masks are resolved
    /// per window from its origin, so any subset in any order computes
    /// exactly what the same windows compute inside a full forward.
    pub fn forward_windows(&self, ws: &WindowSet, branch: Branch) -> Result<WindowSet> {
        if ws.window_size != self.window_size || ws.channels != self.channels {
            return Err(Error::Config(format!(
                "window set geometry {}/{} does not match block {}/{}",
                ws.window_size, ws.channels, self.window_size, self.channels
            )));
        }
        let (ln1, ln2) = match branch {
            Branch::Float | Branch::High => (&self.ln1_high, &self.ln2_high),
            Branch::Low => (&self.ln1_low, &self.ln2_low),
        };
        let t = self.window_size * self.window_size;
        let c = self.channels;
        let x0 = &ws.tokens;

        // Attention sub-layer.
        let h = layer_norm(x0, ln1)?;
        let hq = self.qkv.quantize_input(&h, branch);
        let qkv_out = linear(&hq, self.qkv.weights_for(branch))?;
        let mut mixed = vec![0.0; ws.n_win() * t * c];
        for w in 0..ws.n_win() {
            let mask = self.mask_for_origin(ws.origins[w]);
            let m = multihead_mix(&qkv_out[w * t * 3 * c..(w + 1) * t * 3 * c], t, c, self.heads, mask)?;
            mixed[w * t * c..(w + 1) * t * c].copy_from_slice(&m);
        }
        let mq = self.proj.quantize_input(&mixed, branch);
        let attn = linear(&mq, self.proj.weights_for(branch))?;
        let x1: Vec<f64> = x0.iter().zip(&attn).map(|(a, b)| a + b).collect();

        // Feed-forward sub-layer.
        let h2 = layer_norm(&x1, ln2)?;
        let h2q = self.ffn1.quantize_input(&h2, branch);
        let f1 = linear(&h2q, self.ffn1.weights_for(branch))?;
        let g: Vec<f64> = f1.iter().map(|&v| gelu(v)).collect();
        let gq = self.ffn2.quantize_input(&g, branch);
        let f2 = linear(&gq, self.ffn2.weights_for(branch))?;
        let out: Vec<f64> = x1.iter().zip(&f2).map(|(a, b)| a + b).collect();

        Ok(WindowSet {
            window_size: ws.window_size,
            channels: ws.channels,
            tokens: out,
            origins: ws.origins.clone(),
        })
    }

    /// Forward the whole map through one branch (no selection, no pruning).
    pub fn forward_all(&self, fm: &FeatureMap, branch: Branch) -> Result<FeatureMap> {
        self.check_input(fm)?;
        let rolled = self.roll_in(fm);
        let ws = partition(&rolled, self.window_size)?;
        let out = self.forward_windows(&ws, branch)?;
        self.roll_out(scatter(&out, self.height, self.width)?)
    }

    /// Forward under a precomputed branch assignment (indices on this block's
    /// window grid — the rolled grid for shifted blocks). Pruned windows pass
    /// through untouched.
    pub fn forward_assigned(&self, fm: &FeatureMap, assignment: &WindowAssignment) -> Result<FeatureMap> {
        self.check_input(fm)?;
        let rolled = self.roll_in(fm);
        let ws = partition(&rolled, self.window_size)?;
        let n = ws.n_win();
        let total = assignment.high.len() + assignment.low.len() + assignment.pruned.len();
        if total != n
            || assignment.high.iter().chain(&assignment.low).chain(&assignment.pruned).any(|&i| i >= n)
        {
            return Err(Error::Config(format!(
                "assignment covers {total} windows, block has {n}"
            )));
        }
        let per = self.window_size * self.window_size * self.channels;
        let mut out_tokens = ws.tokens.clone();
        for (branch, idxs) in [(Branch::High, &assignment.high), (Branch::Low, &assignment.low)] {
            if idxs.is_empty() {
                continue;
            }
            let sub = ws.subset(idxs);
            let res = self.forward_windows(&sub, branch)?;
            for (k, &wi) in idxs.iter().enumerate() {
                out_tokens[wi * per..(wi + 1) * per].copy_from_slice(res.window(k));
            }
        }
        let out_ws = WindowSet {
            window_size: self.window_size,
            channels: self.channels,
            tokens: out_tokens,
            origins: ws.origins,
        };
        self.roll_out(scatter(&out_ws, self.height, self.width)?)
    }

    /// The full two-branch forward: rank windows by the given scores, route
    /// them, and reassemble the map.
    pub fn forward(
        &self,
        fm: &FeatureMap,
        scores: &ImportanceScores,
        r: f64,
        p: f64,
        reversed: bool,
    ) -> Result<FeatureMap> {
        let assignment = select_windows(scores, r, p, reversed)?;
        self.forward_assigned(fm, &assignment)
    }

    /// One calibration step: run the full map through the high branch while
    /// fitting both branches' activation quantizers at each layer input from
    /// the full buffer, then continue with the freshly calibrated
    /// high-precision values. Returns the block output so a model can stream
    /// one sample through all blocks in order.
    pub fn calibrate_forward(&mut self, fm: &FeatureMap) -> Result<FeatureMap> {
        self.check_input(fm)?;
        let rolled = self.roll_in(fm);
        let ws = partition(&rolled, self.window_size)?;
        let t = self.window_size * self.window_size;
        let c = self.channels;
        let x0 = ws.tokens.clone();

        let h = layer_norm(&x0, &self.ln1_high)?;
        self.qkv.calibrate_acts(&h)?;
        let hq = self.qkv.quantize_input(&h, Branch::High);
        let qkv_out = linear(&hq, self.qkv.weights_for(Branch::High))?;
        let mut mixed = vec![0.0; ws.n_win() * t * c];
        for w in 0..ws.n_win() {
            let mask = self.mask_for_origin(ws.origins[w]);
            let m = multihead_mix(&qkv_out[w * t * 3 * c..(w + 1) * t * 3 * c], t, c, self.heads, mask)?;
            mixed[w * t * c..(w + 1) * t * c].copy_from_slice(&m);
        }
        self.proj.calibrate_acts(&mixed)?;
        let mq = self.proj.quantize_input(&mixed, Branch::High);
        let attn = linear(&mq, self.proj.weights_for(Branch::High))?;
        let x1: Vec<f64> = x0.iter().zip(&attn).map(|(a, b)| a + b).collect();

        let h2 = layer_norm(&x1, &self.ln2_high)?;
        self.ffn1.calibrate_acts(&h2)?;
        let h2q = self.ffn1.quantize_input(&h2, Branch::High);
        let f1 = linear(&h2q, self.ffn1.weights_for(Branch::High))?;
        let g: Vec<f64> = f1.iter().map(|&v| gelu(v)).collect();
        self.ffn2.calibrate_acts(&g)?;
        let gq = self.ffn2.quantize_input(&g, Branch::High);
        let f2 = linear(&gq, self.ffn2.weights_for(Branch::High))?;
        let out: Vec<f64> = x1.iter().zip(&f2).map(|(a, b)| a + b).collect();

        let out_ws = WindowSet {
            window_size: self.window_size,
            channels: self.channels,
            tokens: out,
            origins: ws.origins,
        };
        self.roll_out(scatter(&out_ws, self.height, self.width)?)
    }

    fn roll_in(&self, fm: &FeatureMap) -> FeatureMap {
        if self.shift > 0 {
            cyclic_shift(fm, -(self.shift as i64))
        } else {
            fm.clone()
        }
    }

    fn roll_out(&self, fm: FeatureMap) -> Result<FeatureMap> {
        Ok(if self.shift > 0 { cyclic_shift(&fm, self.shift as i64) } else { fm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;
    use crate::windowing::importance_scores;

    fn settings(weight: u8, high: u8, low: u8) -> QuantSettings {
        QuantSettings { weight_bits: weight, act_high_bits: high, act_low_bits: low }
    }

    fn calibrated_block(shifted: bool, s: &QuantSettings, seed: u64) -> (TwoBranchBlock, FeatureMap) {
        let mut rng = rng_from_seed(seed);
        let mut block = TwoBranchBlock::new(8, 8, 4, 2, 2, shifted, s, &mut rng).unwrap();
        let calib = FeatureMap::seeded_gaussian(8, 8, 4, seed ^ 0xC0FFEE).unwrap();
        block.calibrate_forward(&calib).unwrap();
        (block, FeatureMap::seeded_gaussian(8, 8, 4, seed + 1).unwrap())
    }

    fn stage_scores(block: &TwoBranchBlock, fm: &FeatureMap) -> ImportanceScores {
        importance_scores(&partition(fm, block.window_size).unwrap())
    }

    #[test]
    fn effective_shift_rules() {
        assert_eq!(TwoBranchBlock::effective_shift(8, 8, 2, true), 1);
        assert_eq!(TwoBranchBlock::effective_shift(8, 8, 2, false), 0);
        assert_eq!(TwoBranchBlock::effective_shift(2, 2, 2, true), 0);
        assert_eq!(TwoBranchBlock::effective_shift(56, 56, 7, true), 3);
        assert_eq!(TwoBranchBlock::effective_shift(7, 7, 7, true), 0);
    }

    #[test]
    fn zero_ratios_match_the_single_branch_forward() {
        for shifted in [false, true] {
            let (block, fm) = calibrated_block(shifted, &settings(4, 4, 2), 11);
            let scores = stage_scores(&block, &fm);
            let mixed = block.forward(&fm, &scores, 0.0, 0.0, false).unwrap();
            let uniform = block.forward_all(&fm, Branch::High).unwrap();
            assert_eq!(mixed.data, uniform.data);
        }
    }

    #[test]
    fn equal_branch_bits_make_the_split_invisible() {
        let (block, fm) = calibrated_block(true, &settings(4, 4, 4), 5);
        let scores = stage_scores(&block, &fm);
        let base = block.forward(&fm, &scores, 0.0, 0.0, false).unwrap();
        for r in [0.3, 0.5, 0.8] {
            let split = block.forward(&fm, &scores, r, 0.0, false).unwrap();
            assert_eq!(base.data, split.data, "split at r = {r} changed the output");
        }
    }

    #[test]
    fn pruned_windows_pass_through_untouched() {
        for shifted in [false, true] {
            let (block, fm) = calibrated_block(shifted, &settings(4, 4, 2), 23);
            let scores = stage_scores(&block, &fm);
            let assignment = select_windows(&scores, 0.3, 0.4, false).unwrap();
            let out = block.forward_assigned(&fm, &assignment).unwrap();
            // Pruned indices live on the rolled grid.
            let rolled_in = block.roll_in(&fm);
            let rolled_out = block.roll_in(&out);
            let ws_in = partition(&rolled_in, 2).unwrap();
            let ws_out = partition(&rolled_out, 2).unwrap();
            for &i in &assignment.pruned {
                assert_eq!(ws_in.window(i), ws_out.window(i));
            }
            // And the processed windows did change.
            for &i in assignment.high.iter().chain(&assignment.low) {
                assert_ne!(ws_in.window(i), ws_out.window(i));
            }
        }
    }

    #[test]
    fn low_branch_matches_an_isolated_subset_run() {
        for shifted in [false, true] {
            let (block, fm) = calibrated_block(shifted, &settings(4, 4, 2), 42);
            let scores = stage_scores(&block, &fm);
            let assignment = select_windows(&scores, 0.5, 0.2, false).unwrap();
            let out = block.forward_assigned(&fm, &assignment).unwrap();
            let ws_in = partition(&block.roll_in(&fm), 2).unwrap();
            let ws_out = partition(&block.roll_in(&out), 2).unwrap();
            let oracle = block.forward_windows(&ws_in.subset(&assignment.low), Branch::Low).unwrap();
            for (k, &i) in assignment.low.iter().enumerate() {
                assert_eq!(ws_out.window(i), oracle.window(k));
            }
        }
    }

    #[test]
    fn both_branches_read_the_same_weight_tensor() {
        let (mut block, fm) = calibrated_block(false, &settings(4, 4, 2), 7);
        let high_before = block.forward_all(&fm, Branch::High).unwrap();
        let low_before = block.forward_all(&fm, Branch::Low).unwrap();
        block.qkv.weights.matrix[3] += 0.25;
        let high_after = block.forward_all(&fm, Branch::High).unwrap();
        let low_after = block.forward_all(&fm, Branch::Low).unwrap();
        assert_ne!(high_before.data, high_after.data);
        assert_ne!(low_before.data, low_after.data);
    }

    #[test]
    fn pass_through_settings_reproduce_the_float_path() {
        let (block, fm) = calibrated_block(true, &settings(32, 32, 32), 3);
        let float = block.forward_all(&fm, Branch::Float).unwrap();
        let high = block.forward_all(&fm, Branch::High).unwrap();
        let low = block.forward_all(&fm, Branch::Low).unwrap();
        assert_eq!(float.data, high.data);
        assert_eq!(float.data, low.data);
    }

    #[test]
    fn weight_quantization_limits_distinct_values() {
        let mut rng = rng_from_seed(9);
        let block = TwoBranchBlock::new(4, 4, 4, 2, 2, false, &settings(2, 4, 2), &mut rng).unwrap();
        let mut values: Vec<f64> = block.qkv.weights.matrix.clone();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        assert!(values.len() <= 4, "2-bit weights must take at most 4 values, got {}", values.len());
    }

    #[test]
    fn calibration_pass_agrees_with_the_calibrated_forward() {
        let mut rng = rng_from_seed(31);
        let mut block = TwoBranchBlock::new(8, 8, 4, 2, 2, true, &settings(4, 4, 2), &mut rng).unwrap();
        let calib = FeatureMap::seeded_gaussian(8, 8, 4, 100).unwrap();
        let during = block.calibrate_forward(&calib).unwrap();
        let after = block.forward_all(&calib, Branch::High).unwrap();
        assert_eq!(during.data, after.data);
    }

    #[test]
    fn same_seed_builds_identical_blocks() {
        let s = settings(4, 4, 2);
        let mut r1 = rng_from_seed(77);
        let mut r2 = rng_from_seed(77);
        let b1 = TwoBranchBlock::new(4, 4, 4, 2, 2, false, &s, &mut r1).unwrap();
        let b2 = TwoBranchBlock::new(4, 4, 4, 2, 2, false, &s, &mut r2).unwrap();
        assert_eq!(b1.qkv.float_weights.matrix, b2.qkv.float_weights.matrix);
        assert_eq!(b1.ffn2.weights.matrix, b2.ffn2.weights.matrix);
    }

    #[test]
    fn shifted_and_unshifted_blocks_disagree() {
        let s = settings(32, 32, 32);
        let mut r1 = rng_from_seed(13);
        let mut r2 = rng_from_seed(13);
        let plain = TwoBranchBlock::new(8, 8, 4, 2, 2, false, &s, &mut r1).unwrap();
        let shifted = TwoBranchBlock::new(8, 8, 4, 2, 2, true, &s, &mut r2).unwrap();
        let fm = FeatureMap::seeded_gaussian(8, 8, 4, 4).unwrap();
        let a = plain.forward_all(&fm, Branch::Float).unwrap();
        let b = shifted.forward_all(&fm, Branch::Float).unwrap();
        assert_ne!(a.data, b.data);
    }
}
