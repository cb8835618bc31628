//! The staged backbone: stacks of two-branch blocks joined by patch-merging
//! downsampling, a streaming calibration pass, and three forward flavors —
//! mixed-precision (the real thing), uniform single-branch, and the float
//! reference.
//!
//! Importance scores are computed once per stage, on the stage's input, and
//! shared by every block in the stage; both blocks of a pair reuse the same
//! branch assignment.

use crate::block::{Branch, TwoBranchBlock};
use crate::error::{Error, Result};
use crate::numerics::{linear, FeatureMap, LinearWeights};
use crate::quant::SUPPORTED_BITS;
use crate::ratio::{CompressionConfig, ExecMode};
use crate::seeding::{derive_seed, rng_from_seed};
use crate::windowing::{importance_scores, partition, select_windows, ImportanceScores, WindowAssignment};
use serde::{Deserialize, Serialize};

/// Bit widths for weights and the two activation branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantSettings {
    pub weight_bits: u8,
    pub act_high_bits: u8,
    pub act_low_bits: u8,
}

impl QuantSettings {
    pub fn validate(&self) -> Result<()> {
        for bits in [self.weight_bits, self.act_high_bits, self.act_low_bits] {
            if !SUPPORTED_BITS.contains(&bits) {
                return Err(Error::Config(format!(
                    "unsupported bit width {bits} (expected one of {SUPPORTED_BITS:?})"
                )));
            }
        }
        if self.act_low_bits > self.act_high_bits {
            return Err(Error::Config(format!(
                "low-branch bits {} exceed high-branch bits {}",
                self.act_low_bits, self.act_high_bits
            )));
        }
        Ok(())
    }
}

/// One stage: how many block pairs it stacks and at what width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub n_block_pairs: usize,
    pub channels: usize,
    pub heads: usize,
}

/// Shape and seed of a backbone. Stage `i` runs at the input resolution
/// halved `i` times; channel counts must double stage over stage to match
/// the patch-merging reductions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub stages: Vec<StageSpec>,
    pub window_size: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub input_channels: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("model needs at least one stage".into()));
        }
        if self.window_size == 0 {
            return Err(Error::Config("window size must be positive".into()));
        }
        let granularity = self.window_size << (self.stages.len() - 1);
        if self.input_height == 0
            || self.input_width == 0
            || self.input_height % granularity != 0
            || self.input_width % granularity != 0
        {
            return Err(Error::Config(format!(
                "input {}x{} must be divisible by window size x 2^(stages-1) = {granularity}",
                self.input_height, self.input_width
            )));
        }
        if self.stages[0].channels != self.input_channels {
            return Err(Error::Config(format!(
                "first stage width {} must equal input channels {}",
                self.stages[0].channels, self.input_channels
            )));
        }
        for (i, stage) in self.stages.iter().enumerate() {
            if stage.n_block_pairs == 0 {
                return Err(Error::Config(format!("stage {i} needs at least one block pair")));
            }
            if stage.heads == 0 || stage.channels % stage.heads != 0 {
                return Err(Error::Config(format!(
                    "stage {i}: head count {} must divide channel count {}",
                    stage.heads, stage.channels
                )));
            }
            if i > 0 && stage.channels != 2 * self.stages[i - 1].channels {
                return Err(Error::Config(format!(
                    "stage {i} width {} must double the previous stage's {}",
                    stage.channels,
                    self.stages[i - 1].channels
                )));
            }
        }
        Ok(())
    }

    /// Total number of block pairs — the length of a matching config.
    pub fn n_pairs(&self) -> usize {
        self.stages.iter().map(|s| s.n_block_pairs).sum()
    }

    /// `(height, width, channels)` at the entry of stage `i`.
    pub fn stage_dims(&self, i: usize) -> (usize, usize, usize) {
        (self.input_height >> i, self.input_width >> i, self.stages[i].channels)
    }
}

/// What one stage recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct StageTrace {
    /// Stage output (after its blocks, before any downsampling).
    pub output: FeatureMap,
    /// The stage-shared importance scores, from the stage's input.
    pub scores: ImportanceScores,
    /// Branch assignment used by each block, in block order (empty for the
    /// uniform and float forwards, which route nothing).
    pub assignments: Vec<WindowAssignment>,
}

/// Per-stage snapshots of one forward pass.
#[derive(Debug, Clone)]
pub struct StageOutputs {
    pub stages: Vec<StageTrace>,
}

impl StageOutputs {
    /// Output of the last stage.
    pub fn final_output(&self) -> &FeatureMap {
        &self.stages.last().expect("a model has at least one stage").output
    }
}

/// How a mixed forward interprets its config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForwardOptions {
    pub mode: ExecMode,
    /// Invert the importance ranking (worst-case window selection).
    pub reversed: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        Self { mode: ExecMode::MixAqPrune, reversed: false }
    }
}

/// 2x2 neighborhood concatenation (gather order: down, right, diagonal —
/// `(0,0), (1,0), (0,1), (1,1)`) followed by a linear reduction `4C -> 2C`.
/// Halves both spatial dimensions. Runs in float on every path.
pub fn patch_merge(fm: &FeatureMap, reduction: &LinearWeights) -> Result<FeatureMap> {
    if fm.height % 2 != 0 || fm.width % 2 != 0 {
        return Err(Error::Config(format!(
            "patch merge needs even dimensions, got {}x{}",
            fm.height, fm.width
        )));
    }
    let c = fm.channels;
    if reduction.in_dim != 4 * c || reduction.out_dim != 2 * c {
        return Err(Error::Config(format!(
            "patch-merge reduction must map {} -> {}, got {} -> {}",
            4 * c,
            2 * c,
            reduction.in_dim,
            reduction.out_dim
        )));
    }
    let (h2, w2) = (fm.height / 2, fm.width / 2);
    let mut gathered = vec![0.0; h2 * w2 * 4 * c];
    for r in 0..h2 {
        for col in 0..w2 {
            let dst = (r * w2 + col) * 4 * c;
            for (slot, (dr, dc)) in [(0, 0), (1, 0), (0, 1), (1, 1)].into_iter().enumerate() {
                let src = ((2 * r + dr) * fm.width + (2 * col + dc)) * c;
                gathered[dst + slot * c..dst + (slot + 1) * c]
                    .copy_from_slice(&fm.data[src..src + c]);
            }
        }
    }
    FeatureMap::new(h2, w2, 2 * c, linear(&gathered, reduction)?)
}

/// A built backbone: per-stage blocks, patch-merging reductions, and the
/// calibration state of its activation quantizers.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    quant: QuantSettings,
    stages: Vec<Vec<TwoBranchBlock>>,
    merges: Vec<LinearWeights>,
    calibrated: bool,
}

impl Model {
    /// Build a model with seeded weights; weight quantizers are fitted
    /// immediately, activation quantizers wait for [`Model::calibrate`].
    pub fn build(spec: ModelSpec, quant: QuantSettings) -> Result<Self> {
        spec.validate()?;
        quant.validate()?;
        let mut rng = rng_from_seed(spec.seed);
        let mut stages = Vec::with_capacity(spec.stages.len());
        let mut merges = Vec::new();
        for (i, stage) in spec.stages.iter().enumerate() {
            let (h, w, c) = spec.stage_dims(i);
            let mut blocks = Vec::with_capacity(2 * stage.n_block_pairs);
            for _ in 0..stage.n_block_pairs {
                for shifted in [false, true] {
                    blocks.push(TwoBranchBlock::new(
                        h,
                        w,
                        c,
                        stage.heads,
                        spec.window_size,
                        shifted,
                        &quant,
                        &mut rng,
                    )?);
                }
            }
            stages.push(blocks);
            if i + 1 < spec.stages.len() {
                merges.push(LinearWeights::seeded_uniform(4 * c, 2 * c, &mut rng));
            }
        }
        Ok(Self { spec, quant, stages, merges, calibrated: false })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn quant_settings(&self) -> &QuantSettings {
        &self.quant
    }

    pub fn is_calibrated(&self) -> bool {
        self.calibrated
    }

    pub fn n_stages(&self) -> usize {
        self.stages.len()
    }

    pub fn n_pairs(&self) -> usize {
        self.spec.n_pairs()
    }

    /// The blocks of one stage, pair by pair (even index plain, odd shifted).
    pub fn blocks(&self, stage: usize) -> &[TwoBranchBlock] {
        &self.stages[stage]
    }

    /// The canonical calibration sample for this model's seed.
    pub fn calibration_input(&self) -> Result<FeatureMap> {
        self.seeded_input(derive_seed(self.spec.seed, 1))
    }

    /// The `i`-th evaluation input for this model's seed.
    pub fn eval_input(&self, i: usize) -> Result<FeatureMap> {
        self.seeded_input(derive_seed(self.spec.seed, 2000 + i as u64))
    }

    fn seeded_input(&self, seed: u64) -> Result<FeatureMap> {
        FeatureMap::seeded_gaussian(
            self.spec.input_height,
            self.spec.input_width,
            self.spec.input_channels,
            seed,
        )
    }

    fn check_input(&self, fm: &FeatureMap) -> Result<()> {
        if fm.height != self.spec.input_height
            || fm.width != self.spec.input_width
            || fm.channels != self.spec.input_channels
        {
            return Err(Error::Config(format!(
                "model expects {}x{}x{} input, got {}x{}x{}",
                self.spec.input_height,
                self.spec.input_width,
                self.spec.input_channels,
                fm.height,
                fm.width,
                fm.channels
            )));
        }
        Ok(())
    }

    /// Stream one sample through the high-precision path, fitting every
    /// layer's activation quantizers (both branches, from the same full-map
    /// buffers) along the way.
    pub fn calibrate(&mut self, fm: &FeatureMap) -> Result<()> {
        self.check_input(fm)?;
        let mut cur = fm.clone();
        let n_stages = self.stages.len();
        for s in 0..n_stages {
            for block in &mut self.stages[s] {
                cur = block.calibrate_forward(&cur)?;
            }
            if s + 1 < n_stages {
                cur = patch_merge(&cur, &self.merges[s])?;
            }
        }
        self.calibrated = true;
        Ok(())
    }

    /// Convenience: calibrate on [`Model::calibration_input`].
    pub fn calibrate_default(&mut self) -> Result<()> {
        let input = self.calibration_input()?;
        self.calibrate(&input)
    }

    fn require_calibrated(&self) -> Result<()> {
        if !self.calibrated {
            return Err(Error::Config(
                "model is not calibrated; run calibrate before a quantized forward".into(),
            ));
        }
        Ok(())
    }

    /// The mixed-precision forward: per stage, score windows once, derive one
    /// assignment per pair, run every block with its pair's assignment.
    pub fn forward_mixed(
        &self,
        fm: &FeatureMap,
        config: &CompressionConfig,
        opts: ForwardOptions,
    ) -> Result<StageOutputs> {
        self.require_calibrated()?;
        self.check_input(fm)?;
        if config.len() != self.n_pairs() {
            return Err(Error::Config(format!(
                "config covers {} pairs but the model has {}",
                config.len(),
                self.n_pairs()
            )));
        }
        let mut cur = fm.clone();
        let mut traces = Vec::with_capacity(self.stages.len());
        let mut pair_offset = 0;
        for (s, blocks) in self.stages.iter().enumerate() {
            let scores = importance_scores(&partition(&cur, self.spec.window_size)?);
            let n_pairs = blocks.len() / 2;
            let mut pair_assignments = Vec::with_capacity(n_pairs);
            for j in 0..n_pairs {
                let idx = pair_offset + j;
                let (r, p) = opts.mode.effective(config.r(idx), config.p(idx));
                pair_assignments.push(select_windows(&scores, r, p, opts.reversed)?);
            }
            let mut assignments = Vec::with_capacity(blocks.len());
            for (k, block) in blocks.iter().enumerate() {
                let assignment = &pair_assignments[k / 2];
                cur = block.forward_assigned(&cur, assignment)?;
                assignments.push(assignment.clone());
            }
            pair_offset += n_pairs;
            traces.push(StageTrace { output: cur.clone(), scores, assignments });
            if s + 1 < self.stages.len() {
                cur = patch_merge(&cur, &self.merges[s])?;
            }
        }
        Ok(StageOutputs { stages: traces })
    }

    /// Run every window of every block through one branch (no routing).
    pub fn forward_uniform(&self, fm: &FeatureMap, branch: Branch) -> Result<StageOutputs> {
        if branch != Branch::Float {
            self.require_calibrated()?;
        }
        self.check_input(fm)?;
        let mut cur = fm.clone();
        let mut traces = Vec::with_capacity(self.stages.len());
        for (s, blocks) in self.stages.iter().enumerate() {
            let scores = importance_scores(&partition(&cur, self.spec.window_size)?);
            for block in blocks {
                cur = block.forward_all(&cur, branch)?;
            }
            traces.push(StageTrace { output: cur.clone(), scores, assignments: Vec::new() });
            if s + 1 < self.stages.len() {
                cur = patch_merge(&cur, &self.merges[s])?;
            }
        }
        Ok(StageOutputs { stages: traces })
    }

    /// The float reference: identical architecture, no quantization anywhere.
    pub fn forward_float(&self, fm: &FeatureMap) -> Result<StageOutputs> {
        self.forward_uniform(fm, Branch::Float)
    }
}
