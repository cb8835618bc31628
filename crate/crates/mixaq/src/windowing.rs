//! Window bookkeeping: partition and scatter, cyclic shifts, shifted-window
//! attention masks, per-window importance scores, and branch assignment.
//!
//! Windows are the unit of precision selection. A feature map is tiled into
//! non-overlapping `P x P` windows; each window's L2 norm ranks it, and the
//! ranking splits the windows into a high-precision set, a low-precision set,
//! and a pruned set.

use crate::error::{Error, Result};
use crate::numerics::FeatureMap;

/// Additive logit bias that effectively removes a token pair from attention.
pub const MASK_NEG: f64 = -1e9;

/// A feature map tiled into `P x P` windows.
///
/// `tokens` is `[n_win x P^2 x channels]` flat; `origins` records each
/// window's top-left map coordinate so windows can be scattered back in any
/// processing order.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSet {
    pub window_size: usize,
    pub channels: usize,
    pub tokens: Vec<f64>,
    pub origins: Vec<(usize, usize)>,
}

impl WindowSet {
    pub fn n_win(&self) -> usize {
        self.origins.len()
    }

    /// Tokens of one window, `P^2 * channels` values.
    pub fn window(&self, idx: usize) -> &[f64] {
        let per = self.window_size * self.window_size * self.channels;
        &self.tokens[idx * per..(idx + 1) * per]
    }

    pub fn window_mut(&mut self, idx: usize) -> &mut [f64] {
        let per = self.window_size * self.window_size * self.channels;
        &mut self.tokens[idx * per..(idx + 1) * per]
    }

    /// A new set containing only the selected windows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> WindowSet {
        let per = self.window_size * self.window_size * self.channels;
        let mut tokens = Vec::with_capacity(indices.len() * per);
        let mut origins = Vec::with_capacity(indices.len());
        for &i in indices {
            tokens.extend_from_slice(self.window(i));
            origins.push(self.origins[i]);
        }
        WindowSet { window_size: self.window_size, channels: self.channels, tokens, origins }
    }
}

/// Tile a feature map into `P x P` windows in row-major window order.
pub fn partition(fm: &FeatureMap, window_size: usize) -> Result<WindowSet> {
    let p = window_size;
    if p == 0 {
        return Err(Error::Config("window size must be positive".into()));
    }
    if fm.height % p != 0 || fm.width % p != 0 {
        return Err(Error::Config(format!(
            "feature map {}x{} is not divisible by window size {p}",
            fm.height, fm.width
        )));
    }
    let (rows, cols, c) = (fm.height / p, fm.width / p, fm.channels);
    let per = p * p * c;
    let mut tokens = vec![0.0; rows * cols * per];
    let mut origins = Vec::with_capacity(rows * cols);
    for wr in 0..rows {
        for wc in 0..cols {
            let w = wr * cols + wc;
            origins.push((wr * p, wc * p));
            for i in 0..p {
                for j in 0..p {
                    let src = ((wr * p + i) * fm.width + (wc * p + j)) * c;
                    let dst = w * per + (i * p + j) * c;
                    tokens[dst..dst + c].copy_from_slice(&fm.data[src..src + c]);
                }
            }
        }
    }
    Ok(WindowSet { window_size: p, channels: c, tokens, origins })
}

/// Reassemble a feature map from windows by their recorded origins.
///
/// The windows must tile the `height x width` map exactly; any gap or
/// overlap means the set was corrupted and is reported as an internal error.
pub fn scatter(ws: &WindowSet, height: usize, width: usize) ->Result<FeatureMap> {
    let p = ws.window_size;
    let c = ws.channels;
    if height % p != 0 || width % p != 0 {
        return Err(Error::Config(format!(
            "target map {height}x{width} is not divisible by window size {p}"
        )));
    }
    let (rows, cols) = (height / p, width / p);
    let mut covered = vec![false; rows * cols];
    let mut data = vec![0.0; height * width * c];
    let per = p * p * c;
    for (w, &(or, oc)) in ws.origins.iter().enumerate() {
        if or % p != 0 || oc % p != 0 || or + p > height || oc + p > width {
            return Err(Error::Internal(format!(
                "window origin ({or}, {oc}) is not a valid {p}-aligned position in {height}x{width}"
            )));
        }
        let cell = (or / p) * cols + oc / p;
        if covered[cell] {
            return Err(Error::Internal(format!(
                "two windows claim the cell at origin ({or}, {oc})"
            )));
        }
        covered[cell] = true;
        for i in 0..p {
            for j in 0..p {
                let dst = ((or + i) * width + (oc + j)) * c;
                let src = w * per + (i * p + j) * c;
                data[dst..dst + c].copy_from_slice(&ws.tokens[src..src + c]);
            }
        }
    }
    if covered.iter().any(|&v| !v) {
        return Err(Error::Internal("window set leaves part of the map uncovered".into()));
    }
    FeatureMap::new(height, width, c, data)
}

/// Roll the map toroidally by `offset` in both axes: the patch at `(r, c)`
/// moves to `((r + offset) mod H, (c + offset) mod W)`. A negative offset
/// inverts a positive one of the same magnitude.
pub fn cyclic_shift(fm: &FeatureMap, offset: i64) -> FeatureMap {
    let (h, w, c) = (fm.height, fm.width, fm.channels);
    let mut data = vec![0.0; fm.data.len()];
    for r in 0..h {
        let nr = (r as i64 + offset).rem_euclid(h as i64) as usize;
        for col in 0..w {
            let nc = (col as i64 + offset).rem_euclid(w as i64) as usize;
            let src = (r * w + col) * c;
            let dst = (nr * w + nc) * c;
            data[dst..dst + c].copy_from_slice(&fm.data[src..src + c]);
        }
    }
    FeatureMap { height: h, width: w, channels: c, data }
}

/// Per-window importance: the L2 norm of each window's token values.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceScores {
    pub scores: Vec<f64>,
}

impl ImportanceScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if scores.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(Error::Config("importance scores must be finite and non-negative".into()));
        }
        Ok(Self { scores })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Score every window of a set by the L2 norm of its values.
pub fn importance_scores(ws: &WindowSet) -> ImportanceScores {
    let scores = (0..ws.n_win())
        .map(|i| ws.window(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    ImportanceScores { scores }
}

/// The split of window indices into execution branches. Each index appears in
/// exactly one of the three sets; sets are sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowAssignment {
    pub high: Vec<usize>,
    pub low: Vec<usize>,
    pub pruned: Vec<usize>,
}

impl WindowAssignment {
    /// Every window in the high branch; the trivial assignment.
    pub fn all_high(n_win: usize) -> Self {
        Self { high: (0..n_win).collect(), low: Vec::new(), pruned: Vec::new() }
    }
}

/// Grid tolerance absorbing float noise in `ratio * n_win` products so that
/// tenth-grid ratios yield exact counts.
const COUNT_NUDGE: f64 = 1e-9;

/// Split windows into branches by ranked importance.
///
/// Ranking is by score descending, ties broken by lower index ranking
/// higher; `reversed` inverts the whole ranking (worst-case selection). The
/// bottom `floor(p * n_win)` ranked windows are pruned, the next
/// `floor(r * n_win)` run low precision, and the rest run high precision —
/// so the high branch is never starved by rounding.
pub fn select_windows(
    scores: &ImportanceScores,
    r: f64,
    p: f64,
    reversed: bool,
) -> Result<WindowAssignment> {
    if !(0.0..=0.8 + COUNT_NUDGE).contains(&r) || !(0.0..=0.8 + COUNT_NUDGE).contains(&p) {
        return Err(Error::Config(format!(
            "ratios must lie in [0, 0.8]: got r = {r}, p = {p}"
        )));
    }
    if r + p > 1.0 + COUNT_NUDGE {
        return Err(Error::Config(format!(
            "combined low and pruned ratio must not exceed 1: got r = {r}, p = {p}"
        )));
    }
    let n = scores.len();
    if n == 0 {
        return Err(Error::Config("cannot select windows from an empty score vector".into()));
    }
    let n_pruned = (p * n as f64 + COUNT_NUDGE).floor() as usize;
    let n_low = (r * n as f64 + COUNT_NUDGE).floor() as usize;
    debug_assert!(n_pruned + n_low <= n);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        scores.scores[b]
            .partial_cmp(&scores.scores[a])
            .expect("scores are finite")
            .then(a.cmp(&b))
    });
    if reversed {
        order.reverse();
    }

    let cut_pruned = n - n_pruned;
    let cut_low = cut_pruned - n_low;
    let mut high = order[..cut_low].to_vec();
    let mut low = order[cut_low..cut_pruned].to_vec();
    let mut pruned = order[cut_pruned..].to_vec();
    high.sort_unstable();
    low.sort_unstable();
    pruned.sort_unstable();
    Ok(WindowAssignment { high, low, pruned })
}

/// Additive attention masks for the shifted-window arrangement.
///
/// After rolling the map up-left by `shift`, pixels from opposite map edges
/// share windows along the last window row and column; those cross-region
/// token pairs get [`MASK_NEG`] so attention cannot mix them. Returns one
/// `[P^2 x P^2]` mask per window, concatenated in row-major window order.
pub fn shift_attention_masks(height: usize, width: usize, window_size: usize, shift: usize) -> Vec<f64> {
    let p = window_size;
    let (rows, cols) = (height / p, width / p);
    // Region ids over the rolled map: 3 bands per axis (interior, wrapped
    // band before the shift line, wrapped band after it).
    let band = |coord: usize, extent: usize| -> usize {
        if coord < extent - p {
            0
        } else if coord < extent - shift {
            1
        } else {
            2
        }
    };
    let mut region = vec![0usize; height * width];
    for r in 0..height {
        for c in 0..width {
            region[r * width + c] = 3 * band(r, height) + band(c, width);
        }
    }
    let t = p * p;
    let mut masks = vec![0.0; rows * cols * t * t];
    for wr in 0..rows {
        for wc in 0..cols {
            let w = wr * cols + wc;
            for a in 0..t {
                let (ar, ac) = (wr * p + a / p, wc * p + a % p);
                for b in 0..t {
                    let (br, bc) = (wr * p + b / p, wc * p + b % p);
                    if region[ar * width + ac] != region[br * width + bc] {
                        masks[w * t * t + a * t + b] = MASK_NEG;
                    }
                }
            }
        }
    }
    masks
}
