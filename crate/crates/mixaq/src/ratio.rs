//! Per-pair compression configurations on the tenths grid, and the execution
//! modes that interpret them.
//!
//! A [`CompressionConfig`] holds one compression ratio `r` and one pruning
//! ratio `p` per block pair. Both live on the discrete grid
//! `{0.0, 0.1, ..., 0.8}`; storing them as integer tenths keeps grid
//! arithmetic (sums, comparisons, search mutations) exact.

use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest ratio on the grid, in tenths (0.8).
pub const MAX_TENTHS: u8 = 8;

/// Tolerance when snapping incoming float ratios onto the tenths grid.
const GRID_TOL: f64 = 1e-9;

/// Per-block-pair compression ratios `r` and pruning ratios `p`, both on the
/// `{0.0, 0.1, ..., 0.8}` grid with `r_i + p_i <= 1` per pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CompressionConfig {
    r_tenths: Vec<u8>,
    p_tenths: Vec<u8>,
}

impl CompressionConfig {
    /// Build from integer tenths (`3` means a ratio of `0.3`).
    pub fn from_tenths(r_tenths: Vec<u8>, p_tenths: Vec<u8>) -> Result<Self> {
        if r_tenths.len() != p_tenths.len() {
            return Err(Error::Config(format!(
                "compression and pruning vectors differ in length: {} vs {}",
                r_tenths.len(),
                p_tenths.len()
            )));
        }
        if r_tenths.is_empty() {
            return Err(Error::Config("compression config must cover at least one pair".into()));
        }
        for (i, (&r, &p)) in r_tenths.iter().zip(&p_tenths).enumerate() {
            if r > MAX_TENTHS || p > MAX_TENTHS {
                return Err(Error::Config(format!(
                    "pair {i}: ratios must lie on the 0.0..0.8 grid, got r = {}, p = {}",
                    r as f64 / 10.0,
                    p as f64 / 10.0
                )));
            }
            if r + p > 10 {
                return Err(Error::Config(format!(
                    "pair {i}: r + p must not exceed 1, got {}",
                    (r + p) as f64 / 10.0
                )));
            }
        }
        Ok(Self { r_tenths, p_tenths })
    }

    /// Build from float ratios; each must sit on the tenths grid.
    pub fn from_ratios(r: &[f64], p: &[f64]) -> Result<Self> {
        let snap = |v: f64, what: &str, i: usize| -> Result<u8> {
            let t = v * 10.0;
            let k = t.round();
            if !v.is_finite() || (t - k).abs() > GRID_TOL * 10.0 || !(0.0..=MAX_TENTHS as f64).contains(&k) {
                return Err(Error::Config(format!(
                    "pair {i}: {what} ratio {v} is not on the grid {{0.0, 0.1, ..., 0.8}}"
                )));
            }
            Ok(k as u8)
        };
        let r_tenths = r
            .iter()
            .enumerate()
            .map(|(i, &v)| snap(v, "compression", i))
            .collect::<Result<Vec<u8>>>()?;
        let p_tenths = p
            .iter()
            .enumerate()
            .map(|(i, &v)| snap(v, "pruning", i))
            .collect::<Result<Vec<u8>>>()?;
        Self::from_tenths(r_tenths, p_tenths)
    }

    /// The all-zero config for `n` pairs (no compression, no pruning).
    pub fn zeros(n: usize) -> Result<Self> {
        Self::from_tenths(vec![0; n], vec![0; n])
    }

    /// Same compression ratio for every pair, no pruning.
    pub fn uniform(n: usize, r: f64) -> Result<Self> {
        Self::from_ratios(&vec![r; n], &vec![0.0; n])
    }

    /// Number of block pairs covered.
    pub fn len(&self) -> usize {
        self.r_tenths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_tenths.is_empty()
    }

    /// Compression ratio of pair `i`.
    pub fn r(&self, i: usize) -> f64 {
        self.r_tenths[i] as f64 / 10.0
    }

    /// Pruning ratio of pair `i`.
    pub fn p(&self, i: usize) -> f64 {
        self.p_tenths[i] as f64 / 10.0
    }

    pub fn r_tenths(&self) -> &[u8] {
        &self.r_tenths
    }

    pub fn p_tenths(&self) -> &[u8] {
        &self.p_tenths
    }

    pub fn r_ratios(&self) -> Vec<f64> {
        self.r_tenths.iter().map(|&t| t as f64 / 10.0).collect()
    }

    pub fn p_ratios(&self) -> Vec<f64> {
        self.p_tenths.iter().map(|&t| t as f64 / 10.0).collect()
    }

    /// True if any pair carries a nonzero pruning ratio.
    pub fn has_pruning(&self) -> bool {
        self.p_tenths.iter().any(|&p| p > 0)
    }

    /// Sum of compression ratios in tenths (exact grid arithmetic).
    pub fn r_sum_tenths(&self) -> u32 {
        self.r_tenths.iter().map(|&t| t as u32).sum()
    }
}

impl Serialize for CompressionConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            r: Vec<f64>,
            p: Vec<f64>,
        }
        Wire { r: self.r_ratios(), p: self.p_ratios() }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CompressionConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Wire {
            r: Vec<f64>,
            #[serde(default)]
            p: Option<Vec<f64>>,
        }
        let wire = Wire::deserialize(deserializer)?;
        let p = wire.p.unwrap_or_else(|| vec![0.0; wire.r.len()]);
        CompressionConfig::from_ratios(&wire.r, &p).map_err(D::Error::custom)
    }
}

/// How a config's ratio vector is interpreted at execution time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecMode {
    /// `r` routes windows to the low-precision branch; `p` is ignored.
    #[serde(rename = "mixaq")]
    MixAq,
    /// `r` prunes windows outright (no low-precision branch); `p` is ignored.
    #[serde(rename = "prune")]
    Prune,
    /// `r` compresses and `p` prunes, per pair.
    #[serde(rename = "mixaq+prune")]
    MixAqPrune,
}

impl ExecMode {
    /// Map a pair's stored `(r, p)` to the effective
    /// `(low-precision ratio, pruned ratio)` used by the forward pass.
    pub fn effective(self, r: f64, p: f64) -> (f64, f64) {
        match self {
            ExecMode::MixAq => (r, 0.0),
            ExecMode::Prune => (0.0, r),
            ExecMode::MixAqPrune => (r, p),
        }
    }
}

impl std::str::FromStr for ExecMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mixaq" => Ok(ExecMode::MixAq),
            "prune" => Ok(ExecMode::Prune),
            "mixaq+prune" => Ok(ExecMode::MixAqPrune),
            other => Err(Error::Config(format!(
                "unknown mode '{other}' (expected mixaq, prune, or mixaq+prune)"
            ))),
        }
    }
}

impl std::fmt::Display for ExecMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ExecMode::MixAq => "mixaq",
            ExecMode::Prune => "prune",
            ExecMode::MixAqPrune => "mixaq+prune",
        })
    }
}
