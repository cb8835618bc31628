//! Ratio-vector samplers on the tenths grid.
//!
//! The uniform-sum sampler draws a total budget `S` uniformly over an integer
//! tenths range, spreads it across pairs with a Dirichlet draw, rejects
//! spreads that push any single ratio past the per-ratio cap, and rounds to
//! the grid with the largest-remainder method so the rounded ratios still sum
//! to exactly `S`. The naive sampler draws each ratio independently, which
//! concentrates the total near its mean — the uniform-sum sampler exists to
//! cover cheap and expensive configurations evenly instead.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Gamma};

/// Parameters of the uniform-sum sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Number of ratios per draw (one per block pair).
    pub n: usize,
    /// Smallest ratio sum, inclusive (tenths grid).
    pub s_min: f64,
    /// Largest ratio sum, inclusive (tenths grid).
    pub s_max: f64,
    /// Per-ratio cap (default 0.8).
    pub upper: f64,
    /// Dirichlet concentration (default 1.0 — uniform on the simplex).
    pub alpha: f64,
    /// Rejection budget before a draw is declared infeasible.
    pub max_rejects: usize,
}

impl SamplerConfig {
    pub fn new(n: usize, s_min: f64, s_max: f64) -> Self {
        // The budget must absorb the worst feasible case: near the top of
        // the sum range the per-ratio cap accepts only ~1 in 10^4 spreads,
        // so a small budget would make legal draws fail spuriously.
        Self { n, s_min, s_max, upper: 0.8, alpha: 1.0, max_rejects: 1_000_000 }
    }

    /// Derive the sum range from relative-cost targets, then build a config.
    pub fn from_cost_targets(cost_lo: f64, cost_hi: f64, n: usize) -> Result<Self> {
        let (s_min, s_max) = sum_range_from_cost_targets(cost_lo, cost_hi, n)?;
        Ok(Self::new(n, s_min, s_max))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("sampler needs at least one ratio per draw".into()));
        }
        if !(self.upper > 0.0 && self.upper < 1.0) {
            return Err(Error::Config(format!("per-ratio cap {} must lie in (0, 1)", self.upper)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("Dirichlet concentration {} must be positive", self.alpha)));
        }
        if self.max_rejects == 0 {
            return Err(Error::Config("rejection budget must be positive".into()));
        }
        if !self.s_min.is_finite() || !self.s_max.is_finite() || self.s_min < 0.0 || self.s_min > self.s_max
        {
            return Err(Error::Config(format!(
                "sum range [{}, {}] must satisfy 0 <= s_min <= s_max",
                self.s_min, self.s_max
            )));
        }
        let cap = (self.upper * 10.0).round() as i64;
        let k_max = (self.s_max * 10.0).round() as i64;
        if k_max > self.n as i64 * cap {
            return Err(Error::Config(format!(
                "sum bound {} is unreachable with {} ratios capped at {}",
                self.s_max, self.n, self.upper
            )));
        }
        Ok(())
    }
}

/// Align a value to the tenths grid (the sampler's native resolution).
fn snap_tenths(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

/// Sum range `(s_min, s_max) = ((1-cost_hi)·n·2, (1-cost_lo)·n·2)` for
/// relative-cost targets `[cost_lo, cost_hi]`: a pair at ratio `r` keeps a
/// `1 - r/2` cost fraction, so a cost target `c` corresponds to a ratio sum
/// of `(1-c)·n·2`. Results are aligned to the tenths grid.
pub fn sum_range_from_cost_targets(cost_lo: f64, cost_hi: f64, n: usize) -> Result<(f64, f64)> {
    if !(cost_lo > 0.0 && cost_lo <= cost_hi && cost_hi <= 1.0) {
        return Err(Error::Config(format!(
            "cost targets must satisfy 0 < lo <= hi <= 1, got [{cost_lo}, {cost_hi}]"
        )));
    }
    let s_min = snap_tenths((1.0 - cost_hi) * n as f64 * 2.0);
    let s_max = snap_tenths((1.0 - cost_lo) * n as f64 * 2.0);
    Ok((s_min, s_max))
}

/// A point from `Dirichlet(alpha · 1ₙ)`: non-negative components summing
/// to 1. With `alpha = 1` this normalizes unit-rate exponential draws (the
/// uniform distribution on the simplex); other concentrations normalize
/// `Gamma(alpha, 1)` draws.
pub fn dirichlet<R: Rng>(n: usize, alpha: f64, rng: &mut R) -> Result<Vec<f64>> {
    for _ in 0..100 {
        let draws: Vec<f64> = if alpha == 1.0 {
            (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect()
        } else {
            let gamma = Gamma::new(alpha, 1.0)
                .map_err(|e| Error::Config(format!("invalid Dirichlet concentration: {e}")))?;
            (0..n).map(|_| gamma.sample(rng)).collect()
        };
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            return Ok(draws.into_iter().map(|v| v / sum).collect());
        }
    }
    Err(Error::Internal("simplex sampling kept producing degenerate draws".into()))
}

/// Round non-negative values to integers summing exactly to `target`:
/// floor everything, then hand the residual out one by one to the largest
/// fractional remainders (ties to the lower index).
pub fn lrm_round(values: &[f64], target: i64) -> Result<Vec<i64>> {
    if values.iter().any(|&v| !v.is_finite() || v < 0.0) {
        return Err(Error::Sampling("rounding input must be finite and non-negative".into()));
    }
    if target < 0 {
        return Err(Error::Sampling(format!("rounding target {target} must be non-negative")));
    }
    let sum: f64 = values.iter().sum();
    if (sum - target as f64).abs() > 1e-6 {
        return Err(Error::Sampling(format!(
            "values sum to {sum}, not within 1e-6 of target {target}"
        )));
    }
    let floors: Vec<i64> = values.iter().map(|&v| v.floor() as i64).collect();
    let diff = target - floors.iter().sum::<i64>();
    if diff < 0 || diff as usize > values.len() {
        return Err(Error::Internal(format!(
            "largest-remainder residual {diff} outside 0..={}",
            values.len()
        )));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = values[a] - floors[a] as f64;
        let rb = values[b] - floors[b] as f64;
        rb.partial_cmp(&ra).expect("remainders are finite").then(a.cmp(&b))
    });
    let mut out = floors;
    for &i in order.iter().take(diff as usize) {
        out[i] += 1;
    }
    Ok(out)
}

/// One uniform-sum draw: ratios on the tenths grid, each at most
/// `cfg.upper`, whose tenths sum exactly equals a budget drawn uniformly
/// from the configured integer range.
///
/// The budget is drawn once; only the Dirichlet spread is redrawn on
/// rejection, so the budget distribution stays uniform.
pub fn uniform_sum_sample<R: Rng>(cfg: &SamplerConfig, rng: &mut R) -> Result<Vec<f64>> {
    cfg.validate()?;
    let k_min = (cfg.s_min * 10.0).round() as i64;
    let k_max = (cfg.s_max * 10.0).round() as i64;
    let cap = (cfg.upper * 10.0).round() as i64;
    let s = if k_min == k_max { k_min } else { rng.gen_range(k_min..=k_max) };
    for _ in 0..cfg.max_rejects {
        let spread = dirichlet(cfg.n, cfg.alpha, rng)?;
        let scaled: Vec<f64> = spread.iter().map(|v| v * s as f64).collect();
        if scaled.iter().any(|&v| v > cap as f64) {
            continue;
        }
        let tenths = lrm_round(&scaled, s)?;
        debug_assert!(tenths.iter().all(|&k| (0..=cap).contains(&k)));
        debug_assert_eq!(tenths.iter().sum::<i64>(), s);
        return Ok(tenths.into_iter().map(|k| k as f64 / 10.0).collect());
    }
    Err(Error::Sampling(format!(
        "no spread satisfied the per-ratio cap within {} attempts (sum {}, cap {})",
        cfg.max_rejects,
        s as f64 / 10.0,
        cfg.upper
    )))
}

/// The naive baseline: each ratio drawn independently and uniformly from
/// `{0.0, 0.1, ..., 0.8}`.
pub fn naive_uniform_sample<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0..=8u8) as f64 / 10.0).collect()
}
