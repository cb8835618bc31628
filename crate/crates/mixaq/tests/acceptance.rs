//! Acceptance suite: one test per release criterion, each printing an
//! `[acceptance] <name>: PASS` line on success (run with `-- --nocapture` to
//! see them). Every check is verified against an oracle computed inside this
//! file — direct arithmetic, brute-force enumeration, or an independently
//! assembled forward pass — never against the library's own formula.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use rand::Rng;

use mixaq::backbone::{ForwardOptions, Model, ModelSpec, QuantSettings, StageSpec};
use mixaq::block::{Branch, TwoBranchBlock};
use mixaq::cost::{
    equivalent_act_bits, pair_cost_fraction, total_bops, CostModel, Method, SWIN_TINY_FIXED_GMACS,
    SWIN_TINY_PAIR_GMACS,
};
use mixaq::numerics::FeatureMap;
use mixaq::quant::sqnr_db;
use mixaq::ratio::{CompressionConfig, ExecMode};
use mixaq::sampling::{
    lrm_round, sum_range_from_cost_targets, uniform_sum_sample, SamplerConfig,
};
use mixaq::search::{
    nsga2_search, CandidateEvaluator, Evaluator, InitSampler, ParetoPoint, SearchParams,
};
use mixaq::seeding::rng_from_seed;
use mixaq::windowing::{cyclic_shift, importance_scores, partition, select_windows};

// Tolerances and statistical thresholds, pinned here so a change is a visible
// diff of this file.
const TOL_EQUIVALENT_BITS: f64 = 1e-6;
const TOL_COST_LINEARITY: f64 = 1e-12;
const TOL_LRM_OPTIMALITY: f64 = 1e-9;
const SAMPLER_DRAWS: usize = 10_000;
const SAMPLER_BIN_SLACK: f64 = 0.20;
const MONOTONE_TRIALS: usize = 100;
const MONOTONE_MIN_PASSES: usize = 95;
const HYPERVOLUME_TRIALS: usize = 10;
const HYPERVOLUME_MIN_WINS: usize = 7;
const FRONT_MIN_SAVINGS_BINS: usize = 5;

fn pass(name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "{name} took {elapsed:?}, over its {budget:?} budget"
    );
    println!("[acceptance] {name}: PASS");
}

fn bitwise_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Two-stage toy spec: 8x8 map, window 2, one block pair per stage.
fn small_spec(seed: u64) -> ModelSpec {
    ModelSpec {
        stages: vec![
            StageSpec { n_block_pairs: 1, channels: 4, heads: 1 },
            StageSpec { n_block_pairs: 1, channels: 8, heads: 2 },
        ],
        window_size: 2,
        input_height: 8,
        input_width: 8,
        input_channels: 4,
        seed,
    }
}

/// Four-stage spec with six block pairs — the same pair layout the bundled
/// MAC tally describes, at toy width.
fn six_pair_spec(seed: u64) -> ModelSpec {
    ModelSpec {
        stages: vec![
            StageSpec { n_block_pairs: 1, channels: 8, heads: 1 },
            StageSpec { n_block_pairs: 1, channels: 16, heads: 2 },
            StageSpec { n_block_pairs: 3, channels: 32, heads: 4 },
            StageSpec { n_block_pairs: 1, channels: 64, heads: 8 },
        ],
        window_size: 2,
        input_height: 16,
        input_width: 16,
        input_channels: 8,
        seed,
    }
}

fn calibrated(spec: ModelSpec, quant: QuantSettings) -> Model {
    let mut model = Model::build(spec, quant).expect("model builds");
    model.calibrate_default().expect("calibration succeeds");
    model
}

fn final_sqnr(model: &Model, fm: &FeatureMap, config: &CompressionConfig, opts: ForwardOptions) -> f64 {
    let float = model.forward_float(fm).expect("float forward");
    let mixed = model.forward_mixed(fm, config, opts).expect("mixed forward");
    sqnr_db(&float.final_output().data, &mixed.final_output().data).expect("sqnr defined")
}

/// A map whose windows differ sharply in magnitude — loud content windows
/// next to near-silent ones, the way real images mix subjects and background.
/// Window scales are log-uniform over three and a half decades, aligned to
/// the stage-0 window grid so importance ranking has real structure to find.
fn structured_input(spec: &ModelSpec, seed: u64) -> FeatureMap {
    let (h, w, c) = (spec.input_height, spec.input_width, spec.input_channels);
    let p = spec.window_size;
    let mut fm = FeatureMap::seeded_gaussian(h, w, c, seed).unwrap();
    let mut rng = rng_from_seed(seed ^ 0x57AC);
    for wr in 0..h / p {
        for wc in 0..w / p {
            let scale = 10f64.powf(rng.gen_range(-3.5..0.0));
            for r in 0..p {
                for col in 0..p {
                    for ch in 0..c {
                        let (gr, gc) = (wr * p + r, wc * p + col);
                        fm.set(gr, gc, ch, fm.at(gr, gc, ch) * scale);
                    }
                }
            }
        }
    }
    fm
}

// --- 1 ------------------------------------------------------------------

#[test]
fn cost_constants_match_direct_arithmetic() {
    let t0 = Instant::now();
    let cm = CostModel::swin_tiny(4, 4).unwrap();

    // Zero config: every fraction is 1, so the weighted and plain tallies are
    // the same sum and the ratio must be exactly 1.
    let zero = CompressionConfig::zeros(6).unwrap();
    let bits = equivalent_act_bits(&cm, &zero, ExecMode::MixAq).unwrap();
    assert_eq!(bits, 4.0, "zero config must keep the base bit width exactly");

    // All-r=0.8 low-bit routing, against the formula evaluated longhand here.
    let gmacs = [13.3, 13.56, 14.16, 14.16, 14.16, 14.02];
    let fixed = 3.0;
    assert_eq!(gmacs, SWIN_TINY_PAIR_GMACS);
    assert_eq!(fixed, SWIN_TINY_FIXED_GMACS);
    let weighted: f64 = gmacs.iter().map(|g| 0.6 * g).sum::<f64>() + fixed;
    let total: f64 = gmacs.iter().sum::<f64>() + fixed;
    let oracle = 4.0 * weighted / total;
    assert!((oracle - 2.4556).abs() < 5e-5, "oracle sanity: {oracle}");

    let heavy = CompressionConfig::uniform(6, 0.8).unwrap();
    let bits = equivalent_act_bits(&cm, &heavy, ExecMode::MixAq).unwrap();
    assert!(
        (bits - oracle).abs() < TOL_EQUIVALENT_BITS,
        "equivalent bits {bits} vs direct arithmetic {oracle}"
    );

    // Ratio-sum range for relative-cost targets [0.65, 0.95] over six pairs.
    let range = sum_range_from_cost_targets(0.65, 0.95, 6).unwrap();
    assert_eq!(range, (0.6, 4.2));

    pass("cost_constants_match_direct_arithmetic", t0, Duration::from_secs(1));
}

// --- 2 ------------------------------------------------------------------

#[test]
fn bops_scale_linearly_with_bit_width() {
    let t0 = Instant::now();
    let cm = CostModel::swin_tiny(4, 4).unwrap();
    let mut rng = rng_from_seed(0xB095);

    // The BOPs tally and the equivalent-bit average fold the same per-pair
    // fractions, so relative cost must equal bits/base to within rounding.
    for _ in 0..1_000 {
        let r: Vec<u8> = (0..6).map(|_| rng.gen_range(0..=8u8)).collect();
        let p: Vec<u8> = r.iter().map(|&rt| rng.gen_range(0..=(8.min(10 - rt)))).collect();
        let config = CompressionConfig::from_tenths(r, p).unwrap();
        let report = total_bops(&cm, &config, ExecMode::MixAqPrune).unwrap();
        let bits = equivalent_act_bits(&cm, &config, ExecMode::MixAqPrune).unwrap();
        assert!(
            (report.relative_cost - bits / 4.0).abs() < TOL_COST_LINEARITY,
            "relative cost {} != bits/base {}",
            report.relative_cost,
            bits / 4.0
        );
    }

    // Dropping the uniform activation width from 4 to 3 bits must scale the
    // total by exactly 3/4 — bit width is a plain multiplicative factor.
    let zero = CompressionConfig::zeros(6).unwrap();
    let a4 = total_bops(&CostModel::swin_tiny(4, 4).unwrap(), &zero, ExecMode::MixAq).unwrap();
    let a3 = total_bops(&CostModel::swin_tiny(4, 3).unwrap(), &zero, ExecMode::MixAq).unwrap();
    assert_eq!(a3.total_bops / a4.total_bops, 0.75);

    pass("bops_scale_linearly_with_bit_width", t0, Duration::from_secs(1));
}

// --- 3 ------------------------------------------------------------------

#[test]
fn zero_config_matches_uniform_forward() {
    let t0 = Instant::now();

    // No routing requested: the mixed forward must be the uniform
    // high-precision forward, bit for bit, stage by stage.
    let model = calibrated(
        small_spec(11),
        QuantSettings { weight_bits: 4, act_high_bits: 4, act_low_bits: 2 },
    );
    let zero = CompressionConfig::zeros(2).unwrap();
    for i in 0..20 {
        let fm = model.eval_input(i).unwrap();
        let mixed = model.forward_mixed(&fm, &zero, ForwardOptions::default()).unwrap();
        let uniform = model.forward_uniform(&fm, Branch::High).unwrap();
        assert_eq!(mixed.stages.len(), uniform.stages.len());
        for (m, u) in mixed.stages.iter().zip(&uniform.stages) {
            assert!(
                bitwise_eq(&m.output.data, &u.output.data),
                "zero-config stage output drifted from the uniform forward on input {i}"
            );
        }
    }

    // Equal branch widths: routing moves windows between arithmetically
    // identical branches, so the output may not depend on r at all.
    let model = calibrated(
        small_spec(12),
        QuantSettings { weight_bits: 4, act_high_bits: 4, act_low_bits: 4 },
    );
    for i in 0..5 {
        let fm = model.eval_input(i).unwrap();
        let opts = ForwardOptions { mode: ExecMode::MixAq, reversed: false };
        let reference = model
            .forward_mixed(&fm, &CompressionConfig::zeros(2).unwrap(), opts)
            .unwrap();
        for r in [0.3, 0.8] {
            let routed = model
                .forward_mixed(&fm, &CompressionConfig::uniform(2, r).unwrap(), opts)
                .unwrap();
            assert!(
                bitwise_eq(&reference.final_output().data, &routed.final_output().data),
                "equal-width branches must make the output invariant to r={r} (input {i})"
            );
        }
    }

    pass("zero_config_matches_uniform_forward", t0, Duration::from_secs(10));
}

// --- 4 ------------------------------------------------------------------

#[test]
fn low_branch_matches_isolated_subset_run() {
    let t0 = Instant::now();

    for case in 0..20u64 {
        let model = calibrated(
            small_spec(200 + case),
            QuantSettings { weight_bits: 4, act_high_bits: 4, act_low_bits: 2 },
        );
        // Alternate between the unshifted and the shifted block of stage 0.
        let block: &TwoBranchBlock = &model.blocks(0)[(case % 2) as usize];
        let shift = TwoBranchBlock::effective_shift(8, 8, 2, case % 2 == 1) as i64;
        let fm = model.eval_input(case as usize).unwrap();

        let rolled_in = cyclic_shift(&fm, -shift);
        let windows_in = partition(&rolled_in, 2).unwrap();
        let scores = importance_scores(&windows_in);
        let assignment = select_windows(&scores, 0.6, 0.2, false).unwrap();
        assert!(!assignment.low.is_empty(), "case must exercise the low branch");

        let out = block.forward_assigned(&fm, &assignment).unwrap();
        let windows_out = partition(&cyclic_shift(&out, -shift), 2).unwrap();

        // Independent run: gather exactly the low-routed windows and push them
        // through the low branch alone, with no routing involved.
        let gathered = windows_in.subset(&assignment.low);
        let isolated = block.forward_windows(&gathered, Branch::Low).unwrap();
        for (j, &w) in assignment.low.iter().enumerate() {
            assert!(
                bitwise_eq(windows_out.window(w), isolated.window(j)),
                "low window {w} of case {case} diverged from the isolated run"
            );
        }
    }

    pass("low_branch_matches_isolated_subset_run", t0, Duration::from_secs(10));
}

// --- 5 ------------------------------------------------------------------

#[test]
fn pruned_windows_pass_through_unchanged() {
    let t0 = Instant::now();
    let model = calibrated(
        small_spec(33),
        QuantSettings { weight_bits: 4, act_high_bits: 4, act_low_bits: 2 },
    );
    let mut rng = rng_from_seed(0x9121);

    let mut checked = 0usize;
    for trial in 0..100u64 {
        let r = f64::from(rng.gen_range(0..=8u8)) / 10.0;
        let p_hi = ((10.0 - r * 10.0) as u8).min(8).max(1);
        let p = f64::from(rng.gen_range(1..=p_hi)) / 10.0;
        let block = &model.blocks(0)[(trial % 2) as usize];
        let shift = TwoBranchBlock::effective_shift(8, 8, 2, trial % 2 == 1) as i64;
        let fm = FeatureMap::seeded_gaussian(8, 8, 4, 1_000 + trial).unwrap();

        let rolled_in = cyclic_shift(&fm, -shift);
        let scores = importance_scores(&partition(&rolled_in, 2).unwrap());
        let assignment = select_windows(&scores, r, p, false).unwrap();

        let out = block.forward_assigned(&fm, &assignment).unwrap();
        let windows_in = partition(&rolled_in, 2).unwrap();
        let windows_out = partition(&cyclic_shift(&out, -shift), 2).unwrap();
        for &w in &assignment.pruned {
            assert!(
                bitwise_eq(windows_in.window(w), windows_out.window(w)),
                "pruned window {w} was modified (trial {trial}, r={r}, p={p})"
            );
            checked += 1;
        }
    }
    assert!(checked > 100, "trials must actually prune windows (saw {checked})");

    pass("pruned_windows_pass_through_unchanged", t0, Duration::from_secs(10));
}

// --- 6 ------------------------------------------------------------------

/// Brute-force apportionment: enumerate every way to round each entry to its
/// floor or ceiling with the required total, and return the smallest
/// total absolute deviation from the real-valued inputs.
fn best_apportionment_error(values: &[f64], target: i64) -> f64 {
    let n = values.len();
    let floors: Vec<i64> = values.iter().map(|v| v.floor() as i64).collect();
    let deficit = target - floors.iter().sum::<i64>();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as i64 != deficit {
            continue;
        }
        let cost: f64 = (0..n)
            .map(|i| {
                let k = floors[i] + i64::from(mask >> i & 1);
                (k as f64 - values[i]).abs()
            })
            .sum();
        best = best.min(cost);
    }
    best
}

#[test]
fn sampler_draws_honor_cap_grid_and_sum() {
    let t0 = Instant::now();
    let cfg = SamplerConfig::from_cost_targets(0.65, 0.95, 6).unwrap();
    assert_eq!((cfg.s_min, cfg.s_max), (0.6, 4.2));
    let mut rng = rng_from_seed(0x5A3D);

    // Sum grid runs over 6..=42 tenths: 37 reachable bins.
    let (k_min, k_max) = (6i64, 42i64);
    let mut bins = vec![0usize; (k_max - k_min + 1) as usize];
    for _ in 0..SAMPLER_DRAWS {
        let draw = uniform_sum_sample(&cfg, &mut rng).unwrap();
        assert_eq!(draw.len(), 6);
        let mut sum_tenths = 0i64;
        for &v in &draw {
            assert!(v <= 0.8 + 1e-12, "ratio {v} above the per-ratio cap");
            let tenths = v * 10.0;
            assert!(
                (tenths - tenths.round()).abs() < 1e-9 && (0.0..=8.0).contains(&tenths.round()),
                "ratio {v} off the tenths grid"
            );
            sum_tenths += tenths.round() as i64;
        }
        assert!((k_min..=k_max).contains(&sum_tenths), "sum {sum_tenths} out of range");
        bins[(sum_tenths - k_min) as usize] += 1;
    }
    let expected = SAMPLER_DRAWS as f64 / bins.len() as f64;
    for (i, &count) in bins.iter().enumerate() {
        assert!(
            (count as f64 - expected).abs() <= SAMPLER_BIN_SLACK * expected,
            "sum bin {} saw {count} draws, expected {expected:.1} +/- 20%",
            k_min + i as i64
        );
    }

    // Largest-remainder rounding against exhaustive floor/ceil enumeration.
    for _ in 0..1_000 {
        let n = rng.gen_range(2..=9usize);
        let target = rng.gen_range(1..=(n as i64) * 8);
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..6.0)).collect();
        let scale = target as f64 / raw.iter().sum::<f64>();
        let values: Vec<f64> = raw.iter().map(|v| v * scale).collect();

        let rounded = lrm_round(&values, target).unwrap();
        assert_eq!(rounded.iter().sum::<i64>(), target);
        let mut cost = 0.0;
        for (k, v) in rounded.iter().zip(&values) {
            assert!(
                *k == v.floor() as i64 || *k == v.floor() as i64 + 1,
                "rounded entry {k} not a floor/ceiling of {v}"
            );
            cost += (*k as f64 - v).abs();
        }
        let best = best_apportionment_error(&values, target);
        assert!(
            cost <= best + TOL_LRM_OPTIMALITY,
            "largest-remainder cost {cost} exceeds brute-force optimum {best}"
        );
    }

    pass("sampler_draws_honor_cap_grid_and_sum", t0, Duration::from_secs(30));
}

// --- 7 ------------------------------------------------------------------

#[test]
fn sqnr_improves_with_activation_bits() {
    let t0 = Instant::now();

    let mut monotone = 0usize;
    for trial in 0..MONOTONE_TRIALS as u64 {
        let mut chain = Vec::with_capacity(4);
        for bits in [2u8, 3, 4, 8] {
            // Float weights isolate the activation path; both branches share
            // the width under test.
            let model = calibrated(
                small_spec(500 + trial),
                QuantSettings { weight_bits: 32, act_high_bits: bits, act_low_bits: bits },
            );
            let mut acc = 0.0;
            for i in 0..2 {
                let fm = model.eval_input(i).unwrap();
                let float = model.forward_float(&fm).unwrap();
                let quant = model.forward_uniform(&fm, Branch::High).unwrap();
                acc += sqnr_db(&float.final_output().data, &quant.final_output().data).unwrap();
            }
            chain.push(acc / 2.0);
        }
        if chain.windows(2).all(|w| w[0] <= w[1]) {
            monotone += 1;
        }
    }
    assert!(
        monotone >= MONOTONE_MIN_PASSES,
        "final-output SQNR rose with activation bits in only {monotone}/{MONOTONE_TRIALS} trials"
    );

    pass("sqnr_improves_with_activation_bits", t0, Duration::from_secs(120));
}

// --- 8 ------------------------------------------------------------------

#[test]
fn mixed_precision_beats_pruning_at_matched_cost() {
    let t0 = Instant::now();

    // Routing 80% of windows to half-width costs the same as pruning 40%:
    // both leave a 0.6 work fraction per pair.
    let mixed_frac = pair_cost_fraction(0.8, 0.0, Method::MixAq).unwrap();
    let pruned_frac = pair_cost_fraction(0.4, 0.0, Method::Pruning).unwrap();
    assert_eq!(mixed_frac, pruned_frac);

    // An eight-bit high branch keeps the model in a regime where the
    // four-bit branch still carries most of a window's content; routing
    // everything through two bits instead saturates the comparison.
    let model = calibrated(
        six_pair_spec(77),
        QuantSettings { weight_bits: 4, act_high_bits: 8, act_low_bits: 4 },
    );
    let mixed_cfg = CompressionConfig::uniform(6, 0.8).unwrap();
    let pruned_cfg = CompressionConfig::uniform(6, 0.4).unwrap();

    let (mut mixed_sum, mut pruned_sum) = (0.0, 0.0);
    for i in 0..50 {
        let fm = model.eval_input(i).unwrap();
        mixed_sum += final_sqnr(
            &model,
            &fm,
            &mixed_cfg,
            ForwardOptions { mode: ExecMode::MixAq, reversed: false },
        );
        pruned_sum += final_sqnr(
            &model,
            &fm,
            &pruned_cfg,
            ForwardOptions { mode: ExecMode::Prune, reversed: false },
        );
    }
    let (mixed_mean, pruned_mean) = (mixed_sum / 50.0, pruned_sum / 50.0);
    assert!(
        mixed_mean > pruned_mean,
        "at a matched 0.6 cost fraction, low-bit routing ({mixed_mean:.2} dB) must beat \
         pruning ({pruned_mean:.2} dB)"
    );

    pass("mixed_precision_beats_pruning_at_matched_cost", t0, Duration::from_secs(120));
}

// --- 9 ------------------------------------------------------------------

/// A deterministic evaluator whose quality falls linearly with saving; every
/// config sits on the same trade-off line, so front spread is purely a
/// question of search diversity.
struct LinearTradeoff {
    n_pairs: usize,
}

impl Evaluator for LinearTradeoff {
    fn evaluate(&self, config: &CompressionConfig) -> mixaq::Result<ParetoPoint> {
        let budget: f64 = config.r_ratios().iter().sum::<f64>()
            + config.p_ratios().iter().sum::<f64>() / 2.0;
        let saving = budget / (2.0 * self.n_pairs as f64);
        Ok(ParetoPoint { config: config.clone(), saving, quality: 30.0 * (1.0 - saving) })
    }
}

fn assert_nondominated(front: &[ParetoPoint]) {
    for a in front {
        for b in front {
            let beats = b.saving >= a.saving
                && b.quality >= a.quality
                && (b.saving > a.saving || b.quality > a.quality);
            assert!(!beats, "front point ({}, {}) is dominated", a.saving, a.quality);
        }
    }
}

/// Area dominated by a front in (saving, quality) space relative to the
/// origin: the union of the origin-anchored rectangles each point spans.
/// Negative qualities contribute nothing. Sweeping saving descending, a point
/// adds area only where its quality tops everything wider than it.
fn hypervolume(front: &[ParetoPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> =
        front.iter().map(|p| (p.saving.max(0.0), p.quality.max(0.0))).collect();
    pts.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let (mut area, mut covered_q) = (0.0, 0.0);
    for (s, q) in pts {
        if q > covered_q {
            area += s * (q - covered_q);
            covered_q = q;
        }
    }
    area
}

#[test]
fn search_fronts_are_sound_and_well_spread() {
    let t0 = Instant::now();

    // Spread on the synthetic linear trade-off: the front must cover at least
    // five distinct 0.05-wide savings bins.
    let sampler = SamplerConfig::from_cost_targets(0.65, 0.95, 6).unwrap();
    let params = SearchParams::new(32, 10, 6, InitSampler::UniformSum(sampler));
    let evaluator = LinearTradeoff { n_pairs: 6 };
    let mut rng = rng_from_seed(0xF0CA);
    let outcome = nsga2_search(&evaluator, &params, &mut rng).unwrap();
    assert_nondominated(&outcome.front);
    let bins: BTreeSet<i64> =
        outcome.front.iter().map(|p| (p.saving * 20.0).floor() as i64).collect();
    assert!(
        bins.len() >= FRONT_MIN_SAVINGS_BINS,
        "front covers only {} savings bins: {bins:?}",
        bins.len()
    );

    // Initialization comparison on a real model: independent per-gene draws
    // concentrate their ratio sum around its mean over six genes, while
    // sum-stratified draws cover the whole cost axis, so after only two
    // generations the stratified run should dominate at least as much area.
    let mut wins = 0usize;
    for trial in 0..HYPERVOLUME_TRIALS as u64 {
        let model = calibrated(
            six_pair_spec(900 + trial),
            QuantSettings { weight_bits: 4, act_high_bits: 8, act_low_bits: 4 },
        );
        let cost = CostModel::analytic(model.spec(), model.quant_settings()).unwrap();
        let evaluator =
            CandidateEvaluator::new(model, cost, ExecMode::MixAq, false, 2).unwrap();

        let mut run = |init: InitSampler| {
            let params = SearchParams::new(8, 2, 6, init);
            let mut rng = rng_from_seed(7_000 + trial);
            nsga2_search(&evaluator, &params, &mut rng).unwrap()
        };
        let stratified = run(InitSampler::UniformSum(
            SamplerConfig::from_cost_targets(0.65, 0.95, 6).unwrap(),
        ));
        let naive = run(InitSampler::Naive);
        assert_nondominated(&stratified.front);
        assert_nondominated(&naive.front);
        if hypervolume(&stratified.front) >= hypervolume(&naive.front) {
            wins += 1;
        }
    }
    assert!(
        wins >= HYPERVOLUME_MIN_WINS,
        "sum-stratified init won the dominated-area comparison in only \
         {wins}/{HYPERVOLUME_TRIALS} trials"
    );

    pass("search_fronts_are_sound_and_well_spread", t0, Duration::from_secs(300));
}

// --- 10 -----------------------------------------------------------------

#[test]
fn reversed_selection_hurts_pruning_more() {
    let t0 = Instant::now();

    // Importance order only matters when windows differ in how much they
    // carry, so the inputs mix loud and near-silent windows. Selecting
    // backwards then sacrifices exactly the windows with content. Each mode's
    // degradation fraction is computed from its mean quality over all seeds,
    // the way an aggregate benchmark metric would be.
    let config = CompressionConfig::uniform(6, 0.4).unwrap();
    let (mut mixed_n, mut mixed_r, mut pruned_n, mut pruned_r) = (0.0, 0.0, 0.0, 0.0);
    for seed in 0..50u64 {
        let model = calibrated(
            six_pair_spec(3_000 + seed),
            QuantSettings { weight_bits: 4, act_high_bits: 8, act_low_bits: 4 },
        );
        let fm = structured_input(model.spec(), 4_000 + seed);

        let mut q = |mode: ExecMode, reversed: bool| {
            final_sqnr(&model, &fm, &config, ForwardOptions { mode, reversed })
        };
        mixed_n += q(ExecMode::MixAq, false);
        mixed_r += q(ExecMode::MixAq, true);
        pruned_n += q(ExecMode::Prune, false);
        pruned_r += q(ExecMode::Prune, true);
    }
    assert!(pruned_n > 0.0 && mixed_n > 0.0, "mean baselines must be positive");
    let mixed_frac = (mixed_n - mixed_r) / mixed_n;
    let pruned_frac = (pruned_n - pruned_r) / pruned_n;
    assert!(
        pruned_frac > 0.0,
        "selecting windows backwards must hurt pruning (saw {pruned_frac:.3})"
    );
    assert!(
        mixed_frac < pruned_frac,
        "flipping the importance ranking degraded low-bit routing by {mixed_frac:.3} \
         but pruning by {pruned_frac:.3}; routing must be the more robust mechanism"
    );

    pass("reversed_selection_hurts_pruning_more", t0, Duration::from_secs(120));
}
