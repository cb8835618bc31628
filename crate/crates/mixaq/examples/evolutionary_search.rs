//! A complete search run at toy scale: evolve per-pair compression ratios on
//! a small calibrated backbone and print the Pareto front of computational
//! saving against output quality.

use mixaq::backbone::{Model, ModelSpec, QuantSettings, StageSpec};
use mixaq::cost::CostModel;
use mixaq::ratio::ExecMode;
use mixaq::sampling::SamplerConfig;
use mixaq::search::{nsga2_search, CandidateEvaluator, InitSampler, SearchParams};
use mixaq::seeding::rng_from_seed;

fn main() -> mixaq::Result<()> {
    let spec = ModelSpec {
        stages: vec![
            StageSpec { n_block_pairs: 1, channels: 4, heads: 1 },
            StageSpec { n_block_pairs: 1, channels: 8, heads: 2 },
        ],
        window_size: 2,
        input_height: 8,
        input_width: 8,
        input_channels: 4,
        seed: 15,
    };
    let quant = QuantSettings { weight_bits: 4, act_high_bits: 8, act_low_bits: 4 };
    let cost = CostModel::analytic(&spec, &quant)?;
    let mut model = Model::build(spec, quant)?;
    model.calibrate_default()?;

    let evaluator = CandidateEvaluator::new(model, cost, ExecMode::MixAq, false, 4)?;
    let sampler = SamplerConfig::from_cost_targets(0.65, 0.95, 2)?;
    let mut params = SearchParams::new(16, 8, 2, InitSampler::UniformSum(sampler));
    params.keep_snapshots = true;

    let mut rng = rng_from_seed(99);
    let outcome = nsga2_search(&evaluator, &params, &mut rng)?;

    println!(
        "evaluated {} distinct configs over {} snapshots\n",
        outcome.evaluations,
        outcome.snapshots.len()
    );
    println!("{:>8}  {:>10}  {:>18}", "saving", "SQNR dB", "ratios");
    for point in &outcome.front {
        println!(
            "{:>8.4}  {:>10.2}  {:>18}",
            point.saving,
            point.quality,
            format!("{:?}", point.config.r_ratios())
        );
    }

    let first = outcome.snapshots.first().expect("snapshots recorded");
    let best0 = first.iter().map(|p| p.saving).fold(0.0, f64::max);
    let best = outcome.front.iter().map(|p| p.saving).fold(0.0, f64::max);
    println!("\nbest saving: {best0:.4} at init -> {best:.4} after evolution");
    Ok(())
}
