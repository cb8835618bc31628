//! Where training-time ratio draws land: the sum-stratified sampler spreads
//! configurations evenly across the cost range, while independent per-ratio
//! draws pile up around their mean. Both histograms, side by side.

use mixaq::sampling::{naive_uniform_sample, uniform_sum_sample, SamplerConfig};
use mixaq::seeding::rng_from_seed;

fn histogram(sums: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<usize> {
    let mut counts = vec![0usize; bins];
    for &s in sums {
        let t = ((s - lo) / (hi - lo) * bins as f64).floor() as isize;
        let idx = t.clamp(0, bins as isize - 1) as usize;
        counts[idx] += 1;
    }
    counts
}

fn bar(count: usize, scale: f64) -> String {
    "#".repeat((count as f64 * scale).round() as usize)
}

fn main() -> mixaq::Result<()> {
    const DRAWS: usize = 2_000;
    let cfg = SamplerConfig::from_cost_targets(0.65, 0.95, 6)?;
    println!(
        "6 ratios on the tenths grid, per-ratio cap {}, sum range [{}, {}]\n",
        cfg.upper, cfg.s_min, cfg.s_max
    );

    let mut rng = rng_from_seed(2024);
    let stratified: Vec<f64> = (0..DRAWS)
        .map(|_| Ok(uniform_sum_sample(&cfg, &mut rng)?.iter().sum()))
        .collect::<mixaq::Result<_>>()?;
    let naive: Vec<f64> =
        (0..DRAWS).map(|_| naive_uniform_sample(6, &mut rng).iter().sum()).collect();

    let bins = 12;
    let (lo, hi) = (0.0, 4.8);
    let hs = histogram(&stratified, lo, hi, bins);
    let hn = histogram(&naive, lo, hi, bins);
    println!("{:>11}  {:<28} {:<28}", "ratio sum", "sum-stratified", "independent");
    for b in 0..bins {
        let left = lo + (hi - lo) * b as f64 / bins as f64;
        println!(
            "{:>4.1}..{:<4.1}  {:<28} {:<28}",
            left,
            left + (hi - lo) / bins as f64,
            bar(hs[b], 0.1),
            bar(hn[b], 0.1)
        );
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "\nmean sum: {:.2} (stratified) vs {:.2} (independent); every draw stays on the grid",
        mean(&stratified),
        mean(&naive)
    );
    Ok(())
}
