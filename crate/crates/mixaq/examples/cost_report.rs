//! The cost side of the trade-off: equivalent activation bits, total BOPs,
//! and speedup for a sweep of compression configs, costed against the bundled
//! six-pair MAC tally.

use mixaq::cost::{equivalent_act_bits, total_bops, CostModel};
use mixaq::ratio::{CompressionConfig, ExecMode};

fn main() -> mixaq::Result<()> {
    let cm = CostModel::swin_tiny(4, 4)?;

    println!(
        "{:>8}  {:>10}  {:>12}  {:>10}  {:>8}",
        "r", "eq bits", "BOPs", "rel cost", "speedup"
    );
    for r in [0.0, 0.2, 0.4, 0.6, 0.8] {
        let config = CompressionConfig::uniform(6, r)?;
        let report = total_bops(&cm, &config, ExecMode::MixAq)?;
        let bits = equivalent_act_bits(&cm, &config, ExecMode::MixAq)?;
        println!(
            "{r:>8.1}  {bits:>10.4}  {:>12.4e}  {:>10.4}  {:>8.3}",
            report.total_bops,
            report.relative_cost,
            1.0 / report.relative_cost
        );
    }

    // Pruning the same fraction saves twice as much work per window, so a
    // matched budget pairs r with r/2 pruned.
    let mixed = total_bops(&cm, &CompressionConfig::uniform(6, 0.8)?, ExecMode::MixAq)?;
    let pruned = total_bops(&cm, &CompressionConfig::uniform(6, 0.4)?, ExecMode::Prune)?;
    println!(
        "\nmatched budgets: routing 80% low ({:.4}) == pruning 40% ({:.4})",
        mixed.relative_cost, pruned.relative_cost
    );
    Ok(())
}
