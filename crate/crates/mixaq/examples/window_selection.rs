//! Window partitioning and importance-driven branch assignment: slice a
//! feature map into attention windows, score each by its L2 norm, and split
//! them into high-precision, low-precision, and pruned sets.

use mixaq::numerics::FeatureMap;
use mixaq::windowing::{importance_scores, partition, select_windows};

fn main() -> mixaq::Result<()> {
    // An 8x8 map of 4-channel patches makes sixteen 2x2 windows.
    let fm = FeatureMap::seeded_gaussian(8, 8, 4, 7)?;
    let windows = partition(&fm, 2)?;
    let scores = importance_scores(&windows);

    println!("window scores (grid order):");
    for row in 0..4 {
        let line: Vec<String> =
            (0..4).map(|col| format!("{:6.2}", scores.scores[row * 4 + col])).collect();
        println!("  {}", line.join(" "));
    }

    // Route 40% of windows to the low branch and prune the bottom 20%.
    let assignment = select_windows(&scores, 0.4, 0.2, false)?;
    println!("\nr = 0.4, p = 0.2 over {} windows:", windows.n_win());
    println!("  high   {:?}", assignment.high);
    println!("  low    {:?}", assignment.low);
    println!("  pruned {:?}", assignment.pruned);

    // Reversing the ranking sends the heaviest windows down instead — the
    // worst-case selection used for robustness studies.
    let reversed = select_windows(&scores, 0.4, 0.2, true)?;
    println!("\nsame ratios, reversed ranking:");
    println!("  high   {:?}", reversed.high);
    println!("  low    {:?}", reversed.low);
    println!("  pruned {:?}", reversed.pruned);

    let top = assignment.high.iter().map(|&w| scores.scores[w]).fold(0.0, f64::max);
    let kept = reversed.high.iter().map(|&w| scores.scores[w]).fold(0.0, f64::max);
    println!("\nstrongest window kept high: {top:.2} (normal) vs {kept:.2} (reversed)");
    Ok(())
}
