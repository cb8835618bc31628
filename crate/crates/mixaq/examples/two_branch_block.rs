//! One mixed-precision block forward, taken apart: the same window set runs
//! once with everything in the high branch and once with an importance-based
//! split, and pruned windows are shown to pass through untouched.

use mixaq::backbone::{Model, ModelSpec, QuantSettings, StageSpec};
use mixaq::block::Branch;
use mixaq::quant::sqnr_db;
use mixaq::windowing::{importance_scores, partition, select_windows};

fn main() -> mixaq::Result<()> {
    // A one-stage model is the cheapest way to get a calibrated block.
    let spec = ModelSpec {
        stages: vec![StageSpec { n_block_pairs: 1, channels: 4, heads: 1 }],
        window_size: 2,
        input_height: 8,
        input_width: 8,
        input_channels: 4,
        seed: 3,
    };
    let mut model = Model::build(spec, QuantSettings {
        weight_bits: 4,
        act_high_bits: 8,
        act_low_bits: 4,
    })?;
    model.calibrate_default()?;

    let block = &model.blocks(0)[0]; // unshifted, so windows align with the input grid
    let fm = model.eval_input(0)?;
    let scores = importance_scores(&partition(&fm, 2)?);
    let assignment = select_windows(&scores, 0.4, 0.2, false)?;
    println!(
        "16 windows split into {} high / {} low / {} pruned",
        assignment.high.len(),
        assignment.low.len(),
        assignment.pruned.len()
    );

    let all_high = block.forward_all(&fm, Branch::High)?;
    let mixed = block.forward_assigned(&fm, &assignment)?;
    println!(
        "mixed output vs all-high output: {:.2} dB",
        sqnr_db(&all_high.data, &mixed.data)?
    );

    // Pruned windows are identity-forwarded: their tokens never change.
    let before = partition(&fm, 2)?;
    let after = partition(&mixed, 2)?;
    for &w in &assignment.pruned {
        assert_eq!(before.window(w), after.window(w));
    }
    println!("pruned windows {:?} pass through bit-exact", assignment.pruned);

    // The low branch is just the block run at its lower width: gathering the
    // low windows and running them alone reproduces the mixed output there.
    let isolated = block.forward_windows(&before.subset(&assignment.low), Branch::Low)?;
    for (j, &w) in assignment.low.iter().enumerate() {
        assert_eq!(after.window(w), isolated.window(j));
    }
    println!("low windows {:?} match an isolated low-branch run", assignment.low);
    Ok(())
}
