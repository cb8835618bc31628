//! Per-stage quality of a compressed backbone: run the same input through the
//! float twin, the uniform quantized forward, and a few compression configs,
//! and print how SQNR decays stage by stage and ratio by ratio.

use mixaq::backbone::{ForwardOptions, Model, ModelSpec, QuantSettings, StageSpec};
use mixaq::quant::sqnr_db;
use mixaq::ratio::{CompressionConfig, ExecMode};

fn main() -> mixaq::Result<()> {
    let spec = ModelSpec {
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
        seed: 1,
    };
    let n_pairs = spec.n_pairs();
    let mut model = Model::build(spec, QuantSettings {
        weight_bits: 4,
        act_high_bits: 8,
        act_low_bits: 4,
    })?;
    model.calibrate_default()?;

    let fm = model.eval_input(0)?;
    let float = model.forward_float(&fm)?;

    println!("{:>8}  {:>8}  {:>8}  {:>8}  {:>8}", "r", "stage 0", "stage 1", "stage 2", "stage 3");
    for r in [0.0, 0.2, 0.4, 0.6, 0.8] {
        let config = CompressionConfig::uniform(n_pairs, r)?;
        let opts = ForwardOptions { mode: ExecMode::MixAq, reversed: false };
        let mixed = model.forward_mixed(&fm, &config, opts)?;
        let mut cells = Vec::new();
        for (f, m) in float.stages.iter().zip(&mixed.stages) {
            cells.push(format!("{:>8.2}", sqnr_db(&f.output.data, &m.output.data)?));
        }
        println!("{r:>8.1}  {}", cells.join("  "));
    }

    println!("\nrows: uniform low-bit routing ratio; columns: SQNR dB after each stage");
    Ok(())
}
