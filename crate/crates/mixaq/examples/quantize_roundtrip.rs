//! Fake quantization in one screen: calibrate a quantizer on a tensor,
//! round-trip the values through each supported bit width, and watch the
//! reconstruction error fall as the grid refines.

use mixaq::quant::{calibrate_minmax, fake_quantize, sqnr_db};
use mixaq::seeding::rng_from_seed;
use rand::Rng;

fn main() -> mixaq::Result<()> {
    let mut rng = rng_from_seed(42);
    let samples: Vec<f64> = (0..4096).map(|_| rng.gen_range(-1.3..2.1)).collect();

    println!("{:>5}  {:>12}  {:>8}  {:>9}", "bits", "step", "zero pt", "SQNR dB");
    for bits in [2u8, 3, 4, 8, 32] {
        let params = calibrate_minmax(&samples, bits)?;
        let restored = fake_quantize(&samples, &params);
        let quality = sqnr_db(&samples, &restored)?;
        println!(
            "{bits:>5}  {:>12.6}  {:>8}  {quality:>9.2}",
            params.step, params.zero_point
        );
    }

    // The round trip is idempotent: quantized values are fixed points.
    let params = calibrate_minmax(&samples, 4)?;
    let once = fake_quantize(&samples, &params);
    let twice = fake_quantize(&once, &params);
    assert_eq!(once, twice);
    println!("\n4-bit round trip is idempotent over {} samples", samples.len());
    Ok(())
}
