use std::time::Instant;

use anyhow::{bail, Context, Result};
use sketch_core::network::{attach_prior, init_weights, load_weights, Bfcn, BfcnOutput};
use sketch_core::Tensor;

use crate::config::FileConfig;
use crate::images::{fit, load_photo};
use crate::{BenchArgs, UsageError, INFER_SIZE};

/// A smooth synthetic face-sized image so the benchmark runs without data.
fn synthetic_photo(channels: usize) -> Tensor {
    let (h, w) = INFER_SIZE;
    Tensor::from_fn(channels, h, w, |c, y, x| {
        let (fy, fx) = (y as f64 / h as f64, x as f64 / w as f64);
        0.5 + 0.4 * ((6.0 * fy + c as f64).sin() * (4.0 * fx).cos())
    })
}

fn same_bits(a: &BfcnOutput, b: &BfcnOutput) -> bool {
    let eq = |x: &Tensor, y: &Tensor| {
        x.same_shape(y) && x.data().iter().zip(y.data()).all(|(p, q)| p.to_bits() == q.to_bits())
    };
    eq(&a.structural, &b.structural) && eq(&a.textural, &b.textural)
}

pub fn run(args: &BenchArgs, config: &FileConfig) -> Result<()> {
    if args.repetitions == 0 {
        return Err(UsageError("--repetitions must be at least 1".into()).into());
    }
    let channels = config.photo_channels();
    let spec = config.bfcn_spec(channels, true)?;
    let weights = match &args.bfcn {
        Some(p) => load_weights(p, &spec).with_context(|| format!("loading {}", p.display()))?,
        None => init_weights(&spec, args.seed.or(config.train.seed).unwrap_or(0)),
    };
    let photo = match &args.photo {
        Some(p) => fit(&load_photo(p, channels)?, INFER_SIZE)?,
        None => synthetic_photo(channels),
    };
    let prior = Tensor::filled(1, INFER_SIZE.0, INFER_SIZE.1, 0.5);
    let input = attach_prior(&photo, &prior, &spec)?;

    let shared = Bfcn::new(spec, weights)?;
    let unshared = shared.unshared();
    // Warm caches and allocator once before timing.
    let reference = shared.forward(&input)?;

    println!("{:>4} {:>12} {:>12} {:>6}", "run", "shared_ms", "unshared_ms", "equal");
    let (mut sum_s, mut sum_u, mut faster, mut mismatches) = (0.0, 0.0, 0, 0);
    for run in 1..=args.repetitions {
        let t = Instant::now();
        let a = shared.forward(&input)?;
        let ms_s = t.elapsed().as_secs_f64() * 1e3;
        let t = Instant::now();
        let b = unshared.forward(&input)?;
        let ms_u = t.elapsed().as_secs_f64() * 1e3;
        let equal = same_bits(&a, &b) && same_bits(&a, &reference);
        println!("{run:>4} {ms_s:>12.3} {ms_u:>12.3} {:>6}", if equal { "yes" } else { "NO" });
        sum_s += ms_s;
        sum_u += ms_u;
        faster += usize::from(ms_s < ms_u);
        mismatches += usize::from(!equal);
    }
    let n = args.repetitions as f64;
    println!("mean {:>11.3} {:>12.3}", sum_s / n, sum_u / n);
    println!("shared faster in {faster} of {} runs", args.repetitions);
    if mismatches > 0 {
        bail!("shared and unshared outputs differ in {mismatches} runs");
    }
    Ok(())
}
