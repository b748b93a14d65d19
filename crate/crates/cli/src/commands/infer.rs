use std::time::Instant;

use anyhow::{Context, Result};
use sketch_core::data::load_tensor;
use sketch_core::fusion::{align_parsing, fuse, FusionInput, FusionMode};
use sketch_core::network::{attach_prior, load_weights, Bfcn, PNet, PNET_INPUT_SIZE};

use super::prepare::{PARSING_PRIOR_FILE, SKETCH_PRIOR_FILE};
use crate::config::{DatasetInfo, FileConfig};
use crate::images::{export, fit, load_photo};
use crate::{InferArgs, INFER_SIZE};

pub fn run(args: &InferArgs, config: &FileConfig) -> Result<()> {
    let start = Instant::now();
    let info = DatasetInfo::load(&args.data)?;
    let channels = info.photo_channels;

    let bfcn_spec = config.bfcn_spec(channels, !args.no_prior)?;
    let bfcn_weights =
        load_weights(&args.bfcn, &bfcn_spec).with_context(|| format!("loading sketch weights {}", args.bfcn.display()))?;
    let pnet_spec = config.pnet_spec(channels)?;
    let pnet_weights =
        load_weights(&args.pnet, &pnet_spec).with_context(|| format!("loading parsing weights {}", args.pnet.display()))?;

    let source = load_photo(&args.photo, channels).with_context(|| format!("reading {}", args.photo.display()))?;
    let photo = fit(&source, INFER_SIZE)?;
    let sketch_prior = fit(&load_tensor(args.data.join(SKETCH_PRIOR_FILE))?, INFER_SIZE)?;

    let bfcn = Bfcn::new(bfcn_spec, bfcn_weights)?;
    let input = attach_prior(&photo, &sketch_prior, bfcn.spec())?;
    let sketches = if args.unshared_trunk {
        bfcn.unshared().forward(&input)?
    } else {
        bfcn.forward(&input)?
    };
    let out_size = (sketches.structural.height(), sketches.structural.width());

    let pnet = PNet::new(pnet_spec, pnet_weights)?;
    let parsing_prior = fit(&load_tensor(args.data.join(PARSING_PRIOR_FILE))?, PNET_INPUT_SIZE)?;
    let pnet_input = attach_prior(&fit(&source, PNET_INPUT_SIZE)?, &parsing_prior, pnet.spec())?;
    let parsing = align_parsing(&pnet.forward(&pnet_input)?, INFER_SIZE, out_size)?;

    let mode = if args.hard_fusion { FusionMode::Hard } else { FusionMode::Soft };
    let fusion = FusionInput::new(sketches.structural, sketches.textural, parsing)?;
    let fused = fuse(&fusion, mode);

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    export(&args.out, "structural", fusion.structural(), args.png)?;
    export(&args.out, "textural", fusion.textural(), args.png)?;
    export(&args.out, "parsing", fusion.parsing().as_tensor(), args.png)?;
    export(&args.out, "fused", &fused, args.png)?;
    println!(
        "fused sketch {}x{} (width x height) written to {} in {:.2}s",
        fused.width(),
        fused.height(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
