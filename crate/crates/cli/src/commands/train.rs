use std::path::PathBuf;

use anyhow::{ensure, Context, Result};
use sketch_core::data::{load_tensor, PairArchive, ParsingSet};
use sketch_core::network::save_weights;
use sketch_core::trainer::{train_bfcn_with, train_pnet_with, EpochRecord, TrainConfig};

use super::prepare::{PAIRS_FILE, PARSING_FILE, PARSING_PRIOR_FILE, SKETCH_PRIOR_FILE};
use crate::config::{DatasetInfo, FileConfig};
use crate::{Network, TrainArgs, UsageError};

fn train_config(args: &TrainArgs, config: &FileConfig) -> Result<TrainConfig> {
    let mut c = config.train_config();
    if let Some(e) = args.epochs {
        match args.network {
            Network::Bfcn => c.epochs_bfcn = e,
            Network::Pnet => c.epochs_pnet = e,
        }
    }
    if let Some(a) = args.alpha {
        c.alpha = a;
    }
    if let Some(b) = args.beta {
        c.beta = b;
    }
    if let Some(s) = args.seed {
        c.seed = s;
    }
    if let Some(t) = args.ssim_threshold {
        c.ssim_threshold = t;
    }
    if args.no_drl {
        c.beta = 0.0;
    }
    c.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(c)
}

fn progress(quiet: bool) -> impl FnMut(&EpochRecord) {
    move |r: &EpochRecord| {
        if quiet {
            return;
        }
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"));
        eprintln!(
            "epoch {:>4}  loss_s {}  loss_t {}  loss_g {}  loss_p {}  {:.2}s",
            r.epoch,
            fmt(r.loss_s),
            fmt(r.loss_t),
            fmt(r.loss_g),
            fmt(r.loss_p),
            r.seconds
        );
    }
}

pub fn run(args: &TrainArgs, config: &FileConfig) -> Result<()> {
    if args.no_prior && args.network == Network::Pnet {
        return Err(UsageError("--no-prior applies to the sketch network only".into()).into());
    }
    ensure!(args.data.is_dir(), "dataset directory {} does not exist; run `prepare` first", args.data.display());
    let info = DatasetInfo::load(&args.data)?;
    let mut train = train_config(args, config)?;
    let name = match args.network {
        Network::Bfcn => "bfcn",
        Network::Pnet => "pnet",
    };
    let out = args.out.clone().unwrap_or_else(|| args.data.join(format!("{name}.skwt")));
    let report_path: PathBuf = args.report.clone().unwrap_or_else(|| args.data.join(format!("{name}_report.csv")));

    let (weights, report) = match args.network {
        Network::Bfcn => {
            let path = args.data.join(PAIRS_FILE);
            let archive = PairArchive::load(&path).with_context(|| format!("loading {}", path.display()))?;
            train.patch_size = archive.patch_size;
            let pairs = if args.no_drl {
                archive.selected(None)
            } else {
                archive.selected(Some(args.ssim_threshold.unwrap_or(archive.threshold)))
            };
            let prior = load_tensor(args.data.join(SKETCH_PRIOR_FILE))?;
            let (y0, x0) = archive.frame_offset;
            let (fh, fw) = archive.frame_size;
            let prior = prior.crop(y0, x0, fh, fw)?;
            let spec = config.bfcn_spec(info.photo_channels, !args.no_prior)?;
            eprintln!(
                "training sketch network on {} pairs ({} face, {} hair) for {} epochs",
                pairs.len(),
                pairs.iter().filter(|p| p.region == sketch_core::Region::Face).count(),
                pairs.iter().filter(|p| p.region == sketch_core::Region::Hair).count(),
                train.epochs_bfcn
            );
            train_bfcn_with(&pairs, &prior, &spec, &train, progress(args.quiet))?
        }
        Network::Pnet => {
            let path = args.data.join(PARSING_FILE);
            let set = ParsingSet::load(&path).with_context(|| format!("loading {}", path.display()))?;
            ensure!(!set.samples.is_empty(), "the dataset has no labelled images to train the parsing network on");
            let prior = load_tensor(args.data.join(PARSING_PRIOR_FILE))?;
            let spec = config.pnet_spec(info.photo_channels)?;
            eprintln!(
                "training parsing network on {} images for {} epochs",
                set.samples.len(),
                train.epochs_pnet
            );
            train_pnet_with(&set.samples, &prior, &spec, &train, progress(args.quiet))?
        }
    };
    save_weights(&weights, &out).with_context(|| format!("writing {}", out.display()))?;
    report
        .write_csv(&report_path, !args.no_timing)
        .with_context(|| format!("writing {}", report_path.display()))?;
    println!("wrote {} and {}", out.display(), report_path.display());
    Ok(())
}
