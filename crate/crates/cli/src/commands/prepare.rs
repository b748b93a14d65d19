use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketch_core::data::{
    build_parsing_prior, build_prior, extract_patches, hsv_value_augment_random, load_tensor, read_labels,
    read_manifest, save_tensor, write_pgm, write_ppm, PairArchive, ParsingSet,
};
use sketch_core::fusion::align_parsing;
use sketch_core::network::{attach_prior, load_weights, PNet, PNET_INPUT_SIZE};
use sketch_core::{LabelMap, ParsingMap, Region, Tensor};

use crate::config::{DatasetInfo, FileConfig};
use crate::images::{fit, load_gray, load_photo};
use crate::{PrepareArgs, UsageError, FRAME_SIZE};

pub const PAIRS_FILE: &str = "pairs.skpa";
pub const PARSING_FILE: &str = "parsing.skps";
pub const SKETCH_PRIOR_FILE: &str = "sketch_prior.sktn";
pub const PARSING_PRIOR_FILE: &str = "parsing_prior.sktn";

struct Entry {
    photo: Tensor,
    sketch: Tensor,
    parsing: ParsingMap,
    /// Ground-truth labels, when the manifest supplied them.
    labels: Option<LabelMap>,
}

/// Labels a photo with a trained parsing network at full image size.
struct AutoLabeler {
    net: PNet,
    prior: Tensor,
}

impl AutoLabeler {
    fn load(weights: &Path, prior: Option<&Path>, config: &FileConfig, channels: usize) -> Result<Self> {
        let spec = config.pnet_spec(channels)?;
        let w = load_weights(weights, &spec).with_context(|| format!("loading {}", weights.display()))?;
        let prior_path = match prior {
            Some(p) => p.to_path_buf(),
            None => weights.parent().unwrap_or(Path::new(".")).join(PARSING_PRIOR_FILE),
        };
        let prior = load_tensor(&prior_path).with_context(|| format!("loading {}", prior_path.display()))?;
        let (h, w_) = PNET_INPUT_SIZE;
        let prior = fit(&prior, (h, w_))?;
        Ok(AutoLabeler {
            net: PNet::new(spec, w)?,
            prior,
        })
    }

    fn label(&self, photo: &Tensor) -> Result<ParsingMap> {
        let (h, w) = PNET_INPUT_SIZE;
        let input = attach_prior(&fit(photo, (h, w))?, &self.prior, self.net.spec())?;
        let parsing = self.net.forward(&input)?;
        let full = (photo.height(), photo.width());
        Ok(align_parsing(&parsing, full, full)?)
    }
}

pub fn run(args: &PrepareArgs, config: &FileConfig) -> Result<()> {
    let mut train = config.train_config();
    if let Some(s) = args.seed {
        train.seed = s;
    }
    if let Some(s) = args.stride {
        train.stride = s;
    }
    if let Some(t) = args.ssim_threshold {
        train.ssim_threshold = t;
    }
    let channels = if args.color { 3 } else { config.photo_channels() };
    if !train.ssim_threshold.is_finite() {
        return Err(UsageError(format!("--ssim-threshold must be finite, got {}", train.ssim_threshold)).into());
    }
    if train.stride == 0 || train.patch_size == 0 {
        return Err(UsageError("patch size and stride must be positive".into()).into());
    }

    let manifest = read_manifest(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?;
    ensure!(!manifest.is_empty(), "manifest {} lists no pairs", args.manifest.display());

    let labeler = match &args.pnet {
        Some(w) => Some(AutoLabeler::load(w, args.pnet_prior.as_deref(), config, channels)?),
        None => None,
    };

    let mut entries = Vec::with_capacity(manifest.len());
    let mut size = None;
    for m in &manifest {
        let photo = load_photo(&m.photo, channels).with_context(|| format!("reading {}", m.photo.display()))?;
        let sketch = load_gray(&m.sketch).with_context(|| format!("reading {}", m.sketch.display()))?;
        let here = (photo.height(), photo.width());
        ensure!(
            (sketch.height(), sketch.width()) == here,
            "{} is {}x{} but {} is {}x{}",
            m.sketch.display(),
            sketch.height(),
            sketch.width(),
            m.photo.display(),
            here.0,
            here.1
        );
        match size {
            None => size = Some(here),
            Some(s) if s != here => bail!("{} is {}x{}, earlier images are {}x{}", m.photo.display(), here.0, here.1, s.0, s.1),
            _ => {}
        }
        let (parsing, labels) = match (&m.labels, &labeler) {
            (Some(path), _) => {
                let labels = read_labels(path).with_context(|| format!("reading {}", path.display()))?;
                ensure!(
                    (labels.height(), labels.width()) == here,
                    "{} is {}x{}, expected {}x{}",
                    path.display(),
                    labels.height(),
                    labels.width(),
                    here.0,
                    here.1
                );
                (labels.to_parsing(), Some(labels))
            }
            (None, Some(l)) => (l.label(&photo)?, None),
            (None, None) => bail!(
                "{} has no label map; add one to the manifest or pass --pnet",
                m.photo.display()
            ),
        };
        entries.push(Entry {
            photo,
            sketch,
            parsing,
            labels,
        });
    }
    let (img_h, img_w) = size.expect("manifest is not empty");
    let (frame_h, frame_w) = FRAME_SIZE;
    ensure!(
        img_h >= frame_h && img_w >= frame_w,
        "images are {img_h}x{img_w}, smaller than the {frame_h}x{frame_w} training frame"
    );
    let frame_offset = ((img_h - frame_h) / 2, (img_w - frame_w) / 2);

    if args.augment {
        let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
        let extra: Vec<Entry> = entries
            .iter()
            .map(|e| {
                let (photo, _) = hsv_value_augment_random(&e.photo, train.augment_range, &mut rng)?;
                Ok(Entry {
                    photo,
                    sketch: e.sketch.clone(),
                    parsing: e.parsing.clone(),
                    labels: e.labels.clone(),
                })
            })
            .collect::<Result<_>>()?;
        entries.extend(extra);
    }

    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let out = |name: &str| -> PathBuf { args.out.join(name) };

    // Priors. The sketch prior keeps the full image size; training crops the
    // frame out of it and inference resizes it.
    let sketches: Vec<Tensor> = entries.iter().map(|e| e.sketch.clone()).collect();
    let sketch_prior = build_prior(&sketches)?;
    save_tensor(out(SKETCH_PRIOR_FILE), &sketch_prior)?;
    write_pgm(out("sketch_prior.pgm"), &sketch_prior)?;

    let (ph, pw) = PNET_INPUT_SIZE;
    let labelled: Vec<&Entry> = entries.iter().filter(|e| e.labels.is_some()).collect();
    let parsing_prior = if labelled.is_empty() {
        labeler.as_ref().expect("unlabelled entries imply a parsing network").prior.clone()
    } else {
        let resized = labelled
            .iter()
            .map(|e| e.labels.as_ref().expect("filtered").resized_nearest(ph, pw))
            .collect::<sketch_core::Result<Vec<_>>>()?;
        build_parsing_prior(&resized)?.into_tensor()
    };
    save_tensor(out(PARSING_PRIOR_FILE), &parsing_prior)?;
    write_ppm(out("parsing_prior.ppm"), &parsing_prior)?;

    // Patch pairs, stored unfiltered so training can pick its own threshold.
    let mut pairs = Vec::new();
    for e in &entries {
        let (y0, x0) = frame_offset;
        let photo = e.photo.crop(y0, x0, frame_h, frame_w)?;
        let sketch = e.sketch.crop(y0, x0, frame_h, frame_w)?;
        let parsing = e.parsing.crop(y0, x0, frame_h, frame_w)?;
        pairs.extend(extract_patches(&photo, &sketch, &parsing, train.patch_size, train.stride, f64::NEG_INFINITY)?);
    }
    let archive = PairArchive {
        patch_size: train.patch_size,
        photo_channels: channels,
        threshold: train.ssim_threshold,
        frame_offset,
        frame_size: FRAME_SIZE,
        pairs,
    };
    archive.save(out(PAIRS_FILE))?;

    // Parsing-network training set: whole photos at network input size.
    let (oh, ow) = PNet::output_size(ph, pw);
    let samples = labelled
        .iter()
        .map(|e| {
            let photo = fit(&e.photo, (ph, pw))?;
            let labels = e.labels.as_ref().expect("filtered").resized_nearest(oh, ow)?;
            Ok((photo, labels))
        })
        .collect::<Result<Vec<_>>>()?;
    ParsingSet { samples }.save(out(PARSING_FILE))?;

    DatasetInfo {
        photo_channels: channels,
        image_size: [img_h, img_w],
        frame_offset: [frame_offset.0, frame_offset.1],
        frame_size: [frame_h, frame_w],
        entries: entries.len(),
        labelled_entries: labelled.len(),
    }
    .save(&args.out)?;

    let face_total = archive.count(Region::Face);
    let hair = archive.count(Region::Hair);
    let face_kept = archive
        .pairs
        .iter()
        .filter(|p| p.region == Region::Face && p.alignment_score > train.ssim_threshold)
        .count();
    println!(
        "{} images ({} labelled), frame {}x{} at offset ({}, {})",
        entries.len(),
        labelled.len(),
        frame_h,
        frame_w,
        frame_offset.0,
        frame_offset.1
    );
    println!(
        "face pairs: {face_kept} kept, {} discarded (alignment <= {})",
        face_total - face_kept,
        train.ssim_threshold
    );
    println!("hair pairs: {hair} kept");
    if face_kept == 0 {
        eprintln!(
            "warning: no face pair passes the alignment threshold {}; the structural branch has nothing to learn from",
            train.ssim_threshold
        );
    }
    ensure!(face_kept + hair > 0, "no patch pair survived; check the label maps and the alignment threshold");
    println!("wrote {}", args.out.display());
    Ok(())
}
