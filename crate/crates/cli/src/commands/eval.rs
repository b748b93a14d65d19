use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use sketch_core::eval::{cms, pca_fit};

use crate::images::{fit, load_gray_any};
use crate::{EvalArgs, UsageError};

const EXTENSIONS: [&str; 4] = ["pgm", "ppm", "pnm", "png"];

/// Image files in `dir` keyed by file stem, in stem order.
fn images_by_stem(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !ext.is_some_and(|e| EXTENSIONS.contains(&e.as_str())) {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).context("non-UTF-8 file name")?.to_string();
        if let Some(prev) = out.insert(stem.clone(), path.clone()) {
            bail!("identity `{stem}` appears twice in {}: {} and {}", dir.display(), prev.display(), path.display());
        }
    }
    Ok(out)
}

pub fn run(args: &EvalArgs) -> Result<()> {
    if args.k == 0 {
        return Err(UsageError("--k must be at least 1".into()).into());
    }
    let queries = images_by_stem(&args.sketches)?;
    let gallery = images_by_stem(&args.gallery)?;
    ensure!(!queries.is_empty(), "no images in {}", args.sketches.display());
    ensure!(gallery.len() >= 2, "the gallery needs at least two identities");
    let unmatched: Vec<&str> = queries.keys().filter(|s| !gallery.contains_key(*s)).map(String::as_str).collect();
    if !unmatched.is_empty() {
        bail!("sketches without a gallery identity: {}", unmatched.join(", "));
    }

    let stems: Vec<&String> = gallery.keys().collect();
    let mut size = None;
    let mut gallery_vecs = Vec::with_capacity(gallery.len());
    for (stem, path) in &gallery {
        let img = load_gray_any(path)?;
        let here = (img.height(), img.width());
        match size {
            None => size = Some(here),
            Some(s) => ensure!(s == here, "gallery image {stem} is {}x{}, others are {}x{}", here.0, here.1, s.0, s.1),
        }
        gallery_vecs.push(img.into_data());
    }
    let size = size.expect("gallery is not empty");
    let mut query_vecs = Vec::with_capacity(queries.len());
    let mut ids = Vec::with_capacity(queries.len());
    for (stem, path) in &queries {
        query_vecs.push(fit(&load_gray_any(path)?, size)?.into_data());
        ids.push(stems.binary_search(&stem).expect("checked above"));
    }

    let max_k = (gallery_vecs.len() - 1).min(size.0 * size.1);
    let k = if args.k > max_k {
        eprintln!("warning: k = {} exceeds what {} gallery images support; using {max_k}", args.k, gallery_vecs.len());
        max_k
    } else {
        args.k
    };
    let max_rank = args.max_rank.unwrap_or(gallery_vecs.len());
    if max_rank == 0 || max_rank > gallery_vecs.len() {
        return Err(UsageError(format!("--max-rank must lie in 1..={}", gallery_vecs.len())).into());
    }

    let model = pca_fit(&gallery_vecs, k)?;
    let project = |set: &[Vec<f64>]| set.iter().map(|x| model.project(x)).collect::<sketch_core::Result<Vec<_>>>();
    let curve = cms(&project(&query_vecs)?, &project(&gallery_vecs)?, &ids, max_rank)?;

    println!("{} queries against {} gallery identities, k = {k}", query_vecs.len(), gallery_vecs.len());
    for rank in [1, 10] {
        match curve.at(rank) {
            Some(s) => println!("Rank-{rank}: {:.2}%", 100.0 * s),
            None => println!("Rank-{rank}: n/a (max rank {})", curve.max_rank()),
        }
    }
    if let Some(out) = &args.out {
        std::fs::write(out, curve.to_csv()).with_context(|| format!("writing {}", out.display()))?;
        println!("wrote {}", out.display());
    }
    Ok(())
}
