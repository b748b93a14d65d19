#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sketch_core::data::{write_labels, write_pgm};
use sketch_core::{LabelMap, Region, Tensor};

pub const HEIGHT: usize = 250;
pub const WIDTH: usize = 200;

pub fn sketchgen() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sketchgen"))
}

pub fn run(args: &[&str]) -> Output {
    sketchgen().args(args).output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn inside(y: f64, x: f64, cy: f64, cx: f64, ry: f64, rx: f64) -> bool {
    ((y - cy) / ry).powi(2) + ((x - cx) / rx).powi(2) <= 1.0
}

/// A cartoon portrait: an oval face under a cap of striped hair on a light
/// background, plus a sketch that is a monotone remapping of the photo so
/// every window is well aligned. `shift` moves the head sideways.
pub fn portrait(shift: f64) -> (Tensor, Tensor, LabelMap) {
    let cx = WIDTH as f64 / 2.0 + shift;
    let region = |y: usize, x: usize| {
        let (y, x) = (y as f64, x as f64);
        if inside(y, x, 145.0, cx, 70.0, 55.0) {
            Region::Face
        } else if inside(y, x, 110.0, cx, 100.0, 80.0) {
            Region::Hair
        } else {
            Region::Background
        }
    };
    let photo = Tensor::from_fn(1, HEIGHT, WIDTH, |_, y, x| match region(y, x) {
        Region::Face => {
            let (fy, fx) = (y as f64, x as f64);
            let eye = inside(fy, fx, 125.0, cx - 22.0, 6.0, 10.0) || inside(fy, fx, 125.0, cx + 22.0, 6.0, 10.0);
            let mouth = inside(fy, fx, 180.0, cx, 4.0, 20.0);
            if eye || mouth {
                0.25
            } else {
                0.65 + 0.05 * (fy / 9.0).sin()
            }
        }
        Region::Hair => 0.2 + 0.1 * (x as f64 * 0.9).sin(),
        Region::Background => 0.85,
    });
    let sketch = photo.map(|v| 0.25 + 0.75 * v);
    let labels = (0..HEIGHT * WIDTH).map(|i| region(i / WIDTH, i % WIDTH)).collect();
    (photo, sketch, LabelMap::new(HEIGHT, WIDTH, labels).unwrap())
}

/// Writes `count` labelled portraits and a manifest listing them.
pub fn write_dataset(dir: &Path, count: usize) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let mut manifest = String::from("# photo\tsketch\tlabels\n");
    for i in 0..count {
        let (photo, sketch, labels) = portrait(i as f64 * 4.0 - 2.0);
        write_pgm(dir.join(format!("p{i}.pgm")), &photo).unwrap();
        write_pgm(dir.join(format!("s{i}.pgm")), &sketch).unwrap();
        write_labels(dir.join(format!("l{i}.pgm")), &labels).unwrap();
        manifest.push_str(&format!("p{i}.pgm\ts{i}.pgm\tl{i}.pgm\n"));
    }
    let path = dir.join("manifest.tsv");
    std::fs::write(&path, manifest).unwrap();
    path
}

/// Reads a binary PGM header and returns (width, height).
pub fn pgm_size(path: &Path) -> (usize, usize) {
    let img = sketch_core::data::read_image(path).unwrap();
    (img.width(), img.height())
}
