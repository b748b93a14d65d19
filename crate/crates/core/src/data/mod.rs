//! Image I/O, preprocessing and the patch-pair dataset.

pub mod archive;
pub mod augment;
pub mod color;
pub mod manifest;
pub mod patches;
pub mod pnm;
pub mod prior;
pub mod sobel;
pub mod ssim;

pub use archive::{decode_tensor, encode_tensor, load_tensor, save_tensor, PairArchive, ParsingSet};
pub use augment::{hsv_to_rgb, hsv_value_augment, hsv_value_augment_random, rgb_to_hsv, DEFAULT_AUGMENT_RANGE};
pub use color::{luminance, to_channels};
pub use manifest::{parse_manifest, read_manifest, ManifestEntry};
pub use patches::{
    alignment_filter, alignment_score, extract_patches, grid_positions, PatchPair, DEFAULT_PATCH_SIZE,
    DEFAULT_SSIM_THRESHOLD, DEFAULT_STRIDE,
};
pub use pnm::{
    decode_pnm, decode_pnm_raw, encode_labels, encode_pgm, encode_ppm, read_image, read_labels, to_byte, write_labels,
    write_pgm, write_ppm, RawPnm,
};
pub use prior::{build_parsing_prior, build_prior};
pub use sobel::sobel_edges;
pub use ssim::{ssim, SSIM_C1, SSIM_C2};
