pub mod bench;
pub mod eval;
pub mod gradcheck;
pub mod infer;
pub mod prepare;
pub mod train;
