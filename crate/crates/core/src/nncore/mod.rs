//! Minimal dense neural-network substrate: matrices, feed-forward layers,
//! Adam, seeded initialization, finite-difference checking and checkpoints.

mod adam;
pub mod checkpoint;
mod gradcheck;
mod matrix;
mod mlp;
mod rng;

pub use adam::{AdamConfig, AdamState};
pub use checkpoint::NamedTensor;
pub use gradcheck::{grad_check, relative_error, GradCheckReport};
pub use matrix::DenseMatrix;
pub use mlp::{sigmoid, Activation, ForwardCache, Layer, Mlp, ParamTensor, Parameterized};
pub use rng::SeedStream;

/// Standard deviation used for weight initialization.
pub const INIT_STD: f64 = 0.01;

/// Seeded `normal(0, std²)` matrix drawn from the `label` stream of `seed`.
pub fn init_normal(rows: usize, cols: usize, std: f64, seed: u64) -> crate::Result<DenseMatrix> {
    DenseMatrix::random_normal(rows, cols, std, &mut SeedStream::new(seed).rng("init_normal"))
}
