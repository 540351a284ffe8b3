//! Cross-domain rating prediction with AutoRec embeddings and a
//! domain-adversarial transfer network.

pub mod autorec;
pub mod cli;
pub mod error;
pub mod harness;
pub mod model;
pub mod nncore;
pub mod ratings;

pub use error::{Error, Result};
