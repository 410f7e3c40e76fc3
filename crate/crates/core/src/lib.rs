//! Fixed-dimensional acoustic word embeddings.
//!
//! Variable-length word segments (frames of acoustic features) are padded to
//! a fixed width and mapped by a convolutional or fully connected network to
//! a vector. Networks are trained either as word classifiers or as Siamese
//! networks on same/different supervision, and judged on the same-different
//! word discrimination task by average precision.

pub mod cli;
pub mod data;
pub mod dimred;
pub mod embedding;
mod error;
pub mod experiment;
pub mod eval;
pub mod losses;
pub mod models;
pub mod net;
pub mod optim;

pub use error::{Error, Result};
