//! Feature-space dataset augmentation.
//!
//! A two-layer LSTM sequence autoencoder maps every sequence to a context
//! vector. New labelled examples are synthesised in that space by adding
//! noise, interpolating toward an in-class neighbour, or extrapolating away
//! from one, and a small MLP trained on the (augmented) contexts measures the
//! effect on classification error.

pub mod augment;
pub mod autoencoder;
pub mod checkpoint;
pub mod classifier;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod lstm;
pub mod optim;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
