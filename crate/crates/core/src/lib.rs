//! Process tensors for discrete-time open quantum dynamics.
//!
//! A system `S` interacts with an environment `E` through joint unitaries;
//! between them an experimenter applies control operations on `S` alone.
//! This crate simulates such circuits, reconstructs the multi-time process
//! tensor by tomography, builds its Choi state and matrix-product form, and
//! tests and quantifies memory effects.

pub mod acceptance;
pub mod analysis;
pub mod basis;
pub mod channel;
pub mod cji;
pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod linalg;
pub mod markov;
pub mod process_tensor;
pub mod report;
pub mod scenarios;
pub mod state;

pub use error::{Error, Result};
