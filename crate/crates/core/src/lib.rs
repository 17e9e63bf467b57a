//! Data-driven discovery of Lagrangians, diffusion terms, equations of motion
//! and Hamiltonians for stochastically excited mechanical systems.
//!
//! The pipeline: simulate an ensemble ([`sim`]), evaluate a candidate library
//! of Lagrangian terms through the Euler–Lagrange operator ([`library`]),
//! solve a sparse regression on the ensemble-averaged features
//! ([`regression`]), then recover the noise gain from the residual
//! ([`discovery`]). [`bench`] runs the whole thing on the benchmark systems.

pub mod basis;
pub mod bench;
pub mod discovery;
pub mod error;
pub mod library;
pub mod model;
pub mod numdiff;
pub mod regression;
pub mod sim;

pub use error::{Error, Result};
