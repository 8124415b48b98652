//! Structured tensor classes and tensor complementarity problems.
//!
//! - [`tensor`]: dense order-m tensors, `T x^(m-1)`, Jacobians, `T·diag(w)`.
//! - [`classify`]: Z, diagonal dominance, Nekrasov, M/H tests, spectral radius
//!   of nonnegative tensors and a P-tensor counterexample search.
//! - [`transform`]: the Nekrasov scaling `W` and the `B⁺ + C` decomposition.
//! - [`tcp`]: TCP(T, q) residuals and solvers.
//! - [`generate`], [`io`], [`report`], [`cli`]: seeded instances, text formats
//!   and the command-line front end.

pub mod classify;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod generate;
pub mod io;
pub mod par;
pub mod report;
pub mod tcp;
pub mod tensor;
pub mod transform;

pub use error::{Error, Result};
pub use par::Execution;
pub use tensor::Tensor;
