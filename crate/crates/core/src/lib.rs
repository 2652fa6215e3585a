//! Numerical tools for time-inhomogeneous Markov chains on finite state spaces:
//! exact merging distances, coupling and singular-value bounds, stability
//! envelopes over kernel sets, spectral comparison on weighted graphs, and
//! constructors for the standard example families.

pub mod chain;
pub mod error;
pub mod linalg;
pub mod merging;
pub mod random;
pub mod report;
pub mod singular;
pub mod spectral;
pub mod stability;
pub mod zoo;

pub use chain::{
    adjoint_kernel, classify_structure, compose, contraction_coefficient, evolve, product,
    stationary_measure, Kernel, KernelSequence, Measure, Order, StateSpace, StructureReport,
};
pub use error::{Error, Result};
