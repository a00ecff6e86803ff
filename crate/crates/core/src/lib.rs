// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Generalized Harper operators on the square lattice.
//!
//! Builds finite-volume and Bloch-reduced versions of operators with kernel
//! `exp(i eps phi(x,y)) h(x,y)`, computes their spectra, and measures how
//! spectra, gap edges and resolvents depend on the flux parameter `eps`.

pub mod almost_convex;
pub mod bounds;
pub mod continuity;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod operator;
pub mod partition;
pub mod rational;
pub mod resolvent;
pub mod spectral;

pub use error::{GhoError, Result};
pub use lattice::{box_points, BoxRegion, LatticePoint};
pub use model::{GhoModel, KernelSpec, PhaseSpec};
pub use operator::{assemble, assemble_with, gauge_conjugate, AssemblyOptions, TruncatedOperator};
