//! Finite-element projection scheme for a barotropic compressible
//! two-fluid model on the unit square.

// Index loops mirror the element formulas; `!(x > 0.0)` rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod checks;
pub mod config;
pub mod diagnostics;
pub mod eos;
pub mod error;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod quadrature;
pub mod runner;
pub mod scenario;
pub mod scheme;
pub mod solver;
pub mod sparse;
pub mod stokes;

pub use error::{Error, Result};
pub use fem::{FeContext, VectorField};
pub use mesh::{build_uniform_mesh, TriMesh};
