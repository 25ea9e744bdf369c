//! Mixed finite element solver for the fourth-order active fluid equations.
//!
//! The velocity `u` is paired with the auxiliary field `w = -Δu` so the
//! biharmonic term becomes two coupled second-order equations. Unknowns
//! `(u, w, φ, p)` live in Taylor–Hood spaces (vector P2 for `u`, `w`;
//! scalar P1 for `φ`, `p`) on a structured triangulation of the unit
//! square, and time is advanced with the variable-step DLN one-leg
//! method.

pub mod assembly;
pub mod cli_io;
pub mod error;
pub mod fem;
pub mod mesh;
pub mod mms_harness;
pub mod solver;
pub mod sparse;
pub mod timestepper;

pub use error::{Error, Result};
pub use mesh::{build_unit_square_mesh, BoundaryEdge, BoundaryTag, TriMesh};
pub use sparse::{SparseOperator, SparsityPattern};
pub use assembly::{BlockSystem, Discretization, ModelParams};
