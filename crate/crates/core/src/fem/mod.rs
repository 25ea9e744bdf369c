//! Reference elements, quadrature, Lagrange spaces and fields.

pub mod basis;
pub mod quadrature;
pub mod space;

pub use basis::{p_basis_eval, BasisEval};
pub use quadrature::{quadrature_rule, QuadratureRule};
pub use space::{build_function_space, evaluate_field, ElementMap, Field, FieldValue, FunctionSpace};
