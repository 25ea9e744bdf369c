//! Sparse operators of the discrete problem and the coupled block systems.

pub mod block;
pub mod forms;
pub mod scheme;

pub use block::{BlockStructure, DirichletMask};
pub use forms::{
    assemble_cubic_residual_and_jacobian, assemble_divergence, assemble_load, assemble_mass, assemble_mean_functional,
    assemble_nonlinear, assemble_stiffness, assemble_trilinear_matrix, assemble_weak_load, coupling_pattern,
    NonlinearRequest, NonlinearTerms, ASSEMBLY_QUADRATURE_DEGREE,
};
pub use scheme::{
    assemble_leray_system, assemble_scheme_system, assemble_stokes_projection_system, BlockSystem, Discretization, ModelParams,
    ProjectionData, ProjectionSystem, SchemeProblem, Stage, StepWeights, FIELD_MEAN_P, FIELD_MEAN_PHI, FIELD_P,
    FIELD_PHI, FIELD_U, FIELD_W,
};
