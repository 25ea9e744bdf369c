//! Variable-step DLN time integration.

pub mod coefficients;
pub mod stepper;

pub use coefficients::{
    adapt_step, check_stability_step_condition, dln_coefficients, g_norm_squared, g_stability_check, ControllerBounds,
    DlnStepContext, GStabilityResidual,
};
pub use stepper::{
    leray_initial_state, stokes_projection, BootstrapRule, ProblemData, SolutionHistory, StepDiagnostics, Stepper, Unforced,
};
