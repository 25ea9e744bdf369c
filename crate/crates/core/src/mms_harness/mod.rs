//! Manufactured solutions, error measurement and the experiment drivers.

pub mod drivers;
pub mod exact;
pub mod norms;

pub use drivers::*;
pub use exact::{source_term, ManufacturedAt, ManufacturedSolution, PressureProfile, VelocityProfile};
pub use norms::{
    error_norms, error_norms_with, observed_rate, ErrorPair, ErrorReport, ErrorRow, ERROR_COLUMNS,
    ERROR_QUADRATURE_DEGREE,
};
