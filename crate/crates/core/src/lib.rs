//! Forward Steklov time averages of sampled space-time fields, Bochner
//! norms on tensor grids, and a harness that checks the operators'
//! inequalities, identities and convergence rates numerically.

pub mod calculus;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod field;
pub mod io;
pub mod norms;
pub mod report;
pub mod steklov;
pub mod suite;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Field, SpaceGrid, SpaceSlice, TimeGrid};
pub use norms::{bochner_norm, BochnerSpec, Exponent};
pub use steklov::{steklov_average, steklov_average_extended, SteklovParams};
