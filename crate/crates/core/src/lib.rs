//! Spectral and scattering structure of the continuous Dirac model of an
//! armchair graphene nanoribbon.
//!
//! The strip `(0, L) x R` carries a four-component spinor `(u, v, u', v')`
//! whose two valleys are coupled by the armchair edge conditions. The crate
//! provides
//!
//! * [`spectrum`]: thresholds, propagating modes and near-threshold data,
//! * [`waves`]: every free wave family as an evaluable [`waves::SpinorField`],
//! * [`symplectic`]: the cross-section flux form and its biorthogonality tables,
//! * [`scattering`]: first-order and full augmented scattering matrices and
//!   the trapped-mode criterion,
//! * [`synthesis`]: construction of small potentials with a trapped mode just
//!   below a chosen threshold.

pub mod error;
pub mod quadrature;
pub mod scattering;
pub mod spectrum;
pub mod symplectic;
pub mod synthesis;
pub mod waves;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
pub use spectrum::RibbonGeometry;

/// Library version string reported by the command-line front end.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
