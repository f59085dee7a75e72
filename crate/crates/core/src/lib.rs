//! Bell-local hidden-variable models whose measurement settings may be
//! correlated with the hidden variable, and the information-theoretic cost of
//! that correlation.
//!
//! The crate builds four concrete constructions (a one-bit communication
//! model, a finite input-broadcast model, a detection-efficiency model, and
//! the deterministic-settings extreme), turns communication and detection
//! models into correlated-settings models, and measures I(x,y:λ) exactly on
//! finite tables or by quadrature and Monte Carlo for continuous settings.
//!
//! Module map:
//! - [`probcore`]: finite joint tables, entropies and mutual information.
//! - [`geom`]: Bloch vectors, seeded sphere sampling, sign conventions.
//! - [`models`]: the concrete models and the shared model traits.
//! - [`transforms`]: communication/detection → correlated-settings.
//! - [`analysis`]: correlation tables, CHSH, locality checks, MI values.
//! - [`cli`]: command-line front end and file formats.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geom;
pub mod models;
pub mod probcore;
pub mod transforms;

pub use error::{Error, Result};
