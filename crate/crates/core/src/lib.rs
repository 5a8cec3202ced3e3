//! Numerical verification laboratory for first-eigenvalue lower bounds of the
//! weighted p-Laplacian on smooth metric measure spaces.
//!
//! The crate computes first eigenvalues of the weighted p-Laplacian on model
//! spaces, verifies the weighted p-Bochner and p-Reilly integral identities to
//! near machine precision, and checks the curvature/diameter lower-bound
//! theorems and the gradient estimate against solver output.
//!
//! Module map:
//! - [`jet`]: order-3 truncated Taylor arithmetic (the derivative engine)
//! - [`field`]: scalar fields as jet-evaluable expression trees
//! - [`chart`], [`geometry`]: model-manifold catalog and tensor calculus
//! - [`identities`]: p-Bochner and p-Reilly residuals
//! - [`eigen`]: 1D weighted p-Laplacian eigensolver plus shooting oracle
//! - [`bounds`]: lower-bound formulas, hypothesis scans, bound reports
//! - [`harness`]: scenario configs, sweeps, reports and the acceptance suite

pub mod bounds;
pub mod chart;
pub mod eigen;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod identities;
pub mod jet;
pub mod quad;
pub mod space1d;

pub use chart::{Chart, ChartId};
pub use error::{Error, Result};
pub use field::ScalarField;
pub use jet::{Jet, Univariate};
