//! Type III* estimable functions and sums of squares for factorial linear
//! models — unbalanced designs, empty cells, and covariates included.
//!
//! The crate is organized around a small pipeline:
//!
//! - [`linalg`]: tolerance-controlled subspace algebra (orthonormal bases,
//!   projectors, intersections, complements, pseudoinverses);
//! - [`design`]: factor spaces, incidence matrices, the Kronecker effect
//!   matrices, and model specifications with covariate parts;
//! - [`engine`]: the Type III* construction for a designated effect — the
//!   projector, its sum of squares, the tested contrast space on the cell
//!   coefficients, and the estimable vs. lagniappe split;
//! - [`anova`]: assembled ANOVA tables, F tests, and estimability reports;
//! - [`formula`] / [`data`]: the model-formula grammar and CSV ingestion;
//! - [`verify`]: a seeded, oracle-backed harness that checks the engine's
//!   structural identities on randomized designs;
//! - [`render`]: text and JSON rendering of every report.

pub mod anova;
pub mod data;
pub mod design;
pub mod dist;
pub mod engine;
pub mod error;
pub mod formula;
pub mod linalg;
pub mod render;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Basis, Col, Mat, Tol};
