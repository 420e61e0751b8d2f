//! Finite-dimensional laboratory for orbital measures of unitarily invariant
//! infinite matrices.
//!
//! * [`matrix`]: lazily materialized points of `Mat` and `H`, corners, tails
//!   and the block-swap conjugation.
//! * [`ensembles`]: seeded random prefixes with known scaled statistics.
//! * [`haar`] and [`observable`]: Haar unitaries, orbital samples and
//!   Monte-Carlo orbital averages of windowed observables.
//! * [`spectral`]: scaled eigenvalue statistics, radial profiles and audits of
//!   the exact corner inequalities.
//! * [`weak`]: distances between empirical pushforwards and the recurrence /
//!   precompactness diagnostics.
//! * [`experiment`]: config-driven scenarios with deterministic CSV output.

pub mod descriptor;
pub mod ensembles;
pub mod error;
pub mod experiment;
pub mod haar;
pub mod matrix;
pub mod observable;
pub mod rng;
pub mod spectral;
pub mod weak;

pub use descriptor::PrefixDescriptor;
pub use error::{LabError, Result};
pub use matrix::{CheckU, CornerMatrix, Kind, MatrixPrefix, C64};
pub use observable::{Observable, ObservableSpec, Reference};
