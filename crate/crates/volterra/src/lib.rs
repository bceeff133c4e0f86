//! Numerical boundedness and compactness criteria for Volterra-type
//! integral operators between weighted sup-norm spaces and Bloch-type
//! spaces of analytic functions on the unit disk.
//!
//! The crate models analytic functions as truncated power series, weights
//! as validated radial evaluators with taxonomy metadata, and each
//! operator-theoretic characterization as a sampled criterion quantity with
//! a refinement history and a verdict. The `verify` module cross-checks
//! every applicable criterion against direct operator-norm estimates.

pub mod criteria;
pub mod grid;
pub mod operators;
pub mod series;
pub mod verify;
pub mod weights;

pub use grid::GridSpec;
pub use series::TruncatedSeries;
pub use weights::{make_weight, RadialWeight};
