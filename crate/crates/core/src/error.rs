//! Error type shared by the whole crate.
//!
//! Failure to converge is *not* an error: the fixed-point driver reports it
//! through [`crate::picard::PicardReport::converged`]. Errors are reserved
//! for inputs or states the solver cannot meaningfully continue from.

use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Malformed caller input: bad sizes, unknown names, invalid parameters.
    InvalidArgument(String),
    /// Element mapping with non-positive Jacobian determinant.
    DegenerateElement { element: usize, det_j: f64 },
    /// Affine drag law evaluated where `1 + beta p <= 0`.
    NonpositiveDrag { pressure: f64, factor: f64 },
    /// Geometry outside the supported feature set (e.g. strong normal-velocity
    /// data on a facet that is not axis-aligned).
    UnsupportedGeometry(String),
    /// Point source not collocated with a mesh node, or placed on a
    /// constrained pressure dof.
    SourcePlacement(String),
    /// Pure-flux problem whose boundary data and sources do not balance.
    IncompatibleFlux { imbalance: f64 },
    /// Direct factorization hit a zero (or non-finite) pivot.
    SingularMatrix {
        n_dofs: usize,
        pivot_index: usize,
        pivot: f64,
    },
    /// Linear solve finished without reaching the required residual.
    LinearSolveFailure {
        n_dofs: usize,
        residual: f64,
        tolerance: f64,
    },
    /// Closed-form solution evaluated outside its validity region.
    ModelBreakdown(String),
    /// Mesh (or other text) input that does not parse.
    Parse { line: usize, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::DegenerateElement { element, det_j } => write!(
                f,
                "element {element} has non-positive Jacobian determinant {det_j:e}"
            ),
            Error::NonpositiveDrag { pressure, factor } => write!(
                f,
                "affine drag law breaks down: 1 + beta*p = {factor:e} at p = {pressure:e}"
            ),
            Error::UnsupportedGeometry(msg) => write!(f, "unsupported geometry: {msg}"),
            Error::SourcePlacement(msg) => write!(f, "point source placement: {msg}"),
            Error::IncompatibleFlux { imbalance } => write!(
                f,
                "pure-flux problem is incompatible: net boundary flux minus sources = {imbalance:e}"
            ),
            Error::SingularMatrix {
                n_dofs,
                pivot_index,
                pivot,
            } => write!(
                f,
                "matrix of {n_dofs} dofs is singular: pivot {pivot_index} = {pivot:e}"
            ),
            Error::LinearSolveFailure {
                n_dofs,
                residual,
                tolerance,
            } => write!(
                f,
                "linear solve on {n_dofs} dofs stopped at residual {residual:e} (required {tolerance:e})"
            ),
            Error::ModelBreakdown(msg) => write!(f, "closed form invalid: {msg}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
