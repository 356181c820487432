//! Error type shared across the crate.

use alloc::string::String;
use core::fmt;

use crate::validate::ValidationReport;

/// Failures raised while expanding a design or computing power.
///
/// Structural problems with a [`crate::TrialSpec`] are *not* reported here
/// one at a time; [`crate::validate`] collects all of them into a
/// [`ValidationReport`], which [`crate::evaluate`] wraps in
/// [`Error::Invalid`].
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A marginal mean left the admissible range of the outcome family
    /// (binary means must lie strictly in (0, 1), count means must be
    /// positive).
    MeanRange { mu: f64, requirement: &'static str },
    /// A numeric argument was outside its domain (probabilities, dispersion,
    /// degrees of freedom, ...).
    Domain(String),
    /// A sequence mixes control and intervention cells non-monotonically,
    /// which has no defined exposure under an incremental effect model.
    /// `sequence` is 1-based.
    NonMonotoneSequence { sequence: usize },
    /// A calendar period was requested from a sequence that does not observe
    /// it. Both indices are 1-based.
    PeriodNotObserved { sequence: usize, period: usize },
    /// A working correlation (or other symmetric matrix) failed its Cholesky
    /// factorization; `pivot` is the 0-based row where the leading minor
    /// stopped being positive.
    NotPositiveDefinite { pivot: usize },
    /// The accumulated information matrix is singular: some regression
    /// parameter is not identified by the design.
    SingularInformation,
    /// The specification failed structural validation.
    Invalid(ValidationReport),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::MeanRange { mu, requirement } => {
                write!(f, "marginal mean {mu} violates '{requirement}'")
            }
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::NonMonotoneSequence { sequence } => write!(
                f,
                "sequence {sequence} switches back to control; exposure is undefined \
                 under an incremental effect model"
            ),
            Error::PeriodNotObserved { sequence, period } => {
                write!(f, "sequence {sequence} does not observe period {period}")
            }
            Error::NotPositiveDefinite { pivot } => write!(
                f,
                "matrix is not positive definite (factorization failed at pivot {pivot})"
            ),
            Error::SingularInformation => {
                write!(f, "information matrix is singular; the design does not identify every parameter")
            }
            Error::Invalid(report) => {
                write!(f, "specification failed validation with {} violation(s)", report.len())
            }
        }
    }
}

impl core::error::Error for Error {}
