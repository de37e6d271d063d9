use core::fmt;

/// Failures reported by the filtering core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A vector or matrix did not have the length the model requires.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// NaN or an infinity where only finite values are allowed.
    NonFinite(&'static str),
    /// A configuration value outside its admissible range.
    InvalidConfig(&'static str),
    /// Every particle carries log-zero weight.
    DegenerateEnsemble,
    /// Weights were expected to be normalized but are not.
    Unnormalized { log_total: f64 },
    /// A particle prefix did not have the length the update expected.
    PrefixLength { expected: usize, found: usize },
    /// The model cannot provide the requested capability.
    Unsupported(&'static str),
    /// Cholesky factorization failed.
    NotPositiveDefinite,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected length {expected}, found {found}"),
            Error::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::DegenerateEnsemble => f.write_str("all particles have zero weight"),
            Error::Unnormalized { log_total } => {
                write!(f, "weights are not normalized (log total {log_total})")
            }
            Error::PrefixLength { expected, found } => write!(
                f,
                "noise prefix has {found} filled coordinates, expected {expected}"
            ),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
            Error::NotPositiveDefinite => f.write_str("matrix is not positive definite"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> crate::Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

pub(crate) fn check_finite(what: &'static str, values: &[f64]) -> crate::Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
