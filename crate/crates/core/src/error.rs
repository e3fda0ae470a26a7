use alloc::boxed::Box;
use alloc::string::String;
use core::fmt;

use crate::equilibrium::EquilibriumResult;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A value violates a documented precondition. `field` names the offending input.
    Invalid {
        field: String,
        reason: String,
    },
    UnknownPath(usize),
    UnknownArc(usize),
    UnknownNode(usize),
    Unreachable {
        origin: usize,
        destination: usize,
    },
    /// The charging unit price is undefined (no energy at all).
    Domain(&'static str),
    /// The solver hit `max_iterations`; the last iterate is attached.
    NotConverged(Box<EquilibriumResult>),
    /// A toll grid point failed to solve.
    TollPoint {
        toll: f64,
        source: Box<Error>,
    },
    /// An equilibrium sweep point (fuel price, EV share, ...) failed to solve.
    SweepPoint {
        value: f64,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Prefix the field name, e.g. `capacity` becomes `arcs[2].capacity`.
    pub fn within(self, prefix: &str) -> Self {
        match self {
            Error::Invalid { field, reason } => Error::Invalid {
                field: alloc::format!("{prefix}.{field}"),
                reason,
            },
            other => other,
        }
    }

    pub fn is_not_converged(&self) -> bool {
        match self {
            Error::NotConverged(_) => true,
            Error::TollPoint { source, .. } | Error::SweepPoint { source, .. } => source.is_not_converged(),
            _ => false,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            Error::UnknownPath(p) => write!(f, "unknown path #{p}"),
            Error::UnknownArc(a) => write!(f, "unknown arc #{a}"),
            Error::UnknownNode(n) => write!(f, "unknown node #{n}"),
            Error::Unreachable { origin, destination } => {
                write!(f, "node #{destination} is unreachable from node #{origin}")
            }
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::NotConverged(last) => write!(
                f,
                "no convergence after {} iterations (relative gap {:e})",
                last.iterations, last.relative_gap
            ),
            Error::TollPoint { toll, source } => write!(f, "toll {toll}: {source}"),
            Error::SweepPoint { value, source } => write!(f, "sweep value {value}: {source}"),
        }
    }
}

impl core::error::Error for Error {}
