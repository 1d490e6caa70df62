use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// Malformed expression; `pos` is a character offset into the source.
    Parse { pos: usize, msg: String },
    /// A function was evaluated outside its domain.
    Domain { expr: String, msg: String },
    /// A jet with zero constant term had to be inverted or rooted.
    Singular(String),
    /// The jet order is too low for the requested derivative.
    Order { needed: usize, have: usize, what: String },
    /// Metric or induced metric not positive definite, or degenerate chart.
    Geometry(String),
    /// Two independent computations of the same quantity disagree.
    Mismatch { what: String, residual: f64 },
    /// A coefficient has a pole in this dimension; `residue` is its numerator there.
    Pole { what: String, dim: usize, residue: f64 },
    /// A formula was requested outside the class of geometries it holds on.
    Scope(String),
    /// Everything else: bad arguments, unknown names.
    Invalid(String),
}

impl Error {
    pub fn order(needed: usize, have: usize, what: &str) -> Self {
        Error::Order { needed, have, what: what.into() }
    }

    /// True for errors caused by the input text rather than by the numbers.
    pub fn is_input(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Invalid(_))
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parse { pos, msg } => write!(f, "parse error at position {}: {}", pos, msg),
            Error::Domain { expr, msg } => write!(f, "{} in `{}`", msg, expr),
            Error::Singular(s) => write!(f, "singular jet: {}", s),
            Error::Order { needed, have, what } => {
                write!(f, "{} needs jet order {}, have {}", what, needed, have)
            }
            Error::Geometry(s) => write!(f, "degenerate geometry: {}", s),
            Error::Mismatch { what, residual } => {
                write!(f, "{} disagree (residual {:.3e})", what, residual)
            }
            Error::Pole { what, dim, residue } => {
                write!(f, "{} has a pole at n = {} (residue {:.6e})", what, dim, residue)
            }
            Error::Scope(s) => write!(f, "out of scope: {}", s),
            Error::Invalid(s) => f.write_str(s),
        }
    }
}

impl core::error::Error for Error {}
