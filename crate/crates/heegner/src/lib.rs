//! CM points on modular curves, their images on elliptic curves over Q under
//! modular parameterizations, certified linear (in)dependence of those images
//! over End(E), and desk-scale censuses of dependent and exemplary special
//! graphs.
//!
//! The crate is organized as:
//! - [`numerics`]: ball arithmetic over MPFR floats, q-series with certified
//!   tail bounds, LLL lattice reduction, integer relation detection, and
//!   algebraic recognition
//! - [`quadforms`]: imaginary quadratic discriminants, reduced and Heegner
//!   forms, class numbers, Hilbert class polynomials
//! - [`modular`]: the j-function, fundamental domains, classical modular
//!   polynomials, isogeny testing, Hecke neighbors, D-independence
//! - [`elliptic`]: curves over Q, group law, torsion, periods, elliptic
//!   logarithms, canonical heights, End(E)
//! - [`modparam`]: newforms, the parameterization X_0(N) -> E, Heegner point
//!   construction, correspondences
//! - [`relations`]: relation lattices over End(E), the Masser coefficient
//!   bound, torsion cosets
//! - [`census`]: special graph semantics, defect, dependent/exemplary
//!   classification, tuple and Hecke-orbit scans
//! - [`cache`]: JSONL disk caches shared by the CLI

pub mod cache;
pub mod census;
pub mod elliptic;
pub mod modparam;
pub mod modular;
pub mod numerics;
pub mod quadforms;
pub mod relations;

use std::fmt;

/// Crate-wide error type. Variants correspond to the failure modes named in
/// the operation contracts; anything else is `Internal`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Discriminant not negative or not 0, 1 mod 4.
    InvalidDiscriminant(i64),
    /// A point expected in the upper half plane had Im <= 0.
    NotUpperHalfPlane,
    /// Lattice basis rows are linearly dependent.
    DegenerateBasis,
    /// Working precision is too low for the requested certified decision.
    InsufficientPrecision,
    /// A numeric predicate could not be decided at the current precision.
    Indeterminate(String),
    /// Cusp other than infinity or 0.
    UnsupportedCusp(String),
    /// Modular polynomial level outside the supported range.
    UnsupportedLevel(u32),
    /// No Heegner form exists for the given discriminant and level.
    HeegnerHypothesisFails { disc: i64, level: u32 },
    /// A point does not satisfy its curve equation.
    PointNotOnCurve,
    /// Curve discriminant vanishes.
    SingularCurve,
    /// Relation search had no height floor and exceeded the fallback cap.
    UnboundedSearch,
    /// Malformed user input (CLI parsing and similar).
    InvalidInput(String),
    /// Invariant violation or I/O problem.
    Internal(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDiscriminant(d) => write!(f, "invalid discriminant {d}"),
            Error::NotUpperHalfPlane => write!(f, "not in upper half plane"),
            Error::DegenerateBasis => write!(f, "degenerate basis"),
            Error::InsufficientPrecision => write!(f, "insufficient precision"),
            Error::Indeterminate(what) => {
                write!(f, "indeterminate at current precision: {what}")
            }
            Error::UnsupportedCusp(c) => write!(f, "unsupported cusp {c}"),
            Error::UnsupportedLevel(n) => write!(f, "level {n} out of supported range"),
            Error::HeegnerHypothesisFails { disc, level } => {
                write!(f, "Heegner hypothesis fails for disc {disc} at level {level}")
            }
            Error::PointNotOnCurve => write!(f, "point not on curve"),
            Error::SingularCurve => write!(f, "singular curve"),
            Error::UnboundedSearch => write!(f, "unbounded search"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

/// Default working precision in bits. Sufficient for class polynomials with
/// |disc| <= 10^4 and class numbers up to about 40 at desk scale.
pub const DEFAULT_PREC: u32 = 256;

/// Minimum accepted working precision.
pub const MIN_PREC: u32 = 64;
