//! Numeric substrate: ball arithmetic, certified q-series evaluation,
//! lattice reduction, and integer relation detection.

pub mod ball;
pub mod lattice;
pub mod polyroots;
pub mod qseries;
pub mod relation;

pub use ball::{ComplexBall, RealBall};
pub use lattice::IntMat;
pub use qseries::QSeries;
