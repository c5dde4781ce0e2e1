//! Exact and Monte-Carlo toolkit for the one-parameter family of
//! interval maps behind alpha-continued fractions.
//!
//! The crate has two halves that deliberately never feed into each other:
//!
//! * an exact half ([`exactnum`], [`cfrac`], [`alphamap`], [`matching`],
//!   [`tree`]) that detects and solves matching intervals over quadratic
//!   fields, builds the bisection tree of gaps, and certifies every interval
//!   it emits;
//! * a floating-point half ([`entropy`]) that estimates metric entropy by
//!   Birkhoff averages, simulates invariant densities, and extrapolates the
//!   entropy across a matching interval from a single density fit.

pub mod alphamap;
pub mod cfrac;
pub mod entropy;
pub mod exactnum;
pub mod matching;
pub mod tree;

pub use cfrac::{CFString, Interval, PeriodicCF};
pub use exactnum::{IntMatrix2, QuadSurd};
pub use matching::MatchingInterval;

