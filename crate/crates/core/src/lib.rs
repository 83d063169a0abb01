//! Exact-arithmetic toolkit for spans of `t^k e^{λ_n t}` on intervals.

pub mod carleson;
pub mod domain;
pub mod error;
pub mod gram;
pub mod lambda_analysis;
pub mod linalg;
pub mod moment;
pub mod mp;
pub mod products;
pub mod series;
pub mod source;

pub use domain::{FlatIndex, Interval, MultiplicitySequence, PrecisionContext, Sector};
pub use error::{Category, Error, Result};
