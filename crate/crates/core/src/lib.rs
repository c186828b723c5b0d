//! Growth-theoretic experiments on free groups and finite direct products of
//! free groups.
//!
//! The crate enumerates Cayley balls and relative balls of subgroups, measures
//! Gromov products and four-point hyperbolicity, builds the connector-based
//! concatenation maps `(u, v) -> u x v` together with empirical fiber counts,
//! and brackets exponential growth rates of finite growth tables.
//!
//! Everything operates on [`Element`] values over a fixed [`GroupDescriptor`]
//! with its standard symmetric generating set.

pub mod cayley;
pub mod concat;
mod error;
pub mod group;
pub mod hyperbolic;
pub mod rate;
pub mod subgroup;

pub use cayley::{Ball, Budget, GrowthTable};
pub use concat::{AmbiguityReport, Concatenation, ConnectorKit};
pub use error::{Error, Result};
pub use group::{Element, GeneratorIndex, GroupDescriptor, Letter, Sign, Word};
pub use hyperbolic::{DiscretePath, FiniteMetric, HalfInt};
pub use rate::{FunctionSpec, RateEstimate, RateHypothesis};
pub use subgroup::{Homomorphism, Membership, StallingsGraph, SubgroupOracle};
