//! Constant-slope normal forms for piecewise monotone interval maps.
//!
//! Maps are exact piecewise-affine [`pwmap::PwaMap`]s over rationals. The crate
//! counts laps to estimate topological entropy, finds Markov partitions and
//! their Perron data, builds the increasing semiconjugacy `psi` onto a map of
//! constant slope, and approximates non-Markov maps by Markov ones.

pub mod approximation;
pub mod coding;
pub mod entropy;
pub mod error;
pub mod fixtures;
pub mod graphmap;
pub mod markov;
pub mod operator;
pub mod pwmap;
pub mod rational;
pub mod semiconjugacy;

pub use error::{Error, Result};
pub use pwmap::{Direction, Lap, Node, PwaMap, Side};
pub use rational::Rational;
