//! Succinct finite-horizon Markov decision processes.
//!
//! States are assignments to Boolean variables; transitions, rewards,
//! policies and value functions are Boolean circuits. The crate evaluates
//! policies exactly (rational arithmetic), checks value functions for
//! consistency, extracts policies from them, and generates SAT-family
//! reduction instances together with brute-force oracles that confirm each
//! instance behaves as its construction promises.

pub mod bits;
pub mod circuit;
pub mod error;
pub mod evaluator;
pub mod gen;
pub mod limits;
pub mod manifest;
pub mod mdp;
pub mod oracle;
pub mod policy;
pub mod rational;
pub mod reductions;
pub mod suites;
pub mod value;

pub use bits::BitVector;
pub use circuit::{Circuit, CircuitBuilder, Gate, Ref};
pub use error::{Error, Result};
pub use limits::Limits;
pub use mdp::{AnyMdp, BoundedActionMdp, ExplicitMdp, MdpModel, SuccinctMdp};
pub use policy::{
    ExplicitPolicy, HistoryPolicy, MarkovPolicy, Policy, StationaryPolicy, TimedPolicy,
};
pub use rational::Rational;
pub use value::{ValueCircuit, ValueSource, ValueTable};
