//! Distributed quantum-classical hybrid K-SAT solving with an exact
//! state-vector simulation of fixed-point amplitude amplification.
//!
//! The pipeline, top to bottom:
//!
//! * [`orchestrator`] splits the formula on its most frequent variables,
//!   covers the remaining assignment space with a binary covering code and
//!   hands each Hamming ball to a worker.
//! * [`pbs`] searches one ball: classical branching, center descent along
//!   a K-ary covering code, and simulated quantum search at small radii.
//! * [`fpsearch`] simulates the fixed-point search over flip sequences whose
//!   meaning is defined by [`fliptree`].
//! * [`formula`] and [`codes`] hold the data model; [`oracle`] holds
//!   exhaustive reference answers for testing.

pub mod codes;
pub mod error;
pub mod fliptree;
pub mod formula;
pub mod fpsearch;
pub mod oracle;
pub mod orchestrator;
pub mod pbs;

pub use error::{Error, Result};
pub use formula::{Assignment, Clause, Formula, Lit, PartialAssignment, Prefix, Restriction};
pub use orchestrator::{solve, Mode, ResourceModel, SolveConfig, SolveResult, Status};
