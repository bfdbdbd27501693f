//! Feature-model configuration as conjunctive queries over relational
//! encodings of a feature model, with a CSP baseline, diagnosis and a
//! benchmark harness.

pub mod bench;
pub mod csp;
pub mod diagnosis;
pub mod engine;
pub mod generate;
pub mod io;
pub mod model;
pub mod repr;
pub mod semantics;
pub mod solver;

pub use model::{Assignment, Configuration, FeatureModel};
pub use solver::{Approach, Solver, SolverOptions};
