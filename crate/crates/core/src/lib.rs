//! Simulation and structure learning for the Past Influence Model: a
//! multivariate count process whose dynamics occasionally reset to the
//! observables from `d` steps in the past.
//!
//! The crate is organised by stage:
//!
//! - [`graph`]: influence graphs, their influence matrix and spectral radius
//! - [`simulator`]: trajectories with the global reset coin
//! - [`entropy`]: sample pairing and plug-in directed conditional entropy
//! - [`recgreedy`]: recursive greedy neighbourhood recovery
//! - [`bounds`]: alphabet sizes and the sample-size calculator
//! - [`oracle`]: exhaustive search and genie-pairing gaps for validation
//! - [`experiments`]: seeded trial grids, cross-validation of the threshold
//! - [`cli`]: the `pim` command line

pub mod bounds;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod oracle;
pub mod recgreedy;
pub mod simulator;
pub mod symbol;

pub use entropy::{build_pairs, cond_entropy, Estimator, JointCounts, PairMode, PairSet};
pub use error::{Error, Result};
pub use graph::{InfluenceGraph, InfluenceMatrix, NodeParams};
pub use recgreedy::{recover_graph, RecoveredGraph};
pub use simulator::{simulate, PimParams, ResetSpec, Trajectory, ZDist};
pub use symbol::Symbol;
