//! QUBO and Ising encodings of graph problems (clique / independent set,
//! balanced edge-cut, core-halo partitioning), classical solvers for them,
//! and a simulation of the chimera embedding pipeline.

pub mod builders;
pub mod chimera;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod maxclique;
pub mod model;
pub mod partition;
pub mod rng;
pub mod solvers;

pub use error::{Error, Result};
pub use graph::Graph;
pub use model::{Assignment, Domain, IsingModel, QuadraticModel, QuboModel};
