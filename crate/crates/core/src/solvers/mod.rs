//! Minimizers for QUBO and Ising models.

mod anneal;
mod exact;
mod local;
mod sample;
mod schedule;
mod tabu;

pub use anneal::{anneal_flip, anneal_swap_ising, anneal_swap_ising_with, default_t0};
pub use exact::{brute_force, brute_force_eliminating, MAX_ENUMERATED_VARS};
pub use local::local_search;
pub use sample::{Sample, SampleSet, SolverStats, StopReason};
pub use schedule::{AnnealSchedule, Cooling, Temperatures};
pub use tabu::{tabu_decompose, SubSolver, TabuParams, TABU_TENURE};
