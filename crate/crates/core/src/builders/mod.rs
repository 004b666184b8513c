//! Problem Hamiltonians and decoders for independent set / clique, balanced
//! edge-cut (two-way Ising and K-way QUBO) and core-halo partitioning.

mod core_halo;
mod edge_cut;
mod mis;

pub use core_halo::{
    build_ch_qubo, build_ch_qubo_weighted, decode_ch, encode_ch, ChDecoding, ChVarIndex, ChWeights,
};
pub use edge_cut::{
    build_bisection_ising, build_bisection_ising_weighted, build_kway_qubo,
    build_kway_qubo_weighted, decode_bisection, decode_kway, encode_bisection, encode_kway,
    BisectionWeights, KwayDecoding, KwayVarIndex, KwayWeights,
};
pub use mis::{
    build_clique_kfixed_qubo, build_mis_qubo, decode_mis, CliqueWeights, MisDecoding, MIS_LINEAR,
    MIS_PENALTY,
};
