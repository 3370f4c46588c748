//! Hamiltonian specifications, Gibbs states and the chain covering geometry.

mod covering;
mod gibbs;
mod parse;
mod spec;

pub use covering::CoveringGeometry;
pub use gibbs::GibbsState;
pub use parse::{parse_ham, serialize_ham};
pub use spec::{
    cluster_state, custom, ising_chain, CommutationReport, HamiltonianSpec, Term,
};
