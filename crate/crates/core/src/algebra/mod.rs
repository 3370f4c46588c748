//! Finite-dimensional subalgebra machinery: block-structure discovery,
//! conditional expectations, Pimsner-Popa indices, module bases, module Choi
//! operators and amalgamated norms.

mod condexp;
mod indices;
mod l1inf;
mod index_norm;
mod module_basis;
mod module_choi;
mod structure;

pub use condexp::ConditionalExpectation;
pub use indices::{
    ctau_bounds, ctau_cb_bound, dmax, index_bruteforce, indices_formula, CtauBounds,
    IndexEstimate,
};
pub use l1inf::{l1inf_norm_positive, L1InfResult};
pub use index_norm::{index_norm_inequality_check, IndexNormReport};
pub use module_basis::{module_basis, ModuleBasis, MODULE_RANK_TOL};
pub use module_choi::{
    bimodule_residual, cp_sandwich_check, module_choi, random_bimodule_map,
    sandwich_implication, ModuleChoi, SandwichReport,
};
pub use structure::{
    algebra_closure, commutant, discover_algebra, planted_algebra, Block, MatrixAlgebra,
    RECONSTRUCTION_TOL,
};
