//! Davies generators for commuting chain Hamiltonians: bath functions, Bohr
//! decompositions, GKLS site pieces, regional generators, and the spectral
//! machinery for their fixed points and gaps.

mod bath;
mod bohr;
pub mod local;
mod generator;
mod sector;

pub use bath::{Bath, BathKind};
pub use bohr::{bohr_decompose, BohrDecomposition, BOHR_CLUSTER_TOL_REL};
pub use generator::{
    build_site_piece, build_site_piece_with_couplings, DaviesGenerator, SitePiece,
};
pub use local::{LocalAction, LocalMap};
pub use sector::{FixedPointProjection, Sector, SectorEngine, KERNEL_TOL_REL, MAX_SECTOR_DIM};
