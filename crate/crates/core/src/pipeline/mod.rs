//! The global-to-local proof pipeline as computation: mixing operators,
//! cascade bounds, approximate tensorization, the quasi-local reduction and
//! the assembled decay certificate.

mod at;
mod cascade;
mod certify;
mod mixing;
mod quasilocal;

pub use at::{at_check, at_constant, covering_projections, AtCheckReport, AtConstant};
pub use cascade::{cascade_bounds, measured_cascade_etas, CascadeBounds, MeasuredEtas};
pub use certify::{
    certify, Certificate, CertifyOptions, CertifySeeds, RegionCertificate, KAPPA_TOL,
};
pub use mixing::{
    eta_product_first, h_operator_covering, h_operator_sites, mixing_scan, HOperator,
    MixingFit, MixingScan,
};
pub use quasilocal::{
    detectability_bound, interaction_degree, k_a, lambda_dl, quasilocal_at_check,
    region_projections, superop_from_apply, LambdaReport, QuasiLocalReport,
    DENSE_LAMBDA_GUARD,
};
