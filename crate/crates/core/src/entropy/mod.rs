//! Entropy functionals, entropy production, MLSI estimation and decay
//! tracking.

mod decay;
mod mlsi;
mod production;
mod relative;

pub use decay::{decay_trace, mixing_time, mixing_time_seeded_max, DecayTrace, MIXING_TIME_SEEDS};
pub use mlsi::{cmlsi_estimate, mlsi_estimate, mlsi_estimate_davies, MlsiBudget, MlsiEstimate};
pub use production::{
    additivity_check, entropy_production, entropy_production_gibbs, AdditivityReport,
    EntropyReport,
};
pub use relative::{
    conditional_relative_entropy, relative_entropy, trace_distance, ENTROPY_EIG_FLOOR,
};
