//! Numerical check of the inequality connecting the non-tracial index to
//! the amalgamated norm:
//! C_tau(M : N) >= sup { ||x||_{L1^inf} : x >= 0, tr(sigma_tr x) = 1 }.

use faer::c64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;

use crate::algebra::condexp::ConditionalExpectation;
use crate::algebra::indices::{ctau_bounds, dmax};
use crate::algebra::l1inf::l1inf_norm_positive;
use crate::error::Result;
use crate::rng::random_psd;
use crate::spectral::msqrt;

#[derive(Clone, Debug, Serialize)]
pub struct IndexNormReport {
    /// Brute-force lower estimate of C_tau (sup over sampled states of the
    /// max-relative-entropy exponential against E_*).
    pub ctau_estimate: f64,
    /// Upper bound mu_min^{-1} C for reference.
    pub ctau_upper_bound: f64,
    /// Largest sampled right-hand side ||x||_{L1^inf}.
    pub rhs_max: f64,
    pub samples: usize,
    pub ok: bool,
}

/// Samples positive elements, evaluates both sides, and asserts
/// LHS >= RHS - 1e-6. Each sampled x also feeds the C_tau ascent through
/// the substitution rho = sigma_tr^(1/2) x sigma_tr^(1/2), which dominates
/// the corresponding L1^inf value pointwise.
pub fn index_norm_inequality_check(
    ce: &ConditionalExpectation,
    samples: usize,
    seed: u64,
) -> Result<IndexNormReport> {
    let dim = ce.ambient_dim();
    let sigma_tr = ce.sigma_tr();
    let st_sqrt = msqrt(&sigma_tr)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut rhs_max: f64 = 0.0;
    let mut ctau_est: f64 = 1.0;
    for _ in 0..samples {
        let raw = random_psd(&mut rng, dim);
        let norm = sigma_tr.matmul(&raw).trace().re;
        if norm < 1e-12 {
            continue;
        }
        let x = raw.scale(c64::new(1.0 / norm, 0.0));
        let rhs = l1inf_norm_positive(ce, &x)?.value;
        rhs_max = rhs_max.max(rhs);
        // matching primal candidate for the index side
        let rho = {
            let m = st_sqrt.matmul(&x).matmul(&st_sqrt).hermitize();
            let t = m.trace().re;
            m.scale(c64::new(1.0 / t, 0.0))
        };
        let e_rho = ce.apply_star(&rho).hermitize();
        let v = dmax(&rho, &e_rho)?.exp();
        if v.is_finite() {
            ctau_est = ctau_est.max(v);
        }
    }
    let bound = ctau_bounds(ce, None)?.bound;
    let ok = ctau_est >= rhs_max - 1e-6;
    Ok(IndexNormReport {
        ctau_estimate: ctau_est,
        ctau_upper_bound: bound,
        rhs_max,
        samples,
        ok,
    })
}
