//! Subalgebra indices: the exact block formula, a brute-force variational
//! estimate, the non-tracial bounds, and the max-relative entropy.

use faer::c64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;

use crate::algebra::condexp::ConditionalExpectation;
use crate::algebra::structure::MatrixAlgebra;
use crate::error::Result;
use crate::matrix::Op;
use crate::rng::{random_matrix, random_pure};
use crate::spectral::{eigh, matrix_function, MatrixFn, SingularMode};

/// Index of B(H) : N from the block data:
/// C = sum_i min(dh_i, dk_i) dk_i, C_cb = sum_i dk_i^2.
pub fn indices_formula(algebra: &MatrixAlgebra) -> (f64, f64) {
    let c: usize = algebra.blocks.iter().map(|b| b.dh.min(b.dk) * b.dk).sum();
    let c_cb: usize = algebra.blocks.iter().map(|b| b.dk * b.dk).sum();
    (c as f64, c_cb as f64)
}

/// D_max(rho || omega) = ln inf{c : rho <= c omega}; +infinity when the
/// support of rho leaks outside the support of omega.
pub fn dmax(rho: &Op, omega: &Op) -> Result<f64> {
    let oe = eigh(&omega.hermitize())?;
    let scale = oe.spectral_norm().max(1e-300);
    // rho weight on ker(omega)
    let mut leak = 0.0f64;
    for (j, &v) in oe.vals.iter().enumerate() {
        if v > 1e-12 * scale {
            continue;
        }
        let mut amp = 0.0;
        for a in 0..rho.dim() {
            let mut s = c64::ZERO;
            for i in 0..rho.dim() {
                s += rho.at(a, i) * oe.vecs[(i, j)];
            }
            amp += (oe.vecs[(a, j)].conj() * s).re;
        }
        leak += amp.max(0.0);
    }
    if leak > 1e-10 {
        return Ok(f64::INFINITY);
    }
    let inv_sqrt = matrix_function(
        &omega.hermitize(),
        MatrixFn::Power(-0.5),
        SingularMode::Pseudo,
        1e-12 * scale,
    )?;
    let sandwiched = inv_sqrt.matmul(rho).matmul(&inv_sqrt).hermitize();
    Ok(eigh(&sandwiched)?.max().max(0.0).ln())
}

/// The value whose supremum over states defines the index:
/// lambda_max(E(rho)^{-1/2} rho E(rho)^{-1/2}) with E the chosen picture map.
fn index_value(rho: &Op, e_rho: &Op) -> Result<f64> {
    Ok(dmax(rho, e_rho)?.exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct IndexEstimate {
    pub value: f64,
    pub samples: usize,
    pub ascent_steps: usize,
}

/// Brute-force lower estimate of C(M : N): random pure and mixed starts
/// with local ascent of lambda_max(E_tr(rho)^{-1/2} rho E_tr(rho)^{-1/2}).
pub fn index_bruteforce(
    ce: &ConditionalExpectation,
    trials: usize,
    refine: usize,
    seed: u64,
) -> Result<IndexEstimate> {
    let dim = ce.ambient_dim();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut best = 1.0f64;
    let mut samples = 0usize;
    let mut steps = 0usize;
    for trial in 0..trials {
        let rho = if trial % 2 == 0 {
            random_pure(&mut rng, dim)
        } else {
            crate::rng::random_density(&mut rng, dim)
        };
        let e_rho = ce.apply_tracial(&rho).hermitize();
        let mut current = index_value(&rho, &e_rho)?;
        samples += 1;
        best = best.max(current);
        let mut m = crate::spectral::msqrt(&rho.hermitize())?;
        let mut step = 0.2f64;
        let mut rejects = 0usize;
        for _ in 0..refine {
            let dir = random_matrix(&mut rng, dim);
            let m_try = m.add(&dir.scale(c64::new(step, 0.0)));
            let w = m_try.matmul(&m_try.adjoint()).hermitize();
            let tr = w.trace().re;
            if tr < 1e-14 {
                continue;
            }
            let rho_try = w.scale(c64::new(1.0 / tr, 0.0));
            let value = index_value(&rho_try, &ce.apply_tracial(&rho_try).hermitize())?;
            samples += 1;
            steps += 1;
            if value > current {
                current = value;
                m = m_try;
                step = (step * 1.3).min(0.8);
                rejects = 0;
            } else {
                rejects += 1;
                if rejects >= 6 {
                    step *= 0.5;
                    rejects = 0;
                    if step < 1e-6 {
                        break;
                    }
                }
            }
            best = best.max(current);
        }
    }
    Ok(IndexEstimate { value: best, samples, ascent_steps: steps })
}

#[derive(Clone, Debug, Serialize)]
pub struct CtauBounds {
    /// mu_min(tau)^{-1} C when tau is faithful.
    pub via_tau: Option<f64>,
    /// mu_min(sigma)^{-1} C for the supplied invariant state.
    pub via_sigma: Option<f64>,
    /// The smaller of the finite bounds.
    pub bound: f64,
    pub provenance: String,
    pub finite: bool,
}

/// Upper bounds on C_tau(M : N) from the tracial index.
pub fn ctau_bounds(
    ce: &ConditionalExpectation,
    sigma_invariant: Option<&Op>,
) -> Result<CtauBounds> {
    let (c, _) = indices_formula(&ce.algebra);
    let mu_tau = ce.mu_min_tau()?;
    let via_tau = if mu_tau > 1e-14 { Some(c / mu_tau) } else { None };
    let via_sigma = match sigma_invariant {
        Some(s) => {
            let mu = eigh(&s.hermitize())?.min();
            if mu > 1e-14 {
                Some(c / mu)
            } else {
                None
            }
        }
        None => None,
    };
    let (bound, provenance, finite) = match (via_tau, via_sigma) {
        (Some(a), Some(b)) if b < a => (b, "mu_min(sigma)^-1 C".to_string(), true),
        (Some(a), _) => (a, "mu_min(tau)^-1 C".to_string(), true),
        (None, Some(b)) => (b, "mu_min(sigma)^-1 C".to_string(), true),
        (None, None) => (
            f64::INFINITY,
            "tau not faithful: index infinite".to_string(),
            false,
        ),
    };
    Ok(CtauBounds { via_tau, via_sigma, bound, provenance, finite })
}

/// Same bound for the completely bounded index C_{tau,cb}.
pub fn ctau_cb_bound(ce: &ConditionalExpectation, sigma_invariant: Option<&Op>) -> Result<f64> {
    let (_, c_cb) = indices_formula(&ce.algebra);
    let mu_tau = ce.mu_min_tau()?;
    let mut bound = if mu_tau > 1e-14 { c_cb / mu_tau } else { f64::INFINITY };
    if let Some(s) = sigma_invariant {
        let mu = eigh(&s.hermitize())?.min();
        if mu > 1e-14 {
            bound = bound.min(c_cb / mu);
        }
    }
    Ok(bound)
}
