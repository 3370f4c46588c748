//! Relative entropy and its conditional version.

use crate::error::Result;
use crate::matrix::Op;
use crate::sites::{complement_sites, SiteSpace};
use crate::spectral::{eigh_checked, trace_norm};

/// Eigenvalues below this floor are clipped inside logarithms; random
/// nearly pure states are rank deficient in floating point.
pub const ENTROPY_EIG_FLOOR: f64 = 1e-12;

/// Relative support weight above which the support condition is declared
/// violated and the entropy is +infinity.
const SUPPORT_TOL: f64 = 1e-10;

/// D(rho || sigma) = tr(rho ln rho - rho ln sigma) in nats, or +infinity
/// when supp(rho) leaks outside supp(sigma).
pub fn relative_entropy(rho: &Op, sigma: &Op) -> Result<f64> {
    let re = eigh_checked(rho, 1e-8)?;
    let se = eigh_checked(sigma, 1e-8)?;
    // weight of rho on the null space of sigma
    let mut leak = 0.0f64;
    for (j, &sv) in se.vals.iter().enumerate() {
        if sv > ENTROPY_EIG_FLOOR {
            continue;
        }
        // <v_j| rho |v_j>
        let mut val = 0.0;
        for a in 0..rho.dim() {
            let mut amp = faer::c64::ZERO;
            for i in 0..rho.dim() {
                amp += rho.at(a, i) * se.vecs[(i, j)];
            }
            val += (se.vecs[(a, j)].conj() * amp).re;
        }
        leak += val.max(0.0);
    }
    if leak > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    let s_rho: f64 = re.vals.iter().map(|&p| {
        let pc = p.max(ENTROPY_EIG_FLOOR);
        p.max(0.0) * pc.ln()
    }).sum();
    let log_sigma = se.apply_fn(|x| x.max(ENTROPY_EIG_FLOOR).ln());
    let cross = rho.matmul(&log_sigma).trace().re;
    Ok((s_rho - cross).max(0.0))
}

/// Conditional relative entropy on a region C:
/// D_C(rho||sigma) = D(rho||sigma) - D(rho_{C^c} || sigma_{C^c}).
pub fn conditional_relative_entropy(
    rho: &Op,
    sigma: &Op,
    region: &[usize],
    space: &SiteSpace,
) -> Result<f64> {
    let full = relative_entropy(rho, sigma)?;
    if region.is_empty() {
        return Ok(0.0);
    }
    let comp = complement_sites(region, space.n);
    if comp.is_empty() {
        return Ok(full);
    }
    let rho_c = crate::sites::partial_trace(rho, &comp, space)?;
    let sigma_c = crate::sites::partial_trace(sigma, &comp, space)?;
    let reduced = relative_entropy(&rho_c, &sigma_c)?;
    Ok(full - reduced)
}

/// Trace distance tr|a - b| (no factor 1/2, matching the mixing-time
/// convention used throughout).
pub fn trace_distance(a: &Op, b: &Op) -> f64 {
    trace_norm(&a.sub(b))
}
