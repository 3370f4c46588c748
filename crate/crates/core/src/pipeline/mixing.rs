//! The mixing operator h(sigma) and the exponential-decay scan of the
//! mixing condition.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::model::{GibbsState, HamiltonianSpec};
use crate::sites::{embed, partial_trace, SiteSpace};
use crate::spectral::{minv_sqrt, op_norm, singular_values};

/// Marginal of a full-chain state on an arbitrary sorted site set.
fn marginal_on(sigma: &Op, sites: &[usize], space: &SiteSpace) -> Result<Op> {
    partial_trace(sigma, sites, space)
}

/// Positions (1-based) of `part` inside the sorted union `kept`.
fn positions_in(kept: &[usize], part: &[usize]) -> Vec<usize> {
    part.iter()
        .map(|s| kept.iter().position(|k| k == s).expect("site in union") + 1)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct HOperator {
    /// || h ||_infinity of the sandwiched operator.
    pub norm: f64,
    /// || sigma_XZ (sigma_X (x) sigma_Z)^{-1} - 1 ||_infinity.
    pub unsandwiched_norm: f64,
    pub x_sites: Vec<usize>,
    pub z_sites: Vec<usize>,
}

/// Builds h = P^{-1/2} sigma_{XZ} P^{-1/2} - 1 with P = sigma_X (x) sigma_Z
/// on the union of two disjoint site sets (in chain order) and reports both
/// the sandwiched and unsandwiched norms; also returns the matrix.
pub fn h_operator_sites(
    sigma: &Op,
    x_sites: &[usize],
    z_sites: &[usize],
    space: &SiteSpace,
) -> Result<(Op, HOperator)> {
    if x_sites.iter().any(|s| z_sites.contains(s)) {
        return Err(Error::Geometry("X and Z overlap".into()));
    }
    if x_sites.is_empty() || z_sites.is_empty() {
        // degenerate split: h vanishes identically
        let h = Op::zeros(1);
        return Ok((
            h,
            HOperator {
                norm: 0.0,
                unsandwiched_norm: 0.0,
                x_sites: x_sites.to_vec(),
                z_sites: z_sites.to_vec(),
            },
        ));
    }
    let mut kept: Vec<usize> = x_sites.iter().chain(z_sites.iter()).copied().collect();
    kept.sort_unstable();
    let joint = marginal_on(sigma, &kept, space)?;
    let sx = marginal_on(sigma, x_sites, space)?;
    let sz = marginal_on(sigma, z_sites, space)?;
    let kept_space = SiteSpace::with_guard(kept.len(), space.d, space.guard())?;
    let px = embed(&sx, &positions_in(&kept, x_sites), &kept_space)?;
    let pz = embed(&sz, &positions_in(&kept, z_sites), &kept_space)?;
    let product = px.matmul(&pz).hermitize();
    let pinv_sqrt = minv_sqrt(&product, 1e-14)?;
    let one = Op::identity(joint.dim());
    let h = pinv_sqrt.matmul(&joint).matmul(&pinv_sqrt).sub(&one).hermitize();
    let norm = op_norm(&h);
    let pinv = pinv_sqrt.matmul(&pinv_sqrt);
    let un = joint.matmul(&pinv).sub(&one);
    let unsandwiched_norm = singular_values(&un)?.first().copied().unwrap_or(0.0);
    Ok((
        h,
        HOperator {
            norm,
            unsandwiched_norm,
            x_sites: x_sites.to_vec(),
            z_sites: z_sites.to_vec(),
        },
    ))
}

/// Reversed orientation || (sigma_X (x) sigma_Z) sigma_{XZ}^{-1} - 1 ||,
/// the form entering the joining steps of the cascade.
pub fn eta_product_first(
    sigma: &Op,
    x_sites: &[usize],
    z_sites: &[usize],
    space: &SiteSpace,
) -> Result<f64> {
    if x_sites.is_empty() || z_sites.is_empty() {
        return Ok(0.0);
    }
    let mut kept: Vec<usize> = x_sites.iter().chain(z_sites.iter()).copied().collect();
    kept.sort_unstable();
    let joint = marginal_on(sigma, &kept, space)?;
    let sx = marginal_on(sigma, x_sites, space)?;
    let sz = marginal_on(sigma, z_sites, space)?;
    let kept_space = SiteSpace::with_guard(kept.len(), space.d, space.guard())?;
    let px = embed(&sx, &positions_in(&kept, x_sites), &kept_space)?;
    let pz = embed(&sz, &positions_in(&kept, z_sites), &kept_space)?;
    let product = px.matmul(&pz).hermitize();
    let jinv = crate::spectral::matrix_function(
        &joint,
        crate::spectral::MatrixFn::Inv,
        crate::spectral::SingularMode::Strict,
        1e-14,
    )?;
    let m = product.matmul(&jinv).sub(&Op::identity(joint.dim()));
    Ok(singular_values(&m)?.first().copied().unwrap_or(0.0))
}

#[derive(Clone, Debug, Serialize)]
pub struct MixingScan {
    pub beta: f64,
    pub n: usize,
    pub separations: Vec<usize>,
    pub etas: Vec<f64>,
    /// (K, gamma) of the fit eta ~ K e^{-gamma |Y|}, when enough points
    /// stand above the floating floor.
    pub fit: Option<MixingFit>,
    /// Sandwiched norms, for the norm-comparison inequality.
    pub sandwiched: Vec<f64>,
    pub sandwich_leq_unsandwiched: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MixingFit {
    pub k: f64,
    pub gamma: f64,
    pub r2: f64,
}

impl MixingScan {
    /// CSV rows `separation, eta, sandwiched_norm` with a header.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::from("separation,eta,sandwiched_norm\n");
        for ((w, e), h) in self.separations.iter().zip(&self.etas).zip(&self.sandwiched) {
            let _ = writeln!(s, "{w},{e:.16e},{h:.16e}");
        }
        s
    }
}

/// eta(|Y|) = || sigma_XZ (sigma_X (x) sigma_Z)^{-1} - 1 || for the
/// three-interval split X | Y | Z with |Y| sweeping `y_sizes`.
pub fn mixing_scan(
    spec: &HamiltonianSpec,
    n: usize,
    beta: f64,
    y_sizes: &[usize],
) -> Result<MixingScan> {
    let space = SiteSpace::new(n, spec.local_dim)?;
    let h = spec.hamiltonian(n)?;
    let gibbs = GibbsState::new(&h, beta)?;
    let mut etas = Vec::with_capacity(y_sizes.len());
    let mut sandwiched = Vec::with_capacity(y_sizes.len());
    let mut ok = true;
    for &w in y_sizes {
        if w + 2 > n {
            return Err(Error::Geometry(format!("separator {w} too wide for n = {n}")));
        }
        let x_len = (n - w).div_ceil(2);
        let x: Vec<usize> = (1..=x_len).collect();
        let z: Vec<usize> = (x_len + w + 1..=n).collect();
        let (_, hop) = h_operator_sites(&gibbs.sigma, &x, &z, &space)?;
        if hop.norm > hop.unsandwiched_norm + 1e-10 {
            ok = false;
        }
        etas.push(hop.unsandwiched_norm);
        sandwiched.push(hop.norm);
    }
    let fit = fit_exponential(y_sizes, &etas);
    Ok(MixingScan {
        beta,
        n,
        separations: y_sizes.to_vec(),
        etas,
        fit,
        sandwiched,
        sandwich_leq_unsandwiched: ok,
    })
}

fn fit_exponential(sizes: &[usize], etas: &[f64]) -> Option<MixingFit> {
    // values at the floating floor are excluded
    let pts: Vec<(f64, f64)> = sizes
        .iter()
        .zip(etas)
        .filter(|(_, &e)| e > 1e-14)
        .map(|(&s, &e)| (s as f64, e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean = sy / n;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some(MixingFit { k: intercept.exp(), gamma: -slope, r2 })
}

/// h and its norms for a covering's complements C = B^c, D = A^c.
pub fn h_operator_covering(
    sigma: &Op,
    geom: &crate::model::CoveringGeometry,
    space: &SiteSpace,
) -> Result<(Op, HOperator)> {
    h_operator_sites(sigma, &geom.d_sites(), &geom.c_sites(), space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ising_chain;

    #[test]
    fn product_state_has_zero_h() {
        // beta = 0: Gibbs is a tensor product, h = 0 exactly
        let spec = ising_chain(1.0, 0.5);
        let n = 5;
        let space = SiteSpace::new(n, 2).unwrap();
        let sigma = GibbsState::new(&spec.hamiltonian(n).unwrap(), 0.0).unwrap().sigma;
        let (_, rep) = h_operator_sites(&sigma, &[1, 2], &[4, 5], &space).unwrap();
        assert!(rep.norm < 1e-12, "h = {}", rep.norm);
        assert!(rep.unsandwiched_norm < 1e-12);
    }

    #[test]
    fn growing_separator_shrinks_h() {
        let spec = ising_chain(1.0, 0.5);
        let n = 8;
        let beta = 0.5;
        let space = SiteSpace::new(n, 2).unwrap();
        let sigma = GibbsState::new(&spec.hamiltonian(n).unwrap(), beta).unwrap().sigma;
        let mut last = f64::INFINITY;
        for sep in 1..=4usize {
            let x: Vec<usize> = (1..=2).collect();
            let z: Vec<usize> = (3 + sep..=n).collect();
            let (_, rep) = h_operator_sites(&sigma, &x, &z, &space).unwrap();
            assert!(rep.norm <= last + 1e-12, "h not decreasing at sep {sep}");
            assert!(rep.norm <= rep.unsandwiched_norm + 1e-10, "sandwich inequality");
            last = rep.norm;
        }
    }

    #[test]
    fn scan_monotone_and_fits() {
        let spec = ising_chain(1.0, 0.5);
        let scan = mixing_scan(&spec, 9, 0.5, &[1, 2, 3, 4, 5]).unwrap();
        for w in scan.etas.windows(2) {
            assert!(w[1] < w[0], "eta not strictly decreasing: {:?}", scan.etas);
        }
        let fit = scan.fit.expect("fit exists");
        assert!(fit.gamma > 0.0);
        assert!(fit.r2 > 0.9, "R^2 = {}", fit.r2);
        assert!(scan.sandwich_leq_unsandwiched);
    }

    #[test]
    fn scan_at_beta_zero_is_flat_zero() {
        let spec = ising_chain(1.0, 0.5);
        let scan = mixing_scan(&spec, 7, 0.0, &[1, 2, 3]).unwrap();
        assert!(scan.etas.iter().all(|&e| e <= 1e-12));
        assert!(scan.fit.is_none(), "fit should be skipped at the floor");
    }

    #[test]
    fn covering_h_matches_direct_sites() {
        let spec = ising_chain(1.0, 0.5);
        let n = 9;
        let space = SiteSpace::new(n, 2).unwrap();
        let sigma = GibbsState::new(&spec.hamiltonian(n).unwrap(), 0.4).unwrap().sigma;
        let geom = crate::model::CoveringGeometry::build(n, 2, 1).unwrap();
        let (_, rep) = h_operator_covering(&sigma, &geom, &space).unwrap();
        // m = 1 exact tiling: D = [6,9], C = [1,4]
        let (_, direct) =
            h_operator_sites(&sigma, &[6, 7, 8, 9], &[1, 2, 3, 4], &space).unwrap();
        assert!((rep.norm - direct.norm).abs() < 1e-12);
    }
}
