//! Module Choi operators of bimodule maps and the complete-positive-order
//! sandwich test.

use faer::prelude::*;
use faer::c64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;

use crate::algebra::condexp::ConditionalExpectation;
use crate::algebra::module_basis::ModuleBasis;
use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::spectral::{min_eigenvalue, op_norm};
use crate::superop::{Picture, SuperOp};

/// chi_Phi = sum_ij |i><j| (x) Phi(xi_i^dag xi_j); positive iff Phi is CP
/// as an N-bimodule map.
#[derive(Clone, Debug)]
pub struct ModuleChoi {
    pub matrix: Op,
    pub basis_len: usize,
}

/// Residual of the bimodule property of `phi` over random samples.
pub fn bimodule_residual(
    phi: &SuperOp,
    ce: &ConditionalExpectation,
    samples: usize,
    seed: u64,
) -> f64 {
    let mut rng = StdRng::seed_from_u64(seed);
    let d = ce.ambient_dim();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a = ce.random_algebra_element(&mut rng, false);
        let b = ce.random_algebra_element(&mut rng, false);
        let x = crate::rng::random_matrix(&mut rng, d);
        let lhs = phi.apply(&a.matmul(&x).matmul(&b));
        let rhs = a.matmul(&phi.apply(&x)).matmul(&b);
        let scale = (op_norm(&a) * op_norm(&x) * op_norm(&b)).max(1e-300);
        worst = worst.max(lhs.distance(&rhs) / scale);
    }
    worst
}

/// Builds the module Choi operator; the map must be an N-bimodule map
/// (verified on random triples to 1e-8).
pub fn module_choi(
    phi: &SuperOp,
    ce: &ConditionalExpectation,
    basis: &ModuleBasis,
) -> Result<ModuleChoi> {
    let res = bimodule_residual(phi, ce, 8, 0x6d0d);
    if res > 1e-8 {
        return Err(Error::NotBimodule(res));
    }
    let n = basis.len();
    let d = ce.ambient_dim();
    let mut m = Mat::<c64>::zeros(n * d, n * d);
    for (i, xi) in basis.elements.iter().enumerate() {
        for (j, xj) in basis.elements.iter().enumerate() {
            let img = phi.apply(&xi.adjoint().matmul(xj));
            for a in 0..d {
                for b in 0..d {
                    m[(i * d + a, j * d + b)] = img.at(a, b);
                }
            }
        }
    }
    Ok(ModuleChoi { matrix: Op::new(m), basis_len: n })
}

#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    /// || chi_Phi - chi_E ||_infinity, the premise of the implication.
    pub premise: f64,
    pub epsilon: f64,
    /// Min eigenvalue of Choi(Phi - (1-eps) E).
    pub lower_min_eig: f64,
    /// Min eigenvalue of Choi((1+eps) E - Phi).
    pub upper_min_eig: f64,
    pub lower_psd: bool,
    pub upper_psd: bool,
    pub holds: bool,
}

/// Tests (1-eps) E <=_cp Phi <=_cp (1+eps) E through the standard Choi
/// matrices of the differences.
pub fn cp_sandwich_check(phi: &SuperOp, e: &SuperOp, eps: f64) -> Result<SandwichReport> {
    if phi.picture != e.picture {
        return Err(Error::PictureMismatch("sandwich pictures differ".into()));
    }
    let lower = phi.sub(&e.scale(c64::new(1.0 - eps, 0.0)))?;
    let upper = e.scale(c64::new(1.0 + eps, 0.0)).sub(phi)?;
    let lo_choi = lower.choi().hermitize();
    let up_choi = upper.choi().hermitize();
    let lo_min = min_eigenvalue(&lo_choi)?;
    let up_min = min_eigenvalue(&up_choi)?;
    let scale = op_norm(&e.choi().hermitize()).max(1e-300);
    let tol = 1e-9 * scale;
    let lower_psd = lo_min >= -tol;
    let upper_psd = up_min >= -tol;
    Ok(SandwichReport {
        premise: f64::NAN,
        epsilon: eps,
        lower_min_eig: lo_min,
        upper_min_eig: up_min,
        lower_psd,
        upper_psd,
        holds: lower_psd && upper_psd,
    })
}

/// Full instance of the implication: computes the module-Choi premise
/// eps = ||chi_Phi - chi_E|| and checks the cp sandwich at that eps.
pub fn sandwich_implication(
    phi: &SuperOp,
    ce: &ConditionalExpectation,
    basis: &ModuleBasis,
) -> Result<SandwichReport> {
    let e = ce.superop(phi.picture)?;
    let chi_phi = module_choi(phi, ce, basis)?;
    let chi_e = module_choi(&e, ce, basis)?;
    let premise = op_norm(&chi_phi.matrix.sub(&chi_e.matrix).hermitize());
    let mut rep = cp_sandwich_check(phi, &e, premise.min(1.0).max(1e-15))?;
    rep.premise = premise;
    rep.epsilon = premise;
    Ok(rep)
}

/// Random N-bimodule maps Phi(X) = sum_ij c_ij K_i X K_j^dag with Kraus
/// directions from the commutant; `cp` selects a PSD coefficient matrix.
pub fn random_bimodule_map(
    ce: &ConditionalExpectation,
    cp: bool,
    seed: u64,
) -> Result<SuperOp> {
    let d = ce.ambient_dim();
    let mut rng = StdRng::seed_from_u64(seed);
    let comm = crate::algebra::structure::commutant(&ce.algebra.algebra_basis, d)?;
    let k = comm.len().min(4);
    let c = {
        let g = crate::rng::random_matrix(&mut rng, k);
        if cp {
            g.matmul(&g.adjoint()).hermitize()
        } else {
            g.hermitize()
        }
    };
    let mut m = Mat::<c64>::zeros(d * d, d * d);
    for i in 0..k {
        for j in 0..k {
            let term =
                SuperOp::from_left_right(&comm[i], &comm[j].adjoint(), Picture::Heisenberg)?;
            m += Scale(c.at(i, j)) * &term.matrix;
        }
    }
    SuperOp::from_matrix(m, Picture::Heisenberg)
}
