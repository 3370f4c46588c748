//! Module bases: families xi_i with E_N(xi_i^dag xi_j) = delta_ij p_i for
//! projections p_i in N, built by operator-valued Gram-Schmidt.

use faer::c64;

use crate::algebra::condexp::ConditionalExpectation;
use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::spectral::{eigh, matrix_function, MatrixFn, SingularMode};

/// Singular values of E(xi^dag xi) below this are treated as zero; module
/// norms are projection valued, not invertible.
pub const MODULE_RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ModuleBasis {
    pub elements: Vec<Op>,
    pub projections: Vec<Op>,
}

impl ModuleBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Reconstructs x = sum_i xi_i E(xi_i^dag x).
    pub fn reconstruct(&self, ce: &ConditionalExpectation, x: &Op) -> Op {
        let mut acc = Op::zeros(x.dim());
        for xi in &self.elements {
            acc = acc.add(&xi.matmul(&ce.apply(&xi.adjoint().matmul(x))));
        }
        acc
    }

    /// Max reconstruction residual over the matrix-unit basis.
    pub fn reconstruction_residual(&self, ce: &ConditionalExpectation) -> f64 {
        let d = ce.ambient_dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let e = Op::from_fn(d, |a, b| {
                    if (a, b) == (i, j) {
                        c64::ONE
                    } else {
                        c64::ZERO
                    }
                });
                worst = worst.max(self.reconstruct(ce, &e).distance(&e));
            }
        }
        worst
    }
}

/// Gram-Schmidt over N with the operator-valued inner product
/// <x, y>_N = E(x^dag y); spans all of M. Requires a faithful expectation.
pub fn module_basis(ce: &ConditionalExpectation) -> Result<ModuleBasis> {
    if !ce.faithful(1e-12)? {
        return Err(Error::NotFullRank(ce.mu_min_tau()?));
    }
    let d = ce.ambient_dim();
    let mut elements: Vec<Op> = Vec::new();
    let mut projections: Vec<Op> = Vec::new();
    // the identity leads so that N = M yields the canonical basis {1}
    let mut candidates = vec![Op::identity(d)];
    for i in 0..d {
        for j in 0..d {
            candidates.push(Op::from_fn(d, |a, b| {
                if (a, b) == (i, j) {
                    c64::ONE
                } else {
                    c64::ZERO
                }
            }));
        }
    }
    {
        for cand in candidates {
            // subtract the module span, twice for stability
            let mut v = cand;
            for _ in 0..2 {
                for xi in &elements {
                    let coeff = ce.apply(&xi.adjoint().matmul(&v));
                    v = v.sub(&xi.matmul(&coeff));
                }
            }
            let gram = ce.apply(&v.adjoint().matmul(&v)).hermitize();
            let top = eigh(&gram)?.max();
            if top <= MODULE_RANK_TOL {
                continue;
            }
            // normalize by the pseudo-inverse square root in N
            let g_inv_sqrt = matrix_function(
                &gram,
                MatrixFn::Power(-0.5),
                SingularMode::Pseudo,
                MODULE_RANK_TOL,
            )?;
            let xi = v.matmul(&g_inv_sqrt);
            let p = ce.apply(&xi.adjoint().matmul(&xi)).hermitize();
            elements.push(xi);
            projections.push(p);
        }
    }
    Ok(ModuleBasis { elements, projections })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::structure::{discover_algebra, planted_algebra, Block};
    use crate::matrix::{hs_inner, pauli};
    use crate::rng::random_matrix;
    use crate::spectral::op_norm;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn full_algebra_gives_identity_basis() {
        let alg = discover_algebra(&[pauli::x(), pauli::z()], 2).unwrap();
        let ce = ConditionalExpectation::tracial(alg);
        let mb = module_basis(&ce).unwrap();
        assert_eq!(mb.len(), 1);
        // xi_1 is a unitary in M with E(xi^dag xi) = 1 (for N = M, xi = 1
        // up to phase); the projection is the identity
        assert!(mb.projections[0].approx_eq(&Op::identity(2), 1e-9));
        assert!(mb.reconstruction_residual(&ce) < 1e-9);
    }

    #[test]
    fn scalars_give_hs_orthonormal_basis() {
        // N = C 1 in M_d: d^2 elements, HS-orthonormal up to normalization
        for d in [2usize, 3] {
            let alg = discover_algebra(&[Op::identity(d)], d).unwrap();
            let ce = ConditionalExpectation::tracial(alg);
            let mb = module_basis(&ce).unwrap();
            assert_eq!(mb.len(), d * d);
            for (i, a) in mb.elements.iter().enumerate() {
                for (j, b) in mb.elements.iter().enumerate() {
                    // E(a^dag b) = tr(a^dag b)/d here
                    let ip = hs_inner(a, b) * c64::new(1.0 / d as f64, 0.0);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip.re - want).abs() < 1e-8 && ip.im.abs() < 1e-8);
                }
            }
            assert!(mb.reconstruction_residual(&ce) < 1e-8);
        }
    }

    #[test]
    fn orthogonality_and_reconstruction_planted() {
        let mut rng = StdRng::seed_from_u64(81);
        let (_, gens) =
            planted_algebra(&mut rng, 6, &[Block { dh: 2, dk: 2 }, Block { dh: 2, dk: 1 }]);
        let alg = discover_algebra(&gens, 6).unwrap();
        let ce = ConditionalExpectation::tracial(alg);
        let mb = module_basis(&ce).unwrap();
        for (i, a) in mb.elements.iter().enumerate() {
            for (j, b) in mb.elements.iter().enumerate() {
                let g = ce.apply(&a.adjoint().matmul(b));
                if i == j {
                    // equals the stored projection; idempotent
                    assert!(g.approx_eq(&mb.projections[i], 1e-8));
                    assert!(g.matmul(&g).approx_eq(&g, 1e-7), "p_i not a projection");
                } else {
                    assert!(op_norm(&g) < 1e-8, "off-diagonal Gram {i},{j}");
                }
            }
        }
        assert!(mb.reconstruction_residual(&ce) < 1e-8);
        let x = random_matrix(&mut rng, 6);
        assert!(mb.reconstruct(&ce, &x).approx_eq(&x, 1e-8 * (1.0 + x.max_abs())));
    }

    #[test]
    fn unfaithful_expectation_rejected() {
        let mut rng = StdRng::seed_from_u64(82);
        let (_, gens) = planted_algebra(&mut rng, 4, &[Block { dh: 2, dk: 2 }]);
        let alg = discover_algebra(&gens, 4).unwrap();
        // tau singular: a pure state on K
        let tau = vec![Op::diag_real(&[1.0, 0.0])];
        let ce = ConditionalExpectation { algebra: alg, tau };
        assert!(module_basis(&ce).is_err());
    }
}
