//! The amalgamated L_1^infinity norm on positive elements,
//! ||x|| = inf { tr(sigma_tr b) : b in N, b >= x }, a small semidefinite
//! program solved over the algebra coordinates with a log-det barrier and
//! damped Newton steps, started deterministically from b = ||x||_inf 1.
//!
//! On the central path the duality gap of the barrier subproblem is mu
//! times the ambient dimension, which certifies the reported value.

use faer::c64;
use faer::prelude::*;
use serde::Serialize;

use crate::algebra::condexp::ConditionalExpectation;
use crate::error::{Error, Result};
use crate::matrix::{hs_inner, Op};
use crate::spectral::{eigh, is_psd, matrix_function, op_norm, MatrixFn, SingularMode};

#[derive(Clone, Debug, Serialize)]
pub struct L1InfResult {
    pub value: f64,
    pub iterations: usize,
    /// Certified duality gap at the final barrier parameter.
    pub gap: f64,
    pub certified: bool,
}

/// Hermitian HS-orthonormal basis of the algebra.
fn hermitian_algebra_basis(ce: &ConditionalExpectation) -> Vec<Op> {
    let mut cands = Vec::new();
    for b in &ce.algebra.algebra_basis {
        cands.push(b.add(&b.adjoint()).scale(c64::new(0.5, 0.0)).hermitize());
        cands.push(b.sub(&b.adjoint()).scale(c64::new(0.0, 0.5)).hermitize());
    }
    let mut basis: Vec<Op> = Vec::new();
    for x in cands {
        let mut v = x;
        for _ in 0..2 {
            for e in &basis {
                let c = hs_inner(e, &v).re;
                v = v.sub(&e.scale(c64::new(c, 0.0)));
            }
        }
        let n = hs_inner(&v, &v).re.sqrt();
        if n > 1e-10 {
            basis.push(v.scale(c64::new(1.0 / n, 0.0)));
        }
    }
    basis
}

/// Computes the norm for PSD `x`; reports the certified duality gap.
pub fn l1inf_norm_positive(ce: &ConditionalExpectation, x: &Op) -> Result<L1InfResult> {
    if !is_psd(&x.hermitize(), 1e-9)? {
        return Err(Error::InvalidParameter("x must be positive semidefinite".into()));
    }
    let x = x.hermitize();
    let d = x.dim();
    let sigma_tr = ce.sigma_tr();
    let basis = hermitian_algebra_basis(ce);
    let q = basis.len();
    let ell: Vec<f64> = basis.iter().map(|f| sigma_tr.matmul(f).trace().re).collect();

    let xnorm = op_norm(&x).max(1e-14);
    // coefficients of the deterministic start b = (||x||_inf + margin) 1
    let mut coeff = vec![0.0f64; q];
    let one = Op::identity(d);
    for (k, f) in basis.iter().enumerate() {
        coeff[k] = hs_inner(f, &one).re * (1.05 * xnorm);
    }
    let assemble = |c: &[f64]| -> Op {
        let mut b = Op::zeros(d);
        for (f, &v) in basis.iter().zip(c) {
            b = b.add(&f.scale(c64::new(v, 0.0)));
        }
        b.hermitize()
    };

    let mut mu = xnorm;
    let mut iterations = 0usize;
    let target = 1e-8 * xnorm.max(1e-8);
    while mu * d as f64 > target {
        // Newton iterations for f(c) = ell . c - mu log det(B(c) - x)
        for _ in 0..40 {
            iterations += 1;
            let b = assemble(&coeff);
            let slack = b.sub(&x).hermitize();
            let sinv = matrix_function(&slack, MatrixFn::Inv, SingularMode::Strict, 1e-300)?;
            let mut grad = vec![0.0f64; q];
            let sf: Vec<Op> = basis.iter().map(|f| sinv.matmul(f)).collect();
            for k in 0..q {
                grad[k] = ell[k] - mu * sf[k].trace().re;
            }
            let hess =
                Mat::<f64>::from_fn(q, q, |i, j| mu * sf[i].matmul(&sf[j]).trace().re);
            let reg = Mat::<f64>::from_fn(q, q, |i, j| {
                hess[(i, j)] + if i == j { 1e-12 * mu.max(1e-12) } else { 0.0 }
            });
            let rhs = Col::<f64>::from_fn(q, |k| grad[k]);
            let step = match reg.llt(faer::Side::Lower) {
                Ok(f) => f.solve(&rhs),
                Err(_) => break,
            };
            // line search keeping the slack positive definite
            let mut t = 1.0f64;
            let mut moved = false;
            for _ in 0..40 {
                let trial: Vec<f64> =
                    coeff.iter().zip(step.iter()).map(|(c, s)| c - t * s).collect();
                let slack_t = assemble(&trial).sub(&x).hermitize();
                if eigh(&slack_t)?.min() > 0.0 {
                    coeff = trial;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            let newton_dec: f64 =
                grad.iter().zip(step.iter()).map(|(g, s)| g * s).sum::<f64>().abs();
            if !moved || newton_dec < 1e-13 * mu.max(1e-13) {
                break;
            }
        }
        mu *= 0.2;
    }
    let mu_final = mu / 0.2; // last barrier parameter actually solved
    let b = assemble(&coeff);
    let value = sigma_tr.matmul(&b).trace().re;
    // explicit dual candidate Y = mu (b - x)^{-1} >= 0 with
    // P_N(Y) ~ sigma_tr at Newton convergence; dual value tr(Y x)
    let slack = b.sub(&x).hermitize();
    let sinv = matrix_function(&slack, MatrixFn::Inv, SingularMode::Strict, 1e-300)?;
    let dual = mu_final * sinv.matmul(&x).trace().re;
    let gap = (value - dual).abs().max(mu_final * d as f64);
    Ok(L1InfResult { value, iterations, gap, certified: gap <= 1e-6 * value.max(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::structure::{discover_algebra, planted_algebra, Block};
    use crate::rng::random_psd;
    use crate::spectral::kosaki_norm;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn planted_tracial(seed: u64, dim: usize, blocks: &[Block]) -> ConditionalExpectation {
        let mut rng = StdRng::seed_from_u64(seed);
        let (_, gens) = planted_algebra(&mut rng, dim, blocks);
        ConditionalExpectation::tracial(discover_algebra(&gens, dim).unwrap())
    }

    #[test]
    fn identity_has_norm_one() {
        let ce = planted_tracial(101, 4, &[Block { dh: 2, dk: 2 }]);
        let res = l1inf_norm_positive(&ce, &Op::identity(4)).unwrap();
        assert!((res.value - 1.0).abs() < 1e-7, "norm(1) = {}", res.value);
        assert!(res.certified, "gap {}", res.gap);
    }

    #[test]
    fn algebra_elements_recover_weighted_trace() {
        // for x in N the optimum is b = x: value = tr(sigma_tr x)
        let mut rng = StdRng::seed_from_u64(102);
        let ce = planted_tracial(103, 4, &[Block { dh: 2, dk: 1 }, Block { dh: 1, dk: 2 }]);
        for _ in 0..5 {
            let a = ce.random_algebra_element(&mut rng, true);
            let x = a.matmul(&a).hermitize(); // PSD element of N
            let res = l1inf_norm_positive(&ce, &x).unwrap();
            let want = ce.sigma_tr().matmul(&x).trace().re;
            assert!(
                (res.value - want).abs() < 1e-5 * want.max(1.0),
                "value {} vs tr(sigma_tr x) {want}",
                res.value
            );
        }
    }

    #[test]
    fn sandwich_between_l1_and_operator_norm() {
        // ||x||_{L1(sigma_tr)} <= ||x||_{L1^inf} <= ||x||_inf for PSD x
        let mut rng = StdRng::seed_from_u64(104);
        let ce = planted_tracial(105, 4, &[Block { dh: 2, dk: 2 }]);
        let sigma_tr = ce.sigma_tr();
        for _ in 0..8 {
            let x = random_psd(&mut rng, 4);
            let res = l1inf_norm_positive(&ce, &x).unwrap();
            let lower = kosaki_norm(&x, 1.0, &sigma_tr).unwrap();
            let upper = op_norm(&x);
            assert!(
                res.value >= lower - 1e-6 * (1.0 + lower),
                "L1^inf {} below L1 {lower}",
                res.value
            );
            assert!(
                res.value <= upper + 1e-6 * (1.0 + upper),
                "L1^inf {} above op norm {upper}",
                res.value
            );
        }
    }

    #[test]
    fn trivial_algebra_gives_operator_norm() {
        // N = C1: the optimum is lambda_max(x)
        let ce =
            ConditionalExpectation::tracial(discover_algebra(&[Op::identity(3)], 3).unwrap());
        let mut rng = StdRng::seed_from_u64(106);
        let x = random_psd(&mut rng, 3);
        let res = l1inf_norm_positive(&ce, &x).unwrap();
        assert!((res.value - op_norm(&x)).abs() < 1e-6 * op_norm(&x));
    }

    #[test]
    fn non_psd_rejected() {
        let ce = planted_tracial(107, 4, &[Block { dh: 2, dk: 2 }]);
        let x = Op::diag_real(&[1.0, -0.5, 0.2, 0.0]);
        assert!(l1inf_norm_positive(&ce, &x).is_err());
    }
}
