//! Conditional expectations onto a discovered block algebra, parameterized
//! by the block densities tau_i.

use faer::c64;

use crate::algebra::structure::MatrixAlgebra;
use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::spectral::eigh;
use crate::superop::{Picture, SuperOp};

/// E_N(X) = (+)_i tr_K(P_i X P_i (1 (x) tau_i)) (x) 1 and its preadjoint
/// E_N*(rho) = (+)_i tr_K(P_i rho P_i) (x) tau_i.
#[derive(Clone, Debug)]
pub struct ConditionalExpectation {
    pub algebra: MatrixAlgebra,
    /// Block densities on the multiplicity factors K_i.
    pub tau: Vec<Op>,
}

impl ConditionalExpectation {
    /// The trace-preserving conditional expectation (tau_i maximally mixed).
    pub fn tracial(algebra: MatrixAlgebra) -> Self {
        let tau = algebra
            .blocks
            .iter()
            .map(|b| Op::identity(b.dk).scale(c64::new(1.0 / b.dk as f64, 0.0)))
            .collect();
        ConditionalExpectation { algebra, tau }
    }

    /// Reads the block densities off an invariant state
    /// sigma = (+)_i p_i sigma_i (x) tau_i.
    pub fn from_invariant_state(algebra: MatrixAlgebra, sigma: &Op) -> Result<Self> {
        if sigma.dim() != algebra.ambient_dim {
            return Err(Error::DimensionMismatch("invariant state dim".into()));
        }
        let u = &algebra.basis;
        let w = Op::new(u.mat().adjoint() * sigma.mat() * u.mat());
        let mut tau = Vec::with_capacity(algebra.blocks.len());
        for (b, off) in algebra.blocks.iter().zip(algebra.block_offsets()) {
            // tau_i = tr_H(block) normalized
            let t = Op::from_fn(b.dk, |be, be2| {
                let mut s = c64::ZERO;
                for al in 0..b.dh {
                    s += w.at(off + al * b.dk + be, off + al * b.dk + be2);
                }
                s
            })
            .hermitize();
            let tr = t.trace().re;
            if tr <= 1e-14 {
                return Err(Error::NotFullRank(tr));
            }
            tau.push(t.scale(c64::new(1.0 / tr, 0.0)));
        }
        Ok(ConditionalExpectation { algebra, tau })
    }

    /// Recovers algebra and tau from a conditional-expectation superoperator
    /// (Heisenberg picture): the algebra is the range, tau comes from
    /// E_*(1/D).
    pub fn from_superop(e: &SuperOp) -> Result<Self> {
        if e.picture != Picture::Heisenberg {
            return Err(Error::PictureMismatch("expected a Heisenberg-picture map".into()));
        }
        let d = e.dim;
        let mut images = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let eij = Op::from_fn(d, |a, b| {
                    if (a, b) == (i, j) {
                        c64::ONE
                    } else {
                        c64::ZERO
                    }
                });
                images.push(e.apply(&eij));
            }
        }
        let algebra = crate::algebra::structure::discover_algebra(&images, d)?;
        let e_star = e.adjoint(crate::superop::OpInner::Hs, None)?;
        let sigma_tr = e_star
            .apply(&Op::identity(d).scale(c64::new(1.0 / d as f64, 0.0)))
            .hermitize();
        Self::from_invariant_state(algebra, &sigma_tr)
    }

    pub fn ambient_dim(&self) -> usize {
        self.algebra.ambient_dim
    }

    /// Is tau full rank (the expectation faithful)?
    pub fn faithful(&self, tol: f64) -> Result<bool> {
        for t in &self.tau {
            if eigh(t)?.min() <= tol {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn mu_min_tau(&self) -> Result<f64> {
        let mut mu = f64::INFINITY;
        for t in &self.tau {
            mu = mu.min(eigh(t)?.min());
        }
        Ok(mu)
    }

    fn rotate_in(&self, x: &Op) -> Op {
        let u = &self.algebra.basis;
        Op::new(u.mat().adjoint() * x.mat() * u.mat())
    }

    fn rotate_out(&self, w: &Op) -> Op {
        let u = &self.algebra.basis;
        Op::new(u.mat() * w.mat() * u.mat().adjoint())
    }

    /// Heisenberg picture E_N.
    pub fn apply(&self, x: &Op) -> Op {
        let w = self.rotate_in(x);
        let dim = self.ambient_dim();
        let mut out = faer::Mat::<c64>::zeros(dim, dim);
        for ((b, tau), off) in
            self.algebra.blocks.iter().zip(&self.tau).zip(self.algebra.block_offsets())
        {
            // A[a,a2] = sum_{b,b2} W[(a,b),(a2,b2)] tau[b2,b]
            for al in 0..b.dh {
                for al2 in 0..b.dh {
                    let mut s = c64::ZERO;
                    for be in 0..b.dk {
                        for be2 in 0..b.dk {
                            s += w.at(off + al * b.dk + be, off + al2 * b.dk + be2)
                                * tau.at(be2, be);
                        }
                    }
                    for be in 0..b.dk {
                        out[(off + al * b.dk + be, off + al2 * b.dk + be)] = s;
                    }
                }
            }
        }
        self.rotate_out(&Op::new(out))
    }

    /// Schrodinger picture E_N*.
    pub fn apply_star(&self, rho: &Op) -> Op {
        let w = self.rotate_in(rho);
        let dim = self.ambient_dim();
        let mut out = faer::Mat::<c64>::zeros(dim, dim);
        for ((b, tau), off) in
            self.algebra.blocks.iter().zip(&self.tau).zip(self.algebra.block_offsets())
        {
            for al in 0..b.dh {
                for al2 in 0..b.dh {
                    // A[a,a2] = sum_b W[(a,b),(a2,b)]
                    let mut s = c64::ZERO;
                    for be in 0..b.dk {
                        s += w.at(off + al * b.dk + be, off + al2 * b.dk + be);
                    }
                    for be in 0..b.dk {
                        for be2 in 0..b.dk {
                            out[(off + al * b.dk + be, off + al2 * b.dk + be2)] +=
                                s * tau.at(be, be2);
                        }
                    }
                }
            }
        }
        self.rotate_out(&Op::new(out))
    }

    /// Tracial versions, independent of tau.
    pub fn apply_tracial(&self, x: &Op) -> Op {
        self.algebra.compress(x)
    }

    /// sigma_tr = E_*(1 / D); a trace on the algebra.
    pub fn sigma_tr(&self) -> Op {
        let d = self.ambient_dim();
        self.apply_star(&Op::identity(d).scale(c64::new(1.0 / d as f64, 0.0)))
    }

    /// The twist weight (+)_i 1_{H_i} (x) (dk_i tau_i) that links the two
    /// expectations: E_N(X) = E_tr(w^(1/2) X w^(1/2)) and
    /// E_N*(rho) = w^(1/2) E_tr(rho) w^(1/2). The block multiplicity factor
    /// compensates the 1/dk_i normalization inside E_tr.
    pub fn tau_twist(&self) -> Op {
        let dim = self.ambient_dim();
        let mut w = faer::Mat::<c64>::zeros(dim, dim);
        for ((b, tau), off) in
            self.algebra.blocks.iter().zip(&self.tau).zip(self.algebra.block_offsets())
        {
            for al in 0..b.dh {
                for be in 0..b.dk {
                    for be2 in 0..b.dk {
                        w[(off + al * b.dk + be, off + al * b.dk + be2)] =
                            tau.at(be, be2) * c64::new(b.dk as f64, 0.0);
                    }
                }
            }
        }
        self.rotate_out(&Op::new(w))
    }

    /// tau = (+)_i 1_{H_i} (x) tau_i in the original basis.
    pub fn tau_full(&self) -> Op {
        let dim = self.ambient_dim();
        let mut w = faer::Mat::<c64>::zeros(dim, dim);
        for ((b, tau), off) in
            self.algebra.blocks.iter().zip(&self.tau).zip(self.algebra.block_offsets())
        {
            for al in 0..b.dh {
                for be in 0..b.dk {
                    for be2 in 0..b.dk {
                        w[(off + al * b.dk + be, off + al * b.dk + be2)] = tau.at(be, be2);
                    }
                }
            }
        }
        self.rotate_out(&Op::new(w))
    }

    /// Dense superoperator of either picture.
    pub fn superop(&self, picture: Picture) -> Result<SuperOp> {
        let d = self.ambient_dim();
        SuperOp::guard_dim(d)?;
        let mut m = faer::Mat::<c64>::zeros(d * d, d * d);
        for j in 0..d {
            for i in 0..d {
                let eij = Op::from_fn(d, |a, b| {
                    if (a, b) == (i, j) {
                        c64::ONE
                    } else {
                        c64::ZERO
                    }
                });
                let img = match picture {
                    Picture::Heisenberg => self.apply(&eij),
                    Picture::Schrodinger => self.apply_star(&eij),
                };
                for b in 0..d {
                    for a in 0..d {
                        m[(a + b * d, i + j * d)] = img.at(a, b);
                    }
                }
            }
        }
        SuperOp::from_matrix(m, picture)
    }

    /// A random element of N (for bimodule tests).
    pub fn random_algebra_element(&self, rng: &mut impl rand::Rng, hermitian: bool) -> Op {
        self.algebra.random_element(rng, hermitian)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::structure::{discover_algebra, planted_algebra, Block};
    use crate::entropy::relative_entropy;
    use crate::matrix::hs_inner;
    use crate::rng::{random_density, random_hermitian, random_matrix};
    use crate::spectral::{is_psd, msqrt};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn planted_ce(rng: &mut StdRng, dim: usize, blocks: &[Block]) -> ConditionalExpectation {
        let (_, gens) = planted_algebra(rng, dim, blocks);
        let alg = discover_algebra(&gens, dim).unwrap();
        // random faithful tau via a random invariant state
        let parts: Vec<Op> = alg.blocks.iter().map(|b| random_density(rng, b.dh)).collect();
        let taus: Vec<Op> = alg.blocks.iter().map(|b| random_density(rng, b.dk)).collect();
        // sigma = sum_i p_i sigma_i (x) tau_i through an assemble-like build
        let mut w = faer::Mat::<c64>::zeros(dim, dim);
        let mut off = 0;
        for ((b, s), t) in alg.blocks.iter().zip(&parts).zip(&taus) {
            for al in 0..b.dh {
                for al2 in 0..b.dh {
                    for be in 0..b.dk {
                        for be2 in 0..b.dk {
                            w[(off + al * b.dk + be, off + al2 * b.dk + be2)] =
                                s.at(al, al2) * t.at(be, be2)
                                    * c64::new(1.0 / alg.blocks.len() as f64, 0.0);
                        }
                    }
                }
            }
            off += b.dh * b.dk;
        }
        let u = &alg.basis;
        let sigma = Op::new(u.mat() * w * u.mat().adjoint());
        ConditionalExpectation::from_invariant_state(alg, &sigma).unwrap()
    }

    #[test]
    fn projection_properties() {
        let mut rng = StdRng::seed_from_u64(61);
        let ce = planted_ce(&mut rng, 6, &[Block { dh: 2, dk: 2 }, Block { dh: 2, dk: 1 }]);
        let x = random_matrix(&mut rng, 6);
        let ex = ce.apply(&x);
        assert!(ce.apply(&ex).approx_eq(&ex, 1e-9), "idempotence");
        let one = Op::identity(6);
        assert!(ce.apply(&one).approx_eq(&one, 1e-10), "unitality");
        // CP through the Choi matrix
        let sup = ce.superop(Picture::Heisenberg).unwrap();
        assert!(is_psd(&sup.choi().hermitize(), 1e-9).unwrap());
        // fixes the algebra
        let a = ce.random_algebra_element(&mut rng, false);
        assert!(ce.apply(&a).approx_eq(&a, 1e-8), "algebra not fixed");
    }

    #[test]
    fn bimodule_property() {
        let mut rng = StdRng::seed_from_u64(62);
        let ce = planted_ce(&mut rng, 6, &[Block { dh: 2, dk: 2 }, Block { dh: 1, dk: 2 }]);
        for _ in 0..5 {
            let a = ce.random_algebra_element(&mut rng, false);
            let b = ce.random_algebra_element(&mut rng, false);
            let x = random_matrix(&mut rng, 6);
            let lhs = ce.apply(&a.matmul(&x).matmul(&b));
            let rhs = a.matmul(&ce.apply(&x)).matmul(&b);
            assert!(
                lhs.approx_eq(&rhs, 1e-8 * (1.0 + lhs.max_abs())),
                "bimodule violated"
            );
        }
    }

    #[test]
    fn schrodinger_is_hs_adjoint_and_trace_preserving() {
        let mut rng = StdRng::seed_from_u64(63);
        let ce = planted_ce(&mut rng, 4, &[Block { dh: 2, dk: 2 }]);
        let x = random_matrix(&mut rng, 4);
        let y = random_matrix(&mut rng, 4);
        let lhs = hs_inner(&ce.apply_star(&x), &y);
        let rhs = hs_inner(&x, &ce.apply(&y));
        assert!((lhs - rhs).norm() < 1e-10);
        let rho = random_density(&mut rng, 4);
        assert!((ce.apply_star(&rho).trace().re - 1.0).abs() < 1e-11);
    }

    /// E_N(X) = E_tr(w^(1/2) X w^(1/2)) with the multiplicity-scaled weight,
    /// and the Schrodinger twin.
    #[test]
    fn tau_twist_identity() {
        let mut rng = StdRng::seed_from_u64(64);
        let ce = planted_ce(&mut rng, 6, &[Block { dh: 1, dk: 3 }, Block { dh: 1, dk: 3 }]);
        let tau = ce.tau_twist();
        let ts = msqrt(&tau).unwrap();
        let x = random_matrix(&mut rng, 6);
        let lhs = ce.apply(&x);
        let rhs = ce.apply_tracial(&ts.matmul(&x).matmul(&ts));
        assert!(lhs.approx_eq(&rhs, 1e-9), "Heisenberg twist identity");
        let rho = random_matrix(&mut rng, 6);
        let lhs2 = ce.apply_star(&rho);
        let rhs2 = ts.matmul(&ce.apply_tracial(&rho)).matmul(&ts);
        assert!(lhs2.approx_eq(&rhs2, 1e-9), "Schrodinger twist identity");
    }

    #[test]
    fn sigma_tr_is_a_trace_on_the_algebra() {
        let mut rng = StdRng::seed_from_u64(65);
        let ce = planted_ce(&mut rng, 6, &[Block { dh: 2, dk: 2 }, Block { dh: 2, dk: 1 }]);
        let st = ce.sigma_tr();
        assert!((st.trace().re - 1.0).abs() < 1e-10);
        for _ in 0..5 {
            let a = ce.random_algebra_element(&mut rng, false);
            let b = ce.random_algebra_element(&mut rng, false);
            let lhs = st.matmul(&a).matmul(&b).trace();
            let rhs = st.matmul(&b).matmul(&a).trace();
            assert!((lhs - rhs).norm() < 1e-8 * (1.0 + lhs.norm()), "not tracial on N");
        }
    }

    /// For invariant sigma: E_*(s^(1/2) X s^(1/2)) = s^(1/2) E(X) s^(1/2).
    #[test]
    fn invariant_state_intertwines_pictures() {
        let mut rng = StdRng::seed_from_u64(66);
        let ce = planted_ce(&mut rng, 4, &[Block { dh: 2, dk: 2 }]);
        // invariant full-rank state: E_*(rho) of anything full-rank
        let sigma = ce.apply_star(&random_density(&mut rng, 4)).hermitize();
        assert!(ce.apply_star(&sigma).approx_eq(&sigma, 1e-9), "sigma invariant");
        let s = msqrt(&sigma).unwrap();
        let x = random_hermitian(&mut rng, 4);
        let lhs = ce.apply_star(&s.matmul(&x).matmul(&s));
        let rhs = s.matmul(&ce.apply(&x)).matmul(&s);
        assert!(lhs.approx_eq(&rhs, 1e-9));
    }

    /// D(rho || E_* rho) attains the infimum over invariant states, via the
    /// chain identity D(rho||sigma) = D(rho||E_* rho) + D(E_* rho||sigma).
    #[test]
    fn pythagorean_chain_identity() {
        let mut rng = StdRng::seed_from_u64(67);
        let ce = planted_ce(&mut rng, 4, &[Block { dh: 2, dk: 2 }]);
        for _ in 0..5 {
            let rho = random_density(&mut rng, 4);
            let e_rho = ce.apply_star(&rho).hermitize();
            let sigma = ce.apply_star(&random_density(&mut rng, 4)).hermitize();
            let d_total = relative_entropy(&rho, &sigma).unwrap();
            let d1 = relative_entropy(&rho, &e_rho).unwrap();
            let d2 = relative_entropy(&e_rho, &sigma).unwrap();
            assert!(
                (d_total - d1 - d2).abs() < 1e-8 * (1.0 + d_total),
                "chain identity broken: {d_total} vs {d1} + {d2}"
            );
        }
    }

    #[test]
    fn from_superop_round_trip() {
        let mut rng = StdRng::seed_from_u64(68);
        let ce = planted_ce(&mut rng, 4, &[Block { dh: 1, dk: 2 }, Block { dh: 1, dk: 2 }]);
        let sup = ce.superop(Picture::Heisenberg).unwrap();
        let back = ConditionalExpectation::from_superop(&sup).unwrap();
        let x = random_matrix(&mut rng, 4);
        assert!(back.apply(&x).approx_eq(&ce.apply(&x), 1e-7));
        assert!(back.apply_star(&x).approx_eq(&ce.apply_star(&x), 1e-7));
    }
}
