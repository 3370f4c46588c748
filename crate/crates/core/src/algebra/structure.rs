//! Discovery of the block structure N = (+)_i B(H_i) (x) 1_{K_i} of a
//! finite-dimensional von Neumann algebra given by generators or by the
//! range of a projection.
//!
//! The algorithm closes the generators into a *-algebra, splits the space
//! along the eigenprojections of a random Hermitian element of the center,
//! and factors each block with matrix units obtained from polar
//! decompositions. Random choices are retried on degeneracy.

use faer::prelude::*;
use faer::c64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::matrix::{hs_inner, Op};
use crate::spectral::{eigh, minv_sqrt, op_norm};

pub const RECONSTRUCTION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Block {
    /// Dimension of the factor carrying the algebra.
    pub dh: usize,
    /// Multiplicity (dimension of the commutant factor).
    pub dk: usize,
}

#[derive(Clone, Debug)]
pub struct MatrixAlgebra {
    pub ambient_dim: usize,
    pub blocks: Vec<Block>,
    /// Unitary with U^dag N U = (+)_i B(H_i) (x) 1_{K_i}, blocks in order.
    pub basis: Op,
    /// Orthogonal projections onto the blocks, in the original basis.
    pub projections: Vec<Op>,
    /// Orthonormal (HS) basis of the algebra, original coordinates.
    pub algebra_basis: Vec<Op>,
}

impl MatrixAlgebra {
    pub fn dim_of_algebra(&self) -> usize {
        self.blocks.iter().map(|b| b.dh * b.dh).sum()
    }

    /// Offset of each block in the rotated basis.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        let mut out = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            out.push(off);
            off += b.dh * b.dk;
        }
        out
    }

    /// A generic element of the algebra from block components A_i.
    pub fn assemble(&self, parts: &[Op]) -> Op {
        assert_eq!(parts.len(), self.blocks.len());
        let mut w = Mat::<c64>::zeros(self.ambient_dim, self.ambient_dim);
        for ((b, a), off) in self.blocks.iter().zip(parts).zip(self.block_offsets()) {
            assert_eq!(a.dim(), b.dh);
            for al in 0..b.dh {
                for be in 0..b.dk {
                    for al2 in 0..b.dh {
                        w[(off + al * b.dk + be, off + al2 * b.dk + be)] = a.at(al, al2);
                    }
                }
            }
        }
        let u = &self.basis;
        Op::new(u.mat() * w * u.mat().adjoint())
    }

    /// Random element of the algebra (Hermitian when asked).
    pub fn random_element(&self, rng: &mut impl Rng, hermitian: bool) -> Op {
        let parts: Vec<Op> = self
            .blocks
            .iter()
            .map(|b| {
                let g = crate::rng::random_matrix(rng, b.dh);
                if hermitian {
                    g.hermitize()
                } else {
                    g
                }
            })
            .collect();
        self.assemble(&parts)
    }

    /// Residual of the membership test for `x`: distance from x to its
    /// compression into the block structure.
    pub fn membership_residual(&self, x: &Op) -> f64 {
        let projected = self.compress(x);
        x.distance(&projected)
    }

    /// HS-orthogonal projection of x onto the algebra through the block
    /// structure (tracial conditional expectation).
    pub fn compress(&self, x: &Op) -> Op {
        let u = &self.basis;
        let w = Op::new(u.mat().adjoint() * x.mat() * u.mat());
        let mut parts = Vec::with_capacity(self.blocks.len());
        for (b, off) in self.blocks.iter().zip(self.block_offsets()) {
            // A[a, a2] = (1/dk) sum_b W[(a,b),(a2,b)]
            let a = Op::from_fn(b.dh, |al, al2| {
                let mut s = c64::ZERO;
                for be in 0..b.dk {
                    s += w.at(off + al * b.dk + be, off + al2 * b.dk + be);
                }
                s * c64::new(1.0 / b.dk as f64, 0.0)
            });
            parts.push(a);
        }
        self.assemble(&parts)
    }
}

/// Orthonormalizes the span of the given operators (HS inner product).
fn orthonormal_span(ops: &[Op], dim: usize, tol: f64) -> Vec<Op> {
    let mut basis: Vec<Op> = Vec::new();
    for x in ops {
        let mut v = x.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = hs_inner(b, &v);
                v = v.sub(&b.scale(c));
            }
        }
        let norm = hs_inner(&v, &v).re.sqrt();
        if norm > tol {
            basis.push(v.scale(c64::new(1.0 / norm, 0.0)));
        }
        if basis.len() == dim * dim {
            break;
        }
    }
    basis
}

/// Closes generators into a unital *-algebra and returns an HS-orthonormal
/// basis of it.
pub fn algebra_closure(generators: &[Op], dim: usize) -> Vec<Op> {
    let mut seed: Vec<Op> = vec![Op::identity(dim)];
    for g in generators {
        let scale = g.max_abs().max(1e-300);
        seed.push(g.scale(c64::new(1.0 / scale, 0.0)));
        seed.push(g.adjoint().scale(c64::new(1.0 / scale, 0.0)));
    }
    let mut basis = orthonormal_span(&seed, dim, 1e-10);
    loop {
        let mut products = basis.clone();
        for a in &basis {
            for b in &basis {
                products.push(a.matmul(b));
            }
        }
        let next = orthonormal_span(&products, dim, 1e-10);
        if next.len() == basis.len() {
            return next;
        }
        basis = next;
    }
}

/// Commutant of a *-closed operator family, via the kernel of the PSD map
/// sum_j ad(B_j)^dag ad(B_j) on operator space.
pub fn commutant(basis: &[Op], dim: usize) -> Result<Vec<Op>> {
    let dd = dim * dim;
    let mut t = Mat::<c64>::zeros(dd, dd);
    let id = Op::identity(dim);
    for b in basis {
        // ad_B = I (x) B - B^T (x) I in the column-stacking convention
        let left = id.transpose().kron(b);
        let right = b.transpose().kron(&id);
        let ad = left.sub(&right);
        t += ad.mat().adjoint() * ad.mat();
    }
    let top = Op::new(t).hermitize();
    let eig = eigh(&top)?;
    let scale = eig.max().max(1e-300);
    let mut out = Vec::new();
    for (k, &v) in eig.vals.iter().enumerate() {
        if v <= 1e-10 * scale {
            let m = Mat::from_fn(dim, dim, |i, j| eig.vecs[(i + j * dim, k)]);
            out.push(Op::new(m));
        }
    }
    Ok(out)
}

/// Discovers the block structure of the algebra generated by `generators`.
pub fn discover_algebra(generators: &[Op], dim: usize) -> Result<MatrixAlgebra> {
    let basis = algebra_closure(generators, dim);
    let mut rng = StdRng::seed_from_u64(0xa1_9e_b7);
    let mut last_err = None;
    for attempt in 0..4 {
        match discover_with_rng(&basis, dim, &mut rng) {
            Ok(alg) => {
                // final validation: every basis element reconstructs
                let worst = basis
                    .iter()
                    .map(|b| alg.membership_residual(b))
                    .fold(0.0f64, f64::max);
                if worst <= RECONSTRUCTION_TOL {
                    return Ok(alg);
                }
                last_err = Some(Error::EigFailure(format!(
                    "block reconstruction residual {worst:.3e} (attempt {attempt})"
                )));
            }
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::EigFailure("algebra discovery failed".into())))
}

fn discover_with_rng(
    basis: &[Op],
    dim: usize,
    rng: &mut StdRng,
) -> Result<MatrixAlgebra> {
    // center = algebra intersect commutant: kernel of (1 - P_N) on the
    // commutant span
    let comm = commutant(basis, dim)?;
    let resid: Vec<Op> = comm
        .iter()
        .map(|c| {
            let mut p = Op::zeros(dim);
            for b in basis {
                p = p.add(&b.scale(hs_inner(b, c)));
            }
            c.sub(&p)
        })
        .collect();
    let m = comm.len();
    let gram = Op::from_fn(m, |i, j| hs_inner(&resid[i], &resid[j])).hermitize();
    let geig = eigh(&gram)?;
    let gscale = geig.max().max(1e-300);
    let mut center: Vec<Op> = Vec::new();
    for (k, &v) in geig.vals.iter().enumerate() {
        if v <= 1e-12 * gscale.max(1e-8) {
            let mut acc = Op::zeros(dim);
            for (i, c) in comm.iter().enumerate() {
                acc = acc.add(&c.scale(geig.vecs[(i, k)]));
            }
            center.push(acc);
        }
    }
    if center.is_empty() {
        return Err(Error::EigFailure("empty center".into()));
    }
    // random Hermitian central element splits the blocks
    let z = {
        let mut acc = Op::zeros(dim);
        for c in &center {
            let w = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            acc = acc.add(&c.scale(w));
        }
        acc.add(&acc.adjoint()).hermitize()
    };
    let zeig = eigh(&z)?;
    let spread = (zeig.max() - zeig.min()).max(1.0);
    let groups = zeig.clusters(1e-7 * spread);

    // block projections and isometries
    let mut columns: Vec<Col<c64>> = Vec::with_capacity(dim);
    let mut blocks = Vec::new();
    let mut projections = Vec::new();
    for g in &groups {
        let rank = g.len();
        let q = Mat::from_fn(dim, rank, |i, j| zeig.vecs[(i, g[j])]);
        // compress the algebra into the block
        let compressed: Vec<Op> = basis
            .iter()
            .map(|b| Op::new(q.adjoint() * b.mat() * &q))
            .collect();
        let cbasis = orthonormal_span(&compressed, rank, 1e-9);
        let alg_dim = cbasis.len();
        let dh = (alg_dim as f64).sqrt().round() as usize;
        if dh * dh != alg_dim || rank % dh != 0 {
            return Err(Error::EigFailure(format!(
                "block of rank {rank} carries algebra of dimension {alg_dim}"
            )));
        }
        let dk = rank / dh;
        let local_u = factor_block(&cbasis, rank, dh, dk, rng)?;
        // columns of Q * local_u enter the global basis in order
        let quc = &q * local_u.mat();
        for j in 0..rank {
            columns.push(Col::from_fn(dim, |i| quc[(i, j)]));
        }
        blocks.push(Block { dh, dk });
        projections.push(Op::new(&q * q.adjoint()).hermitize());
    }
    let u = Mat::from_fn(dim, dim, |i, j| columns[j][i]);
    Ok(MatrixAlgebra {
        ambient_dim: dim,
        blocks,
        basis: Op::new(u),
        projections,
        algebra_basis: basis.to_vec(),
    })
}

/// Finds a local unitary making a factor (simple algebra) on C^rank look
/// like M_dh (x) 1_dk.
fn factor_block(
    cbasis: &[Op],
    rank: usize,
    dh: usize,
    dk: usize,
    rng: &mut StdRng,
) -> Result<Op> {
    if dh == 1 {
        return Ok(Op::identity(rank));
    }
    // random Hermitian element: generically dh distinct eigenvalues of
    // multiplicity dk each
    let x = {
        let mut acc = Op::zeros(rank);
        for c in cbasis {
            let w = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            acc = acc.add(&c.scale(w));
        }
        acc.add(&acc.adjoint()).hermitize()
    };
    let xeig = eigh(&x)?;
    let spread = (xeig.max() - xeig.min()).max(1e-6);
    let groups = xeig.clusters(1e-6 * spread);
    if groups.len() != dh || groups.iter().any(|g| g.len() != dk) {
        return Err(Error::EigFailure(format!(
            "degenerate random element: {} eigenspaces of sizes {:?}, expected {dh} x {dk}",
            groups.len(),
            groups.iter().map(|g| g.len()).collect::<Vec<_>>()
        )));
    }
    let proj: Vec<Mat<c64>> = groups
        .iter()
        .map(|g| Mat::from_fn(rank, dk, |i, j| xeig.vecs[(i, g[j])]))
        .collect();
    // matrix units e_{alpha,1} by polar decomposition of E_alpha Y E_1
    let y = {
        let mut acc = Op::zeros(rank);
        for c in cbasis {
            let w = c64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            acc = acc.add(&c.scale(w));
        }
        acc
    };
    let mut columns: Vec<Col<c64>> = Vec::with_capacity(rank);
    // alpha = 0 uses the eigenbasis of V_1 directly
    for beta in 0..dk {
        columns.push(Col::from_fn(rank, |i| proj[0][(i, beta)]));
    }
    for alpha in 1..dh {
        // map V_1 -> V_alpha inside the algebra
        let m = proj[alpha].adjoint() * y.mat() * &proj[0]; // dk x dk
        let mm = Op::new(m.adjoint() * &m).hermitize();
        let inv_sqrt = minv_sqrt(&mm, 1e-18)?;
        if op_norm(&mm) < 1e-12 {
            return Err(Error::EigFailure("singular matrix-unit candidate".into()));
        }
        let iso = &m * inv_sqrt.mat(); // dk x dk unitary (generically)
        for beta in 0..dk {
            columns.push(Col::from_fn(rank, |i| {
                let mut s = c64::ZERO;
                for t in 0..dk {
                    s += proj[alpha][(i, t)] * iso[(t, beta)];
                }
                s
            }));
        }
    }
    // assemble in (alpha, beta) order
    let u = Mat::from_fn(rank, rank, |i, j| columns[j][i]);
    let uop = Op::new(u);
    // verify every compressed basis element takes the A (x) 1 form
    for c in cbasis {
        let w = Op::new(uop.mat().adjoint() * c.mat() * uop.mat());
        let mut a = Op::zeros(dh);
        for al in 0..dh {
            for al2 in 0..dh {
                let mut s = c64::ZERO;
                for be in 0..dk {
                    s += w.at(al * dk + be, al2 * dk + be);
                }
                a = {
                    let mut m = a.into_mat();
                    m[(al, al2)] = s * c64::new(1.0 / dk as f64, 0.0);
                    Op::new(m)
                };
            }
        }
        let rebuilt = Op::from_fn(rank, |i, j| {
            let (al, be) = (i / dk, i % dk);
            let (al2, be2) = (j / dk, j % dk);
            if be == be2 {
                a.at(al, al2)
            } else {
                c64::ZERO
            }
        });
        if w.distance(&rebuilt) > 1e-8 {
            return Err(Error::EigFailure(format!(
                "factorization residual {:.3e}",
                w.distance(&rebuilt)
            )));
        }
    }
    Ok(uop)
}

/// Generators of a planted random subalgebra with the given blocks,
/// conjugated by a Haar-like unitary; used by tests and samplers.
pub fn planted_algebra(
    rng: &mut impl Rng,
    dim: usize,
    blocks: &[Block],
) -> (Op, Vec<Op>) {
    assert_eq!(blocks.iter().map(|b| b.dh * b.dk).sum::<usize>(), dim);
    let u = crate::rng::random_unitary(rng, dim);
    let mut gens = Vec::new();
    for _ in 0..2 {
        let mut w = Mat::<c64>::zeros(dim, dim);
        let mut off = 0;
        for b in blocks {
            let a = crate::rng::random_matrix(rng, b.dh);
            for al in 0..b.dh {
                for al2 in 0..b.dh {
                    for be in 0..b.dk {
                        w[(off + al * b.dk + be, off + al2 * b.dk + be)] = a.at(al, al2);
                    }
                }
            }
            off += b.dh * b.dk;
        }
        gens.push(Op::new(u.mat() * w * u.mat().adjoint()));
    }
    (u, gens)
}
