//! Dense superoperators on B(C^D).
//!
//! Vectorization convention, fixed project-wide: **column stacking**,
//! `vec(X)[i + j*D] = X[i, j]`, so that `vec(A X B) = (B^T (x) A) vec(X)`.
//! Every function in this module assumes it; the unit tests pin it.

use faer::prelude::*;
use faer::c64;

use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::spectral::{self, eigh, minv_sqrt, msqrt};

/// Largest operator dimension D for which a dense D^2 x D^2 superoperator is
/// materialized (memory scales as D^4).
pub const DENSE_SUPEROP_GUARD: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Picture {
    Schrodinger,
    Heisenberg,
}

/// Inner products on operator space used for adjoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpInner {
    Hs,
    Gns,
    Kms,
}

/// A linear map on D x D operators held as a D^2 x D^2 matrix.
#[derive(Clone, Debug)]
pub struct SuperOp {
    pub dim: usize,
    pub matrix: Mat<c64>,
    pub picture: Picture,
}

pub fn vec_of(x: &Op) -> Col<c64> {
    let d = x.dim();
    Col::from_fn(d * d, |v| x.at(v % d, v / d))
}

pub fn unvec(v: &Col<c64>, d: usize) -> Op {
    Op::new(Mat::from_fn(d, d, |i, j| v[i + j * d]))
}

impl SuperOp {
    pub fn guard_dim(dim: usize) -> Result<()> {
        if dim > DENSE_SUPEROP_GUARD {
            return Err(Error::MemoryGuard {
                what: "dense superoperator",
                dim,
                guard: DENSE_SUPEROP_GUARD,
            });
        }
        Ok(())
    }

    pub fn zeros(dim: usize, picture: Picture) -> Result<Self> {
        Self::guard_dim(dim)?;
        Ok(SuperOp { dim, matrix: Mat::zeros(dim * dim, dim * dim), picture })
    }

    pub fn identity(dim: usize, picture: Picture) -> Result<Self> {
        Self::guard_dim(dim)?;
        Ok(SuperOp { dim, matrix: Mat::identity(dim * dim, dim * dim), picture })
    }

    /// The map X -> A X B.
    pub fn from_left_right(a: &Op, b: &Op, picture: Picture) -> Result<Self> {
        let d = a.dim();
        assert_eq!(d, b.dim());
        Self::guard_dim(d)?;
        let bt = b.transpose();
        let m = Mat::from_fn(d * d, d * d, |r, c| {
            let (ri, rj) = (r % d, r / d);
            let (ci, cj) = (c % d, c / d);
            bt.at(rj, cj) * a.at(ri, ci)
        });
        Ok(SuperOp { dim: d, matrix: m, picture })
    }

    /// Sum of maps X -> K_a X K_a^dag (Kraus-like, not necessarily CP-normalized).
    pub fn from_kraus(kraus: &[Op], picture: Picture) -> Result<Self> {
        let d = kraus.first().expect("at least one Kraus operator").dim();
        let mut acc = Self::zeros(d, picture)?;
        for k in kraus {
            let term = Self::from_left_right(k, &k.adjoint(), picture)?;
            acc.matrix += &term.matrix;
        }
        Ok(acc)
    }

    pub fn from_matrix(matrix: Mat<c64>, picture: Picture) -> Result<Self> {
        let dd = matrix.nrows();
        let d = (dd as f64).sqrt().round() as usize;
        if d * d != dd || matrix.ncols() != dd {
            return Err(Error::DimensionMismatch(format!(
                "superoperator matrix {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(SuperOp { dim: d, matrix, picture })
    }

    pub fn apply(&self, x: &Op) -> Op {
        assert_eq!(x.dim(), self.dim, "superoperator applied to wrong dimension");
        let v = vec_of(x);
        let out = &self.matrix * &v;
        unvec(&out, self.dim)
    }

    /// self after other (composition self . other); pictures must agree.
    pub fn compose(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.picture != other.picture {
            return Err(Error::PictureMismatch(format!(
                "{:?} composed with {:?}",
                self.picture, other.picture
            )));
        }
        assert_eq!(self.dim, other.dim);
        Ok(SuperOp {
            dim: self.dim,
            matrix: &self.matrix * &other.matrix,
            picture: self.picture,
        })
    }

    pub fn add(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.picture != other.picture {
            return Err(Error::PictureMismatch("add".into()));
        }
        Ok(SuperOp { dim: self.dim, matrix: &self.matrix + &other.matrix, picture: self.picture })
    }

    pub fn sub(&self, other: &SuperOp) -> Result<SuperOp> {
        if self.picture != other.picture {
            return Err(Error::PictureMismatch("sub".into()));
        }
        Ok(SuperOp { dim: self.dim, matrix: &self.matrix - &other.matrix, picture: self.picture })
    }

    pub fn scale(&self, s: c64) -> SuperOp {
        SuperOp {
            dim: self.dim,
            matrix: Mat::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| {
                self.matrix[(i, j)] * s
            }),
            picture: self.picture,
        }
    }

    /// Adjoint with respect to an operator-space inner product. The HS
    /// adjoint is the conjugate transpose of the matrix; GNS and KMS adjoints
    /// conjugate by the corresponding weight. The adjoint swaps pictures.
    pub fn adjoint(&self, inner: OpInner, sigma: Option<&Op>) -> Result<SuperOp> {
        let flipped = match self.picture {
            Picture::Schrodinger => Picture::Heisenberg,
            Picture::Heisenberg => Picture::Schrodinger,
        };
        let hs_adj = self.matrix.adjoint().to_owned();
        let m = match inner {
            OpInner::Hs => hs_adj,
            OpInner::Gns | OpInner::Kms => {
                let sigma = sigma.ok_or_else(|| {
                    Error::InvalidParameter("weighted adjoint requires sigma".into())
                })?;
                let w = weight_matrix(inner, sigma)?;
                let winv = weight_matrix_inv(inner, sigma)?;
                // G^{-1} M^H G
                &winv * hs_adj * &w
            }
        };
        Ok(SuperOp { dim: self.dim, matrix: m, picture: flipped })
    }

    /// Choi matrix sum_{ij} |i><j| (x) Phi(|i><j|); PSD iff Phi is CP.
    pub fn choi(&self) -> Op {
        let d = self.dim;
        let mut m = Mat::<c64>::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let eij = Op::from_fn(d, |a, b| {
                    if (a, b) == (i, j) {
                        c64::ONE
                    } else {
                        c64::ZERO
                    }
                });
                let img = self.apply(&eij);
                for a in 0..d {
                    for b in 0..d {
                        m[(i * d + a, j * d + b)] = img.at(a, b);
                    }
                }
            }
        }
        Op::new(m)
    }

    /// Complete positivity test through the Choi spectrum.
    pub fn is_cp(&self, tol_rel: f64) -> Result<bool> {
        let choi = self.choi().hermitize();
        spectral::is_psd(&choi, tol_rel)
    }

    /// Residual of the GNS symmetry condition tr[sigma L(X) Y] = tr[sigma X L(Y)]
    /// sampled over an operator basis, normalized by the matrix norm.
    pub fn gns_symmetry_residual(&self, sigma: &Op) -> Result<f64> {
        let w = weight_matrix(OpInner::Gns, sigma)?;
        let lhs = &w * &self.matrix;
        let rhs = self.matrix.adjoint() * &w;
        let diff = &lhs - &rhs;
        let scale = crate::matrix::max_abs(&self.matrix).max(1e-300);
        Ok(crate::matrix::max_abs(&diff) / scale)
    }

    /// e^{t L} through the weighted-Hermitian eigendecomposition when the map
    /// is GNS-symmetric for `sigma`; otherwise scaling-and-squaring.
    pub fn exp_t(&self, t: f64, sigma_if_symmetric: Option<&Op>) -> Result<SuperOp> {
        if let Some(sigma) = sigma_if_symmetric {
            let (w_half, w_half_inv) = weight_roots(self.picture, sigma)?;
            let sym = &w_half * &self.matrix * &w_half_inv;
            let sym_op = Op::new(sym);
            if sym_op.herm_residual() <= 1e-7 * sym_op.max_abs().max(1e-300) {
                let eig = eigh(&sym_op.hermitize())?;
                let e = eig.apply_fn(|x| (t * x).exp());
                return Ok(SuperOp {
                    dim: self.dim,
                    matrix: &w_half_inv * e.mat() * &w_half,
                    picture: self.picture,
                });
            }
        }
        // fallback: scaling and squaring with a Taylor core
        let norm1 = one_norm(&self.matrix) * t.abs();
        let squarings = norm1.log2().ceil().max(0.0) as u32;
        let scale = 0.5f64.powi(squarings as i32);
        let a = Mat::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| {
            self.matrix[(i, j)] * c64::new(t * scale, 0.0)
        });
        let mut acc = Mat::<c64>::identity(a.nrows(), a.ncols());
        let mut term = Mat::<c64>::identity(a.nrows(), a.ncols());
        for k in 1..=24 {
            term = &term * &a;
            term = Mat::from_fn(term.nrows(), term.ncols(), |i, j| {
                term[(i, j)] * c64::new(1.0 / k as f64, 0.0)
            });
            acc += &term;
        }
        let mut out = acc;
        for _ in 0..squarings {
            out = &out * &out;
        }
        Ok(SuperOp { dim: self.dim, matrix: out, picture: self.picture })
    }
}

fn one_norm(m: &Mat<c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let mut s = 0.0;
        for i in 0..m.nrows() {
            s += m[(i, j)].norm();
        }
        best = best.max(s);
    }
    best
}

/// Weight matrix of the inner product on vectorized operators:
/// GNS: sigma^T (x) 1, KMS: (sigma^T)^(1/2) (x) sigma^(1/2).
pub fn weight_matrix(inner: OpInner, sigma: &Op) -> Result<Mat<c64>> {
    match inner {
        OpInner::Hs => Ok(Mat::identity(sigma.dim() * sigma.dim(), sigma.dim() * sigma.dim())),
        OpInner::Gns => Ok(sigma.transpose().kron(&Op::identity(sigma.dim())).into_mat()),
        OpInner::Kms => {
            let s = msqrt(sigma)?;
            Ok(s.transpose().kron(&s).into_mat())
        }
    }
}

fn weight_matrix_inv(inner: OpInner, sigma: &Op) -> Result<Mat<c64>> {
    let inv = spectral::matrix_function(
        sigma,
        spectral::MatrixFn::Inv,
        spectral::SingularMode::Strict,
        1e-14,
    )?;
    match inner {
        OpInner::Hs => Ok(Mat::identity(sigma.dim() * sigma.dim(), sigma.dim() * sigma.dim())),
        OpInner::Gns => Ok(inv.transpose().kron(&Op::identity(sigma.dim())).into_mat()),
        OpInner::Kms => {
            let s = minv_sqrt(sigma, 1e-14)?;
            Ok(s.transpose().kron(&s).into_mat())
        }
    }
}

/// (G^(1/2), G^(-1/2)) for the symmetrizing weight of the given picture:
/// Heisenberg maps symmetrize with the GNS weight, Schrodinger maps with its
/// inverse.
fn weight_roots(picture: Picture, sigma: &Op) -> Result<(Mat<c64>, Mat<c64>)> {
    let sqrt = msqrt(sigma)?;
    let isqrt = minv_sqrt(sigma, 1e-14)?;
    let id = Op::identity(sigma.dim());
    let g_half = sqrt.transpose().kron(&id).into_mat();
    let g_half_inv = isqrt.transpose().kron(&id).into_mat();
    match picture {
        Picture::Heisenberg => Ok((g_half, g_half_inv)),
        Picture::Schrodinger => Ok((g_half_inv, g_half)),
    }
}
