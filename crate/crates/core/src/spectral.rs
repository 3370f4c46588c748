//! Hermitian eigendecomposition and everything built on it: matrix functions,
//! Schatten and Kosaki norms, weighted inner products, PSD checks.
//!
//! A single eigendecomposition primitive backs all of these so that there is
//! one tested code path for spectral work.

use faer::prelude::*;
use faer::c64;

use crate::error::{Error, Result};
use crate::matrix::{hs_inner, Op};

/// Relative tolerance used to cluster nearly equal eigenvalues.
pub const CLUSTER_TOL_REL: f64 = 1e-9;
/// Relative tolerance for PSD checks: min eigenvalue >= -tol * ||M||.
pub const PSD_TOL_REL: f64 = 1e-9;

/// Eigendecomposition H = U diag(vals) U^dag of a Hermitian matrix,
/// eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermEig {
    pub vals: Vec<f64>,
    pub vecs: Mat<c64>,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.vals.len()
    }

    /// U f(D) U^dag for a real function of the eigenvalues.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Op {
        let d: Vec<f64> = self.vals.iter().map(|&x| f(x)).collect();
        self.with_diagonal(&d)
    }

    /// U diag(d) U^dag for an explicit new spectrum aligned with `vals`.
    pub fn with_diagonal(&self, d: &[f64]) -> Op {
        assert_eq!(d.len(), self.dim());
        let n = self.dim();
        let u = &self.vecs;
        let fd = Mat::from_fn(n, n, |i, j| {
            if i == j {
                c64::new(d[i], 0.0)
            } else {
                c64::ZERO
            }
        });
        Op::new(u * fd * u.adjoint()).hermitize()
    }

    pub fn min(&self) -> f64 {
        self.vals[0]
    }

    pub fn max(&self) -> f64 {
        *self.vals.last().unwrap()
    }

    /// Spectral norm of the decomposed operator.
    pub fn spectral_norm(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }

    /// Groups eigenvalue indices into clusters whose spread is <= tol.
    pub fn clusters(&self, tol: f64) -> Vec<Vec<usize>> {
        cluster_sorted(&self.vals, tol)
    }
}

/// Clusters an ascending list: a new group starts when the gap to the
/// previous value exceeds `tol`.
pub fn cluster_sorted(vals: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (v - vals[*g.last().unwrap()]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Hermitian eigendecomposition. The input is symmetrized first; callers that
/// require strict hermiticity should validate with [`Op::herm_residual`].
pub fn eigh(op: &Op) -> Result<HermEig> {
    let h = if op.hermitian_hint() { op.clone() } else { op.hermitize() };
    let evd = h
        .mat()
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::EigFailure(format!("{e:?}")))?;
    let n = op.dim();
    let s = evd.S();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| s[a].re.partial_cmp(&s[b].re).unwrap());
    let vals: Vec<f64> = idx.iter().map(|&i| s[i].re).collect();
    let u = evd.U();
    let vecs = Mat::from_fn(n, n, |i, j| u[(i, idx[j])]);
    Ok(HermEig { vals, vecs })
}

/// Checked Hermitian eigendecomposition: rejects inputs whose Hermitian
/// residual exceeds `tol * max|M|`.
pub fn eigh_checked(op: &Op, tol: f64) -> Result<HermEig> {
    let res = op.herm_residual();
    if res > tol * op.max_abs().max(1e-300) {
        return Err(Error::NotHermitian { residual: res });
    }
    eigh(op)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatrixFn {
    Exp,
    Log,
    Sqrt,
    Inv,
    Power(f64),
}

/// Whether singular directions are rejected or projected out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularMode {
    Strict,
    Pseudo,
}

/// Applies a matrix function through the eigendecomposition.
///
/// For `Log`, `Inv`, `Sqrt` of nearly singular input, `Strict` mode fails
/// while `Pseudo` mode acts on the support only (eigenvalues below `tol` are
/// mapped to zero).
pub fn matrix_function(op: &Op, f: MatrixFn, mode: SingularMode, tol: f64) -> Result<Op> {
    let eig = eigh_checked(op, 1e-9)?;
    let needs_positive = matches!(f, MatrixFn::Log | MatrixFn::Inv | MatrixFn::Sqrt)
        || matches!(f, MatrixFn::Power(p) if p < 0.0 || p.fract() != 0.0);
    if needs_positive && mode == SingularMode::Strict {
        let min = eig.min();
        if min <= tol {
            return Err(Error::Singular { op: "matrix_function", min_eig: min, tol });
        }
    }
    let g = move |x: f64| -> f64 {
        let on_support = x > tol;
        match f {
            MatrixFn::Exp => x.exp(),
            MatrixFn::Log => {
                if on_support {
                    x.ln()
                } else {
                    0.0
                }
            }
            MatrixFn::Sqrt => {
                if x > 0.0 {
                    x.sqrt()
                } else {
                    0.0
                }
            }
            MatrixFn::Inv => {
                if on_support {
                    1.0 / x
                } else {
                    0.0
                }
            }
            MatrixFn::Power(p) => {
                if on_support || (x > 0.0 && p > 0.0) {
                    x.powf(p)
                } else if p == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    };
    Ok(eig.apply_fn(g))
}

pub fn mexp(op: &Op) -> Result<Op> {
    matrix_function(op, MatrixFn::Exp, SingularMode::Pseudo, 0.0)
}

pub fn msqrt(op: &Op) -> Result<Op> {
    matrix_function(op, MatrixFn::Sqrt, SingularMode::Pseudo, 1e-14)
}

/// Pseudo-inverse square root on the support.
pub fn minv_sqrt(op: &Op, tol: f64) -> Result<Op> {
    matrix_function(op, MatrixFn::Power(-0.5), SingularMode::Pseudo, tol)
}

/// Strict logarithm; fails off the support.
pub fn mlog_strict(op: &Op, tol: f64) -> Result<Op> {
    matrix_function(op, MatrixFn::Log, SingularMode::Strict, tol)
}

/// Logarithm with clipped spectrum: eigenvalues below `floor` are lifted to
/// `floor` before taking the log. Used for entropies of nearly singular
/// states; the clip magnitude is reported by the caller when it matters.
pub fn mlog_clipped(op: &Op, floor: f64) -> Result<Op> {
    let eig = eigh_checked(op, 1e-9)?;
    Ok(eig.apply_fn(|x| x.max(floor).ln()))
}

/// Singular values, descending.
pub fn singular_values(op: &Op) -> Result<Vec<f64>> {
    let svd = op
        .mat()
        .svd()
        .map_err(|e| Error::EigFailure(format!("svd: {e:?}")))?;
    let s = svd.S();
    let mut out: Vec<f64> = (0..op.dim()).map(|i| s[i].re).collect();
    out.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(out)
}

/// Operator (spectral) norm.
pub fn op_norm(op: &Op) -> f64 {
    if op.hermitian_hint() {
        eigh(op).map(|e| e.spectral_norm()).unwrap_or(f64::NAN)
    } else {
        singular_values(op).map(|s| s.first().copied().unwrap_or(0.0)).unwrap_or(f64::NAN)
    }
}

/// Trace norm, sum of singular values.
pub fn trace_norm(op: &Op) -> f64 {
    singular_values(op).map(|s| s.iter().sum()).unwrap_or(f64::NAN)
}

pub fn hs_norm(op: &Op) -> f64 {
    hs_inner(op, op).re.sqrt()
}

/// Schatten p-norm, p >= 1.
pub fn schatten_norm(op: &Op, p: f64) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::InvalidParameter(format!("schatten p = {p} < 1")));
    }
    if p.is_infinite() {
        return Ok(op_norm(op));
    }
    let sv = singular_values(op)?;
    Ok(sv.iter().map(|s| s.powf(p)).sum::<f64>().powf(1.0 / p))
}

/// Kosaki weighted norm `|| sigma^(1/2p) x sigma^(1/2p) ||_p` for a full-rank
/// density `sigma`; `p = inf` reduces to the operator norm.
pub fn kosaki_norm(x: &Op, p: f64, sigma: &Op) -> Result<f64> {
    if p < 1.0 {
        return Err(Error::InvalidParameter(format!("kosaki p = {p} < 1")));
    }
    if p.is_infinite() {
        return Ok(op_norm(x));
    }
    let eig = eigh_checked(sigma, 1e-9)?;
    if eig.min() <= 0.0 {
        return Err(Error::NotFullRank(eig.min()));
    }
    let w = eig.apply_fn(|t| t.powf(1.0 / (2.0 * p)));
    let sandwiched = w.matmul(x).matmul(&w);
    schatten_norm(&sandwiched, p)
}

/// The KMS L2(sigma) norm, `kosaki_norm(x, 2, sigma)`.
pub fn l2_sigma_norm(x: &Op, sigma: &Op) -> Result<f64> {
    kosaki_norm(x, 2.0, sigma)
}

/// sigma-weighted GNS inner product tr(sigma x^dag y).
pub fn gns_inner(x: &Op, y: &Op, sigma: &Op) -> c64 {
    sigma.matmul(&x.adjoint()).matmul(y).trace()
}

/// sigma-KMS inner product tr(x^dag sigma^(1/2) y sigma^(1/2)).
pub fn kms_inner(x: &Op, y: &Op, sigma_sqrt: &Op) -> c64 {
    x.adjoint()
        .matmul(sigma_sqrt)
        .matmul(y)
        .matmul(sigma_sqrt)
        .trace()
}

/// Minimum eigenvalue, for PSD tests.
pub fn min_eigenvalue(op: &Op) -> Result<f64> {
    Ok(eigh(op)?.min())
}

/// PSD check with the project-wide relative tolerance.
pub fn is_psd(op: &Op, tol_rel: f64) -> Result<bool> {
    let eig = eigh(op)?;
    let scale = eig.spectral_norm().max(1e-300);
    Ok(eig.min() >= -tol_rel * scale)
}
