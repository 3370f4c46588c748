//! Dense complex operator matrices.
//!
//! Every operator in the library is a square dense matrix over `c64`. The
//! tensor-factor convention is fixed here once: site 1 is the *leftmost*
//! (slowest) factor, so `kron(a, b)` places `a` on the slow index. The
//! vectorization convention used by superoperators (column stacking) lives in
//! [`crate::superop`] and is asserted against this module's `kron`.

use faer::prelude::*;
use faer::c64;

use crate::error::{Error, Result};

pub const HERM_HINT_TOL: f64 = 1e-12;

/// A square dense complex matrix with an optional hermiticity hint.
#[derive(Clone, Debug)]
pub struct Op {
    m: Mat<c64>,
    hermitian_hint: bool,
}

impl Op {
    /// Wraps a raw matrix. The hint is set by measuring `max|M - M^dag|`.
    pub fn new(m: Mat<c64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operators are square");
        let hint = herm_residual(&m) <= HERM_HINT_TOL * max_abs(&m).max(1e-300);
        Op { m, hermitian_hint: hint }
    }

    /// Wraps a matrix known to be Hermitian; the residual is still checked.
    pub fn new_hermitian(m: Mat<c64>) -> Result<Self> {
        let res = herm_residual(&m);
        if res > HERM_HINT_TOL * max_abs(&m).max(1e-300) {
            return Err(Error::NotHermitian { residual: res });
        }
        Ok(Op { m, hermitian_hint: true })
    }

    pub fn zeros(dim: usize) -> Self {
        Op { m: Mat::zeros(dim, dim), hermitian_hint: true }
    }

    pub fn identity(dim: usize) -> Self {
        Op { m: Mat::identity(dim, dim), hermitian_hint: true }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> c64) -> Self {
        Op::new(Mat::from_fn(dim, dim, f))
    }

    /// Diagonal matrix from real entries.
    pub fn diag_real(d: &[f64]) -> Self {
        let n = d.len();
        Op {
            m: Mat::from_fn(n, n, |i, j| if i == j { c64::new(d[i], 0.0) } else { c64::ZERO }),
            hermitian_hint: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn mat(&self) -> &Mat<c64> {
        &self.m
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.m
    }

    pub fn at(&self, i: usize, j: usize) -> c64 {
        self.m[(i, j)]
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    pub fn adjoint(&self) -> Op {
        Op { m: self.m.adjoint().to_owned(), hermitian_hint: self.hermitian_hint }
    }

    pub fn transpose(&self) -> Op {
        Op::new(self.m.transpose().to_owned())
    }

    pub fn conjugate(&self) -> Op {
        Op::new(self.m.conjugate().to_owned())
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.m[(i, i)]).sum()
    }

    pub fn scale(&self, s: c64) -> Op {
        Op::new(Mat::from_fn(self.dim(), self.dim(), |i, j| self.m[(i, j)] * s))
    }

    pub fn add(&self, other: &Op) -> Op {
        assert_eq!(self.dim(), other.dim());
        Op {
            m: &self.m + &other.m,
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        }
    }

    pub fn sub(&self, other: &Op) -> Op {
        assert_eq!(self.dim(), other.dim());
        Op {
            m: &self.m - &other.m,
            hermitian_hint: self.hermitian_hint && other.hermitian_hint,
        }
    }

    pub fn matmul(&self, other: &Op) -> Op {
        assert_eq!(self.dim(), other.dim());
        Op::new(&self.m * &other.m)
    }

    pub fn commutator(&self, other: &Op) -> Op {
        Op::new(&self.m * &other.m - &other.m * &self.m)
    }

    pub fn anticommutator(&self, other: &Op) -> Op {
        Op::new(&self.m * &other.m + &other.m * &self.m)
    }

    /// Kronecker product; `self` occupies the slow (left) factor.
    pub fn kron(&self, other: &Op) -> Op {
        let (da, db) = (self.dim(), other.dim());
        let m = Mat::from_fn(da * db, da * db, |i, j| {
            let (ia, ib) = (i / db, i % db);
            let (ja, jb) = (j / db, j % db);
            self.m[(ia, ja)] * other.m[(ib, jb)]
        });
        Op { m, hermitian_hint: self.hermitian_hint && other.hermitian_hint }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.m)
    }

    pub fn herm_residual(&self) -> f64 {
        herm_residual(&self.m)
    }

    /// Symmetrizes to (M + M^dag)/2 and marks the hint.
    pub fn hermitize(&self) -> Op {
        let m = Mat::from_fn(self.dim(), self.dim(), |i, j| {
            (self.m[(i, j)] + self.m[(j, i)].conj()) * 0.5
        });
        Op { m, hermitian_hint: true }
    }

    pub fn approx_eq(&self, other: &Op, tol: f64) -> bool {
        self.dim() == other.dim() && max_abs(&(&self.m - &other.m)) <= tol
    }

    /// Frobenius norm of self - other.
    pub fn distance(&self, other: &Op) -> f64 {
        let d = &self.m - &other.m;
        let mut s = 0.0;
        for j in 0..d.ncols() {
            for i in 0..d.nrows() {
                s += d[(i, j)].norm_sqr();
            }
        }
        s.sqrt()
    }
}

pub fn max_abs(m: &Mat<c64>) -> f64 {
    let mut mx = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            mx = mx.max(m[(i, j)].norm());
        }
    }
    mx
}

pub fn herm_residual(m: &Mat<c64>) -> f64 {
    let mut mx = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..=j {
            mx = mx.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    mx
}

/// tr(a^dag b), the Hilbert-Schmidt pairing.
pub fn hs_inner(a: &Op, b: &Op) -> c64 {
    assert_eq!(a.dim(), b.dim());
    let mut s = c64::ZERO;
    for j in 0..a.dim() {
        for i in 0..a.dim() {
            s += a.at(i, j).conj() * b.at(i, j);
        }
    }
    s
}

/// Single-qubit Pauli matrices.
pub mod pauli {
    use super::Op;
    use faer::c64;

    pub fn id() -> Op {
        Op::identity(2)
    }

    pub fn x() -> Op {
        Op::from_fn(2, |i, j| if i != j { c64::ONE } else { c64::ZERO })
    }

    pub fn y() -> Op {
        Op::from_fn(2, |i, j| match (i, j) {
            (0, 1) => c64::new(0.0, -1.0),
            (1, 0) => c64::new(0.0, 1.0),
            _ => c64::ZERO,
        })
    }

    pub fn z() -> Op {
        Op::from_fn(2, |i, j| match (i, j) {
            (0, 0) => c64::ONE,
            (1, 1) => -c64::ONE,
            _ => c64::ZERO,
        })
    }
}

/// Orthonormal self-adjoint basis of B(C^d) under the HS inner product.
///
/// For d = 2 this is the normalized Pauli basis (including identity); for
/// d > 2 the generalized Gell-Mann construction.
pub fn hermitian_basis(d: usize) -> Vec<Op> {
    let mut out = Vec::new();
    let norm = 1.0 / (d as f64).sqrt();
    out.push(Op::identity(d).scale(c64::new(norm, 0.0)));
    // symmetric and antisymmetric off-diagonal pairs, 1/sqrt(2) normalized
    for j in 0..d {
        for k in (j + 1)..d {
            let s = 1.0 / 2.0f64.sqrt();
            out.push(Op::from_fn(d, |a, b| {
                if (a, b) == (j, k) || (a, b) == (k, j) {
                    c64::new(s, 0.0)
                } else {
                    c64::ZERO
                }
            }));
            out.push(Op::from_fn(d, |a, b| {
                if (a, b) == (j, k) {
                    c64::new(0.0, -s)
                } else if (a, b) == (k, j) {
                    c64::new(0.0, s)
                } else {
                    c64::ZERO
                }
            }));
        }
    }
    // diagonal ladder
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        out.push(Op::from_fn(d, |a, b| {
            if a != b {
                c64::ZERO
            } else if a < l {
                c64::new(norm, 0.0)
            } else if a == l {
                c64::new(-(l as f64) * norm, 0.0)
            } else {
                c64::ZERO
            }
        }));
    }
    debug_assert_eq!(out.len(), d * d);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_site_order_matches_spec() {
        // sigma_z on the first of two qubits is diag(1,1,-1,-1)
        let zz = pauli::z().kron(&Op::identity(2));
        for (i, want) in [1.0, 1.0, -1.0, -1.0].iter().enumerate() {
            assert!((zz.at(i, i).re - want).abs() < 1e-15);
        }
    }

    #[test]
    fn hermitian_basis_is_orthonormal() {
        for d in [2usize, 3, 4] {
            let basis = hermitian_basis(d);
            assert_eq!(basis.len(), d * d);
            for (i, a) in basis.iter().enumerate() {
                assert!(a.herm_residual() < 1e-14, "basis element not self-adjoint");
                for (j, b) in basis.iter().enumerate() {
                    let ip = hs_inner(a, b);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (ip.re - want).abs() < 1e-12 && ip.im.abs() < 1e-12,
                        "<e{i}, e{j}> = {ip:?} for d={d}"
                    );
                }
            }
        }
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli::x(), pauli::y(), pauli::z());
        // [X, Y] = 2iZ
        let c = x.commutator(&y);
        assert!(c.approx_eq(&z.scale(c64::new(0.0, 2.0)), 1e-14));
        assert!(x.matmul(&x).approx_eq(&Op::identity(2), 1e-15));
    }

    #[test]
    fn hermitize_and_hint() {
        let a = Op::from_fn(3, |i, j| c64::new(i as f64, j as f64));
        assert!(!a.hermitian_hint());
        let h = a.hermitize();
        assert!(h.hermitian_hint());
        assert!(h.herm_residual() < 1e-15);
    }
}
