//! Application of superoperators supported on a contiguous patch of a chain
//! to operators on a larger ambient interval, without materializing the
//! ambient superoperator.
//!
//! The ambient space factors as H_L (x) H_P (x) H_R with dims (l, p, r). An
//! ambient operator is gathered into a p^2 x (l r)^2 coefficient matrix whose
//! rows follow the patch vec convention (column stacking); the patch map
//! multiplies from the left; the result is scattered back.

use faer::prelude::*;
use faer::c64;

use crate::matrix::Op;
use crate::sites::Interval;

/// Action of a map on patch operators.
#[derive(Clone, Debug)]
pub enum LocalAction {
    /// Dense p^2 x p^2 superoperator matrix (column-stacked convention).
    Dense(Mat<c64>),
    /// Low-rank form sum_j kets[:, j] * bras[j, :], with kets p^2 x K and
    /// bras K x p^2. Used for conditional expectations written as
    /// sum_j N_j tr(B_j X): column j of `kets` is vec(N_j), row j of `bras`
    /// is vec(B_j^T)^T.
    LowRank { kets: Mat<c64>, bras: Mat<c64> },
}

/// A map acting non-trivially only on the contiguous `patch`.
#[derive(Clone, Debug)]
pub struct LocalMap {
    pub patch: Interval,
    pub action: LocalAction,
}

impl LocalMap {
    pub fn patch_dim(&self, d: usize) -> usize {
        d.pow(self.patch.len() as u32)
    }

    /// Largest column-sum norm of the action, used for step-size bounds.
    pub fn one_norm(&self) -> f64 {
        match &self.action {
            LocalAction::Dense(m) => one_norm(m),
            LocalAction::LowRank { kets, bras } => one_norm(&(kets * bras)),
        }
    }

    /// HS adjoint of the action (conjugate transpose), same patch.
    pub fn hs_adjoint(&self) -> LocalMap {
        let action = match &self.action {
            LocalAction::Dense(m) => LocalAction::Dense(m.adjoint().to_owned()),
            LocalAction::LowRank { kets, bras } => LocalAction::LowRank {
                kets: bras.adjoint().to_owned(),
                bras: kets.adjoint().to_owned(),
            },
        };
        LocalMap { patch: self.patch, action }
    }

    /// Applies the map (tensored with identity) to an operator on the
    /// ambient interval.
    pub fn apply(&self, x: &Op, ambient: &Interval, d: usize) -> Op {
        self.apply_with_ancilla(x, ambient, d, 1)
    }

    /// Same, with an extra ancilla factor of the given dimension appended
    /// after the last chain site.
    pub fn apply_with_ancilla(&self, x: &Op, ambient: &Interval, d: usize, ancilla: usize) -> Op {
        assert!(
            ambient.lo <= self.patch.lo && self.patch.hi <= ambient.hi,
            "patch {} outside ambient {}",
            self.patch,
            ambient
        );
        let l = d.pow((self.patch.lo - ambient.lo) as u32);
        let p = d.pow(self.patch.len() as u32);
        let r = d.pow((ambient.hi - self.patch.hi) as u32) * ancilla;
        let dim = l * p * r;
        assert_eq!(x.dim(), dim, "ambient operator dimension mismatch");

        let gathered = gather(x, l, p, r);
        let moved = match &self.action {
            LocalAction::Dense(m) => m * &gathered,
            LocalAction::LowRank { kets, bras } => kets * (bras * &gathered),
        };
        scatter(&moved, l, p, r)
    }
}

/// X[(iL iP iR),(jL jP jR)] -> G[iP + jP*p, (((iL*r + iR)*l + jL)*r + jR)]
fn gather(x: &Op, l: usize, p: usize, r: usize) -> Mat<c64> {
    let dim = l * p * r;
    let mut g = Mat::<c64>::zeros(p * p, (l * r) * (l * r));
    for row in 0..dim {
        let il = row / (p * r);
        let ip = (row / r) % p;
        let ir = row % r;
        for col in 0..dim {
            let jl = col / (p * r);
            let jp = (col / r) % p;
            let jr = col % r;
            let gr = ip + jp * p;
            let gc = ((il * r + ir) * l + jl) * r + jr;
            g[(gr, gc)] = x.at(row, col);
        }
    }
    g
}

fn scatter(g: &Mat<c64>, l: usize, p: usize, r: usize) -> Op {
    let dim = l * p * r;
    let mut m = Mat::<c64>::zeros(dim, dim);
    for row in 0..dim {
        let il = row / (p * r);
        let ip = (row / r) % p;
        let ir = row % r;
        for col in 0..dim {
            let jl = col / (p * r);
            let jp = (col / r) % p;
            let jr = col % r;
            let gr = ip + jp * p;
            let gc = ((il * r + ir) * l + jl) * r + jr;
            m[(row, col)] = g[(gr, gc)];
        }
    }
    Op::new(m)
}

pub(crate) fn one_norm(m: &Mat<c64>) -> f64 {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{random_channel_kraus, random_matrix};
    use crate::sites::{embed, SiteSpace};
    use crate::superop::{Picture, SuperOp};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    /// Oracle: applying a patch map must agree with the dense superoperator
    /// of the embedded map on the full ambient space.
    #[test]
    fn patch_apply_matches_dense_embedding() {
        let mut rng = StdRng::seed_from_u64(77);
        let d = 2;
        let ambient = Interval::new(1, 4);
        let space = SiteSpace::new(4, d).unwrap();
        for (lo, hi) in [(1, 2), (2, 3), (3, 4), (2, 2), (1, 4)] {
            let patch = Interval::new(lo, hi);
            let p = d.pow(patch.len() as u32);
            let kraus = random_channel_kraus(&mut rng, p, 2);
            let m = SuperOp::from_kraus(&kraus, Picture::Schrodinger).unwrap();
            let local = LocalMap { patch, action: LocalAction::Dense(m.matrix.clone()) };
            let x = random_matrix(&mut rng, 16);
            let got = local.apply(&x, &ambient, d);
            // dense oracle: embed each Kraus operator and apply
            let mut want = Op::zeros(16);
            let sites: Vec<usize> = patch.sites();
            for k in &kraus {
                let ke = embed(k, &sites, &space).unwrap();
                want = want.add(&ke.matmul(&x).matmul(&ke.adjoint()));
            }
            assert!(got.approx_eq(&want, 1e-11), "patch {patch} mismatch");
        }
    }

    #[test]
    fn low_rank_matches_dense() {
        let mut rng = StdRng::seed_from_u64(78);
        let d = 2;
        let ambient = Interval::new(1, 3);
        let patch = Interval::new(2, 3);
        let p = 4usize;
        // random rank-3 action
        let kets = Mat::from_fn(p * p, 3, |_, _| crate::rng::gaussian_c64(&mut rng));
        let bras = Mat::from_fn(3, p * p, |_, _| crate::rng::gaussian_c64(&mut rng));
        let dense = &kets * &bras;
        let lr = LocalMap {
            patch,
            action: LocalAction::LowRank { kets: kets.clone(), bras: bras.clone() },
        };
        let de = LocalMap { patch, action: LocalAction::Dense(dense) };
        let x = random_matrix(&mut rng, 8);
        assert!(lr.apply(&x, &ambient, d).approx_eq(&de.apply(&x, &ambient, d), 1e-11));
    }
}
