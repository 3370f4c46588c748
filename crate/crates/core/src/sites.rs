//! Multi-site Hilbert spaces: embeddings, partial traces, and the interval
//! bookkeeping for chains.
//!
//! Sites are 1-based, matching the chain notation [1, n]. Site 1 is the
//! leftmost (slowest) tensor factor.

use faer::prelude::*;
use faer::c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Op;

pub const DEFAULT_DIM_GUARD: usize = 4096;

/// A chain of `n` qudits of local dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteSpace {
    pub n: usize,
    pub d: usize,
    guard: usize,
}

impl SiteSpace {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        Self::with_guard(n, d, DEFAULT_DIM_GUARD)
    }

    pub fn with_guard(n: usize, d: usize, guard: usize) -> Result<Self> {
        if n < 1 || d < 2 {
            return Err(Error::InvalidParameter(format!("site space n={n}, d={d}")));
        }
        let mut total: usize = 1;
        for _ in 0..n {
            total = total
                .checked_mul(d)
                .filter(|&t| t <= guard)
                .ok_or(Error::MemoryGuard { what: "site space", dim: usize::MAX, guard })?;
        }
        Ok(SiteSpace { n, d, guard })
    }

    pub fn total_dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn guard(&self) -> usize {
        self.guard
    }

    pub fn dim_of(&self, num_sites: usize) -> usize {
        self.d.pow(num_sites as u32)
    }

    pub fn contains_site(&self, k: usize) -> bool {
        (1..=self.n).contains(&k)
    }

    /// Subspace on a subset of sites, inheriting the guard.
    pub fn subspace(&self, num_sites: usize) -> Result<SiteSpace> {
        SiteSpace::with_guard(num_sites, self.d, self.guard)
    }
}

/// Closed interval of sites [lo, hi], 1-based. An empty interval is
/// represented by `lo > hi` through [`Interval::empty`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn new(lo: usize, hi: usize) -> Self {
        Interval { lo, hi }
    }

    pub fn empty() -> Self {
        Interval { lo: 1, hi: 0 }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn len(&self) -> usize {
        if self.is_empty() {
            0
        } else {
            self.hi - self.lo + 1
        }
    }

    pub fn sites(&self) -> Vec<usize> {
        if self.is_empty() {
            vec![]
        } else {
            (self.lo..=self.hi).collect()
        }
    }

    pub fn contains(&self, k: usize) -> bool {
        !self.is_empty() && (self.lo..=self.hi).contains(&k)
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi {
            Interval::empty()
        } else {
            Interval { lo, hi }
        }
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !self.intersect(other).is_empty()
    }

    /// The interval grown by `r` on both sides, clipped to [1, n].
    pub fn collar(&self, r: usize, n: usize) -> Interval {
        if self.is_empty() {
            return Interval::empty();
        }
        Interval { lo: self.lo.saturating_sub(r).max(1), hi: (self.hi + r).min(n) }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_empty() {
            write!(f, "[]")
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

/// Sorted distinct site list intersected with the chain complement etc.
pub fn complement_sites(sites: &[usize], n: usize) -> Vec<usize> {
    (1..=n).filter(|k| !sites.contains(k)).collect()
}

/// Maximal runs of consecutive sites in a sorted site list.
pub fn components(sites: &[usize]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut it = sites.iter().copied();
    let Some(first) = it.next() else { return out };
    let (mut lo, mut hi) = (first, first);
    for s in it {
        if s == hi + 1 {
            hi = s;
        } else {
            out.push(Interval::new(lo, hi));
            lo = s;
            hi = s;
        }
    }
    out.push(Interval::new(lo, hi));
    out
}

fn check_sites(sites: &[usize], space: &SiteSpace) -> Result<()> {
    for w in sites.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::SiteOutOfRange(format!("sites not strictly increasing: {sites:?}")));
        }
    }
    if let Some(&k) = sites.iter().find(|&&k| !space.contains_site(k)) {
        return Err(Error::SiteOutOfRange(format!("site {k} outside [1,{}]", space.n)));
    }
    Ok(())
}

/// Decomposes a basis index of the full space into per-site digits,
/// site 1 first.
#[inline]
fn digits(mut index: usize, n: usize, d: usize, out: &mut [usize]) {
    for k in (0..n).rev() {
        out[k] = index % d;
        index /= d;
    }
}

/// Embeds `op` (acting on the listed sites, in their sorted order) into the
/// full chain as op (x) identity on the rest. Sites need not be contiguous.
pub fn embed(op: &Op, sites: &[usize], space: &SiteSpace) -> Result<Op> {
    check_sites(sites, space)?;
    let k = sites.len();
    if op.dim() != space.dim_of(k) {
        return Err(Error::DimensionMismatch(format!(
            "operator dim {} does not match {} site(s) of local dim {}",
            op.dim(),
            k,
            space.d
        )));
    }
    let n = space.n;
    let d = space.d;
    let total = space.total_dim();
    let positions: Vec<usize> = sites.iter().map(|&s| s - 1).collect();
    let mut row_digits = vec![0usize; n];
    let mut m = Mat::<c64>::zeros(total, total);
    // for each row, the nonzero columns agree with it on the complement
    // sites; only the operator's digit positions vary
    let sub = op.dim();
    let mut col_digits = vec![0usize; n];
    for row in 0..total {
        digits(row, n, d, &mut row_digits);
        let mut sub_row = 0usize;
        for &p in &positions {
            sub_row = sub_row * d + row_digits[p];
        }
        col_digits.copy_from_slice(&row_digits);
        for sub_col in 0..sub {
            let mut rem = sub_col;
            for &p in positions.iter().rev() {
                col_digits[p] = rem % d;
                rem /= d;
            }
            let mut col = 0usize;
            for k in 0..n {
                col = col * d + col_digits[k];
            }
            m[(row, col)] = op.at(sub_row, sub_col);
        }
    }
    let out = Op::new(m);
    Ok(if op.hermitian_hint() { out.hermitize() } else { out })
}

/// Partial trace keeping the listed sites (sorted). An empty keep list yields
/// the 1x1 matrix holding the trace.
pub fn partial_trace(op: &Op, keep: &[usize], space: &SiteSpace) -> Result<Op> {
    check_sites(keep, space)?;
    if op.dim() != space.total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "operator dim {} vs space dim {}",
            op.dim(),
            space.total_dim()
        )));
    }
    let n = space.n;
    let d = space.d;
    let kept: Vec<usize> = keep.iter().map(|&s| s - 1).collect();
    let out_dim = space.dim_of(kept.len());
    let mut m = Mat::<c64>::zeros(out_dim, out_dim);
    let total = space.total_dim();
    let mut dg = vec![0usize; n];
    let mut dg_col = vec![0usize; n];
    for row in 0..total {
        digits(row, n, d, &mut dg);
        let mut out_row = 0usize;
        for &p in &kept {
            out_row = out_row * d + dg[p];
        }
        // the column shares the traced digits with the row
        dg_col.copy_from_slice(&dg);
        for out_col in 0..out_dim {
            let mut rem = out_col;
            for &p in kept.iter().rev() {
                dg_col[p] = rem % d;
                rem /= d;
            }
            let mut col = 0usize;
            for k in 0..n {
                col = col * d + dg_col[k];
            }
            m[(out_row, out_col)] += op.at(row, col);
        }
    }
    let out = Op::new(m);
    Ok(if op.hermitian_hint() { out.hermitize() } else { out })
}

/// Marginal of a full-chain operator on an interval.
pub fn marginal(op: &Op, region: &Interval, space: &SiteSpace) -> Result<Op> {
    partial_trace(op, &region.sites(), space)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::pauli;
    use crate::rng::{random_density, random_matrix};
    use faer::c64;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn space(n: usize) -> SiteSpace {
        SiteSpace::new(n, 2).unwrap()
    }

    #[test]
    fn embed_identity_any_sites() {
        let sp = space(3);
        for sites in [vec![1], vec![2], vec![1, 3], vec![1, 2, 3]] {
            let id = Op::identity(sp.dim_of(sites.len()));
            let e = embed(&id, &sites, &sp).unwrap();
            assert!(e.approx_eq(&Op::identity(8), 1e-15));
        }
    }

    #[test]
    fn embed_sigma_z_site1() {
        let sp = space(2);
        let e = embed(&pauli::z(), &[1], &sp).unwrap();
        let want = [1.0, 1.0, -1.0, -1.0];
        for i in 0..4 {
            assert!((e.at(i, i).re - want[i]).abs() < 1e-15);
        }
    }

    /// Brute-force oracle: the trace of a product of disjoint embeddings
    /// factorizes, tr(embed(X,A) embed(Y,B)) = tr(X) tr(Y) d^(n-|A|-|B|).
    #[test]
    fn disjoint_embedding_trace_factorizes() {
        let sp = space(3);
        let mut rng = StdRng::seed_from_u64(42);
        for (a, b) in [(vec![1], vec![3]), (vec![2], vec![3]), (vec![1], vec![2])] {
            let x = random_matrix(&mut rng, 2);
            let y = random_matrix(&mut rng, 2);
            let lhs = embed(&x, &a, &sp).unwrap().matmul(&embed(&y, &b, &sp).unwrap()).trace();
            let free = 3 - a.len() - b.len();
            let rhs = x.trace() * y.trace() * c64::new(2f64.powi(free as i32), 0.0);
            assert!((lhs - rhs).norm() < 1e-10, "{lhs:?} vs {rhs:?}");
        }
    }

    /// Independent Kronecker oracle for scattered embedding: embedding at
    /// sites {1,3} of n=3 equals sum over middle-site basis of explicit
    /// tensor products.
    #[test]
    fn scattered_embedding_matches_kron_oracle() {
        let sp = space(3);
        let mut rng = StdRng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 4); // acts on sites 1 and 3
        let got = embed(&x, &[1, 3], &sp).unwrap();
        // oracle: X_{(i1 i3),(j1 j3)} delta_{i2 j2} built entrywise
        let want = Op::from_fn(8, |r, c| {
            let (i1, i2, i3) = (r / 4, (r / 2) % 2, r % 2);
            let (j1, j2, j3) = (c / 4, (c / 2) % 2, c % 2);
            if i2 == j2 {
                x.at(i1 * 2 + i3, j1 * 2 + j3)
            } else {
                c64::ZERO
            }
        });
        assert!(got.approx_eq(&want, 1e-14));
    }

    #[test]
    fn partial_trace_product_state() {
        let sp = space(2);
        let mut rng = StdRng::seed_from_u64(6);
        let ra = random_density(&mut rng, 2);
        let rb = random_density(&mut rng, 2);
        let rho = ra.kron(&rb);
        let got = partial_trace(&rho, &[1], &sp).unwrap();
        assert!(got.approx_eq(&ra, 1e-13));
        let got_b = partial_trace(&rho, &[2], &sp).unwrap();
        assert!(got_b.approx_eq(&rb, 1e-13));
    }

    #[test]
    fn partial_trace_identity_and_empty_keep() {
        let sp = space(3);
        let id = Op::identity(8);
        let got = partial_trace(&id, &[2], &sp).unwrap();
        assert!(got.approx_eq(&Op::identity(2).scale(c64::new(4.0, 0.0)), 1e-13));
        let tr = partial_trace(&id, &[], &sp).unwrap();
        assert_eq!(tr.dim(), 1);
        assert!((tr.at(0, 0).re - 8.0).abs() < 1e-12);
    }

    #[test]
    fn bell_state_marginal_is_maximally_mixed() {
        let sp = space(2);
        let mut m = Mat::<c64>::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = c64::new(0.5, 0.0);
        }
        let bell = Op::new(m);
        let red = partial_trace(&bell, &[1], &sp).unwrap();
        assert!(red.approx_eq(&Op::identity(2).scale(c64::new(0.5, 0.0)), 1e-14));
    }

    /// partial_trace after embed recovers the operator times the traced
    /// dimension.
    #[test]
    fn round_trip_embed_trace() {
        let sp = space(3);
        let mut rng = StdRng::seed_from_u64(7);
        for sites in [vec![1], vec![2], vec![1, 3]] {
            let x = random_matrix(&mut rng, sp.dim_of(sites.len()));
            let e = embed(&x, &sites, &sp).unwrap();
            let back = partial_trace(&e, &sites, &sp).unwrap();
            let factor = 2f64.powi((3 - sites.len()) as i32);
            assert!(back.approx_eq(&x.scale(c64::new(factor, 0.0)), 1e-12));
        }
    }

    #[test]
    fn trace_is_preserved() {
        let sp = space(3);
        let mut rng = StdRng::seed_from_u64(8);
        let x = random_matrix(&mut rng, 8);
        let pt = partial_trace(&x, &[1, 3], &sp).unwrap();
        assert!((pt.trace() - x.trace()).norm() < 1e-12);
    }

    #[test]
    fn guards_and_errors() {
        assert!(SiteSpace::new(13, 2).is_err());
        let sp = space(2);
        assert!(embed(&Op::identity(2), &[3], &sp).is_err());
        assert!(embed(&Op::identity(4), &[1], &sp).is_err());
        assert!(partial_trace(&Op::identity(4), &[5], &sp).is_err());
    }

    #[test]
    fn interval_helpers() {
        let i = Interval::new(2, 4);
        assert_eq!(i.len(), 3);
        assert_eq!(i.collar(2, 10), Interval::new(1, 6));
        assert_eq!(i.collar(2, 5), Interval::new(1, 5));
        assert_eq!(components(&[1, 2, 5, 6, 9]), vec![
            Interval::new(1, 2),
            Interval::new(5, 6),
            Interval::new(9, 9)
        ]);
        assert!(Interval::empty().is_empty());
    }
}
