//! The overlapping interval covering of the chain used by the global-to-local
//! reduction, together with the derived complement segments.
//!
//! The chain [1, n] is covered by alternating intervals A_1, B_1, ..., A_m,
//! B_m of ideal length 2(r + ell) - 1 with consecutive overlaps of size ell.
//! When (n, r, ell) do not tile exactly the final blocks are shortened and
//! the geometry is flagged inexact. C = B^c and D = A^c decompose into m
//! segments each; E_i separates C_i from D_i and F_i separates D_i from
//! C_{i+1}.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sites::{complement_sites, components, Interval};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoveringGeometry {
    pub n: usize,
    pub r: usize,
    pub ell: usize,
    pub m: usize,
    pub a: Vec<Interval>,
    pub b: Vec<Interval>,
    pub c: Vec<Interval>,
    pub d: Vec<Interval>,
    pub e: Vec<Interval>,
    pub f: Vec<Interval>,
    /// True when every block has the ideal length 2(r+ell)-1.
    pub exact: bool,
}

impl CoveringGeometry {
    pub fn build(n: usize, r: usize, ell: usize) -> Result<CoveringGeometry> {
        if r < 1 || ell < 1 {
            return Err(Error::Geometry(format!("r = {r}, ell = {ell} must be >= 1")));
        }
        let block = 2 * (r + ell) - 1;
        if n < 2 * ell + 1 {
            return Err(Error::Geometry(format!(
                "n = {n} too small for a single (A_1, B_1) pair with ell = {ell}"
            )));
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut start = 1usize;
        loop {
            let full_end = start + block - 1;
            // the last A is clipped so the closing B can end exactly at n
            let end_a = full_end.min(n - ell);
            if end_a < start {
                return Err(Error::Geometry(format!(
                    "degenerate A block at start {start} for n = {n}, ell = {ell}"
                )));
            }
            a.push(Interval::new(start, end_a));
            let start_b = end_a + 1 - ell;
            let end_b = (start_b + block - 1).min(n);
            b.push(Interval::new(start_b, end_b));
            if end_b == n {
                break;
            }
            start = end_b + 1 - ell;
        }
        let m = a.len();
        let exact = a.iter().chain(b.iter()).all(|iv| iv.len() == block);

        let a_sites: Vec<usize> = a.iter().flat_map(|iv| iv.sites()).collect();
        let b_sites: Vec<usize> = b.iter().flat_map(|iv| iv.sites()).collect();
        let c = components(&complement_sites(&b_sites, n));
        let d = components(&complement_sites(&a_sites, n));

        let geom = CoveringGeometry {
            n,
            r,
            ell,
            m,
            e: derive_gaps(&c, &d)?,
            f: derive_gaps(&d, &c[1..])?,
            a,
            b,
            c,
            d,
            exact,
        };
        geom.validate()?;
        Ok(geom)
    }

    fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Geometry(msg));
        // disjointness within the A and B families
        for family in [&self.a, &self.b] {
            for w in family.windows(2) {
                if w[0].overlaps(&w[1]) {
                    return err(format!("family blocks overlap: {} {}", w[0], w[1]));
                }
            }
        }
        // coverage
        let mut covered = vec![false; self.n + 1];
        for iv in self.a.iter().chain(self.b.iter()) {
            for s in iv.sites() {
                covered[s] = true;
            }
        }
        if !covered[1..].iter().all(|&c| c) {
            return err("A union B does not cover the chain".into());
        }
        // stated overlaps
        for i in 0..self.m {
            if self.a[i].intersect(&self.b[i]).len() != self.ell {
                return err(format!("|A_{} cap B_{}| != ell", i + 1, i + 1));
            }
            if i + 1 < self.m && self.b[i].intersect(&self.a[i + 1]).len() != self.ell {
                return err(format!("|B_{} cap A_{}| != ell", i + 1, i + 2));
            }
        }
        if self.c.len() != self.m || self.d.len() != self.m {
            return err(format!(
                "expected {} complement segments, got C: {}, D: {}",
                self.m,
                self.c.len(),
                self.d.len()
            ));
        }
        Ok(())
    }

    /// Sites of A = union of the A_i.
    pub fn a_sites(&self) -> Vec<usize> {
        self.a.iter().flat_map(|iv| iv.sites()).collect()
    }

    pub fn b_sites(&self) -> Vec<usize> {
        self.b.iter().flat_map(|iv| iv.sites()).collect()
    }

    /// Sites of C = B^c (left to right).
    pub fn c_sites(&self) -> Vec<usize> {
        self.c.iter().flat_map(|iv| iv.sites()).collect()
    }

    /// Sites of D = A^c (left to right).
    pub fn d_sites(&self) -> Vec<usize> {
        self.d.iter().flat_map(|iv| iv.sites()).collect()
    }

    /// Maximum number of covering blocks containing any single site.
    pub fn max_multiplicity(&self) -> usize {
        (1..=self.n)
            .map(|s| {
                self.a
                    .iter()
                    .chain(self.b.iter())
                    .filter(|iv| iv.contains(s))
                    .count()
            })
            .max()
            .unwrap_or(0)
    }

    /// All covering blocks in chain order, labeled.
    pub fn blocks(&self) -> Vec<(String, Interval)> {
        let mut out = Vec::new();
        for i in 0..self.m {
            out.push((format!("A{}", i + 1), self.a[i]));
            out.push((format!("B{}", i + 1), self.b[i]));
        }
        out
    }
}

/// Gaps between consecutive segments of two interleaved families: for each
/// `left[i]`, the interval strictly between `left[i]` and `right[i]`.
fn derive_gaps(left: &[Interval], right: &[Interval]) -> Result<Vec<Interval>> {
    let mut out = Vec::new();
    for (l, r) in left.iter().zip(right.iter()) {
        if r.lo <= l.hi {
            return Err(Error::Geometry(format!(
                "segments out of order: {l} before {r}"
            )));
        }
        out.push(Interval::new(l.hi + 1, r.lo - 1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_tiling_m1() {
        // n = 2m(2r + ell - 1) + ell with m = 1, r = 2, ell = 1 gives n = 9
        let g = CoveringGeometry::build(9, 2, 1).unwrap();
        assert_eq!(g.m, 1);
        assert!(g.exact);
        assert_eq!(g.a, vec![Interval::new(1, 5)]);
        assert_eq!(g.b, vec![Interval::new(5, 9)]);
        assert_eq!(g.c, vec![Interval::new(1, 4)]);
        assert_eq!(g.d, vec![Interval::new(6, 9)]);
        assert_eq!(g.e, vec![Interval::new(5, 5)]);
        assert!(g.f.is_empty());
    }

    #[test]
    fn spec_instance_n14() {
        // n = 14, r = 2, ell = 1: m = 2 with |A_i| = 5 and a shortened B_2
        let g = CoveringGeometry::build(14, 2, 1).unwrap();
        assert_eq!(g.m, 2);
        assert!(!g.exact);
        assert_eq!(g.a, vec![Interval::new(1, 5), Interval::new(9, 13)]);
        assert_eq!(g.b, vec![Interval::new(5, 9), Interval::new(13, 14)]);
        assert_eq!(g.a[0].len(), 5);
        assert_eq!(g.a[1].len(), 5);
        // interior complement segments have size 2r - 1 = 3
        assert_eq!(g.d[0], Interval::new(6, 8));
        assert_eq!(g.d[0].len(), 2 * g.r - 1);
        assert_eq!(g.c[1], Interval::new(10, 12));
        assert_eq!(g.c[1].len(), 2 * g.r - 1);
        assert_eq!(g.e.len(), 2);
        assert_eq!(g.f.len(), 1);
        assert!(g.e.iter().all(|iv| iv.len() == 1));
        assert!(g.f.iter().all(|iv| iv.len() == 1));
    }

    #[test]
    fn exact_tiling_m2() {
        // m = 2 exact: n = 4(2r + ell - 1) + ell = 17 for r = 2, ell = 1
        let g = CoveringGeometry::build(17, 2, 1).unwrap();
        assert_eq!(g.m, 2);
        assert!(g.exact);
        // interior C/D segments are 2r-1; the outermost C_1 and D_m carry the
        // extra ell sites of the boundary blocks
        assert_eq!(g.c[0].len(), 2 * g.r + g.ell - 1);
        assert_eq!(g.c[1].len(), 2 * g.r - 1);
        assert_eq!(g.d[0].len(), 2 * g.r - 1);
        assert_eq!(g.d[1].len(), 2 * g.r + g.ell - 1);
        assert!(g.e.iter().all(|iv| iv.len() == g.ell));
        assert!(g.f.iter().all(|iv| iv.len() == g.ell));
        assert_eq!(g.max_multiplicity(), 2);
    }

    #[test]
    fn small_n_cases() {
        // the certificate sweep runs down to n = 4
        for n in 4..=8 {
            let g = CoveringGeometry::build(n, 2, 1).unwrap();
            assert_eq!(g.m, 1, "n = {n}");
            let mut all: Vec<usize> = g.a_sites();
            all.extend(g.b_sites());
            all.sort_unstable();
            all.dedup();
            assert_eq!(all, (1..=n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn too_small_rejected() {
        assert!(CoveringGeometry::build(2, 2, 1).is_err());
        assert!(CoveringGeometry::build(4, 2, 2).is_err());
    }

    #[test]
    fn boundary_collar_width() {
        // A_i with its r-collar: the boundary has width exactly r per side
        let g = CoveringGeometry::build(17, 2, 1).unwrap();
        let a2 = g.a[1];
        let collar = a2.collar(g.r, g.n);
        assert_eq!(collar.lo, a2.lo - g.r);
        assert_eq!(collar.hi, a2.hi + g.r);
    }
}
