//! The split/join/merge cascade that bounds the covering mixing norm by
//! powers of the elementary eta.

use serde::Serialize;

use crate::error::Result;
use crate::matrix::Op;
use crate::model::CoveringGeometry;
use crate::pipeline::mixing::{eta_product_first, h_operator_sites};
use crate::sites::{Interval, SiteSpace};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CascadeBounds {
    /// (1 + eta)^(2m - 1) - 1, the splitting step.
    pub splitting: f64,
    /// (1 + eta)^(2m - 2) - 1, the joining step.
    pub joining: f64,
    /// (1 + eta)^(4m - 3) - 1, the merged bound.
    pub merged: f64,
    /// |merged - (splitting joining + splitting + joining)|.
    pub consistency_defect: f64,
}

/// Evaluates the three displayed bounds for a given eta >= 0 and m >= 1.
pub fn cascade_bounds(eta: f64, m: usize) -> CascadeBounds {
    assert!(eta >= 0.0 && m >= 1, "eta >= 0 and m >= 1");
    let base = 1.0 + eta;
    let splitting = base.powi(2 * m as i32 - 1) - 1.0;
    let joining = base.powi(2 * m as i32 - 2) - 1.0;
    let merged = base.powi(4 * m as i32 - 3) - 1.0;
    let recomposed = splitting * joining + splitting + joining;
    CascadeBounds {
        splitting,
        joining,
        merged,
        consistency_defect: (merged - recomposed).abs(),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasuredEtas {
    /// Splitting-step values, one per interleaved cut.
    pub split: Vec<f64>,
    /// Joining-step values for the C and D chains.
    pub join_c: Vec<f64>,
    pub join_d: Vec<f64>,
    pub max: f64,
}

fn sites_of(intervals: &[Interval]) -> Vec<usize> {
    intervals.iter().flat_map(|iv| iv.sites()).collect()
}

/// Measures the eta of every elementary step of the cascade at its true
/// separation, instead of the single fitted eta(ell).
pub fn measured_cascade_etas(
    sigma: &Op,
    geom: &CoveringGeometry,
    space: &SiteSpace,
) -> Result<MeasuredEtas> {
    // R_1, ..., R_{2m}: the C and D segments interleaved along the chain
    let mut segments: Vec<Interval> = Vec::with_capacity(2 * geom.m);
    for i in 0..geom.m {
        segments.push(geom.c[i]);
        segments.push(geom.d[i]);
    }
    let mut split = Vec::new();
    for k in 0..(2 * geom.m - 1) {
        let x = segments[k].sites();
        let z = sites_of(&segments[k + 1..]);
        let (_, rep) = h_operator_sites(sigma, &x, &z, space)?;
        split.push(rep.unsandwiched_norm);
    }
    let mut join_c = Vec::new();
    let mut join_d = Vec::new();
    for (family, out) in [(&geom.c, &mut join_c), (&geom.d, &mut join_d)] {
        for k in 1..geom.m {
            let x = sites_of(&family[..k]);
            let z = family[k].sites();
            out.push(eta_product_first(sigma, &x, &z, space)?);
        }
    }
    let max = split
        .iter()
        .chain(join_c.iter())
        .chain(join_d.iter())
        .fold(0.0f64, |m, &v| m.max(v));
    Ok(MeasuredEtas { split, join_c, join_d, max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ising_chain, GibbsState};

    #[test]
    fn zero_eta_gives_zero_bounds() {
        let b = cascade_bounds(0.0, 3);
        assert_eq!(b.splitting, 0.0);
        assert_eq!(b.joining, 0.0);
        assert_eq!(b.merged, 0.0);
    }

    #[test]
    fn frozen_arithmetic_example() {
        // eta = 0.01, m = 2: merged = 1.01^5 - 1 = 0.0510100501
        let b = cascade_bounds(0.01, 2);
        assert!((b.merged - 0.051_010_050_1).abs() < 1e-12, "merged {}", b.merged);
        assert!((b.splitting - (1.01f64.powi(3) - 1.0)).abs() < 1e-15);
        assert!((b.joining - (1.01f64.powi(2) - 1.0)).abs() < 1e-15);
        assert!(b.consistency_defect < 1e-12);
    }

    #[test]
    fn measured_bound_dominates_h_norm() {
        // the cascade bound from measured etas dominates the measured norm
        let spec = ising_chain(1.0, 0.5);
        for (n, beta) in [(9usize, 0.5), (9, 0.3), (8, 0.5)] {
            let space = SiteSpace::new(n, 2).unwrap();
            let sigma = GibbsState::new(&spec.hamiltonian(n).unwrap(), beta).unwrap().sigma;
            let geom = CoveringGeometry::build(n, 2, 1).unwrap();
            let etas = measured_cascade_etas(&sigma, &geom, &space).unwrap();
            let bound = cascade_bounds(etas.max, geom.m).merged;
            let (_, h) = crate::pipeline::mixing::h_operator_covering(&sigma, &geom, &space)
                .unwrap();
            assert!(
                h.unsandwiched_norm <= bound + 1e-10,
                "n={n} beta={beta}: measured {} > bound {bound}",
                h.unsandwiched_norm
            );
            assert!(h.norm <= bound + 1e-10, "sandwiched exceeds the bound");
        }
    }
}
