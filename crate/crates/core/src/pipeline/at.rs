//! Approximate tensorization: the constant from the mixing norm and the
//! sample-based verification of the two-region inequality.

use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;

use crate::davies::{Bath, DaviesGenerator, FixedPointProjection, SectorEngine};
use crate::entropy::{conditional_relative_entropy, relative_entropy};
use crate::error::Result;
use crate::model::{CoveringGeometry, GibbsState, HamiltonianSpec};
use crate::rng::random_density_like;
use crate::sites::{Interval, SiteSpace};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AtConstant {
    pub h_norm: f64,
    /// 1 / (1 - 2 ||h||); meaningful only when `valid`.
    pub c_at: f64,
    pub valid: bool,
}

/// C_AT = (1 - 2 ||h||)^{-1}, valid for ||h|| < 1/2.
pub fn at_constant(h_norm: f64) -> AtConstant {
    let valid = h_norm < 0.5;
    AtConstant {
        h_norm,
        c_at: if valid { 1.0 / (1.0 - 2.0 * h_norm) } else { f64::INFINITY },
        valid,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AtCheckReport {
    pub samples: usize,
    pub c_at: f64,
    /// Worst slack of D <= C_AT sum_i [D_{A_i} + D_{B_i}] (negative =
    /// violation).
    pub worst_conditional_slack: f64,
    /// Worst slack of the conditional-expectation form.
    pub worst_projection_slack: f64,
    pub violations: usize,
    pub passed: bool,
    /// A violating state, flattened row-major (re, im) for reproduction.
    pub failing_state: Option<Vec<(f64, f64)>>,
    pub seed: u64,
}

/// Fixed-point projections of the covering blocks' Davies generators.
pub fn covering_projections(
    spec: &HamiltonianSpec,
    n: usize,
    bath: Bath,
    geom: &CoveringGeometry,
) -> Result<Vec<(String, Interval, FixedPointProjection)>> {
    let mut out = Vec::new();
    for (label, block) in geom.blocks() {
        let region = block.sites();
        let gen = DaviesGenerator::build(spec, n, &region, false, bath)?;
        let scope = gen.support;
        let engine = SectorEngine::build(&gen, &scope)?;
        out.push((label, block, engine.fixed_point()?));
    }
    Ok(out)
}

/// Checks both forms of the approximate tensorization on sampled states:
/// D(rho||sigma) <= C_AT sum_i [D_{A_i}(rho||sigma) + D_{B_i}(rho||sigma)]
/// and the conditional-expectation bound with D(rho || E_{A_i*} rho).
pub fn at_check(
    spec: &HamiltonianSpec,
    n: usize,
    bath: Bath,
    geom: &CoveringGeometry,
    samples: usize,
    seed: u64,
) -> Result<AtCheckReport> {
    let space = SiteSpace::new(n, spec.local_dim)?;
    let chain = Interval::new(1, n);
    let gibbs = GibbsState::new(&spec.hamiltonian(n)?, bath.beta)?;
    let (_, hop) =
        crate::pipeline::mixing::h_operator_covering(&gibbs.sigma, geom, &space)?;
    let at = at_constant(hop.norm);
    let projections = covering_projections(spec, n, bath, geom)?;

    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst_cond = f64::INFINITY;
    let mut worst_proj = f64::INFINITY;
    let mut violations = 0usize;
    let mut failing_state = None;
    const SLACK: f64 = 1e-8;
    for _ in 0..samples {
        let rho = random_density_like(&mut rng, &gibbs.sigma);
        let d_total = relative_entropy(&rho, &gibbs.sigma)?;
        let mut sum_cond = 0.0;
        let mut sum_proj = 0.0;
        for (_, block, fp) in &projections {
            sum_cond +=
                conditional_relative_entropy(&rho, &gibbs.sigma, &block.sites(), &space)?;
            let e_rho = fp.apply_schrodinger(&rho, &chain).hermitize();
            sum_proj += relative_entropy(&rho, &e_rho)?;
        }
        let slack_cond = at.c_at * sum_cond - d_total;
        let slack_proj = at.c_at * sum_proj - d_total;
        worst_cond = worst_cond.min(slack_cond);
        worst_proj = worst_proj.min(slack_proj);
        if slack_cond < -SLACK || slack_proj < -SLACK {
            violations += 1;
            if failing_state.is_none() {
                let mut flat = Vec::with_capacity(rho.dim() * rho.dim());
                for i in 0..rho.dim() {
                    for j in 0..rho.dim() {
                        let z = rho.at(i, j);
                        flat.push((z.re, z.im));
                    }
                }
                failing_state = Some(flat);
            }
        }
    }
    Ok(AtCheckReport {
        samples,
        c_at: at.c_at,
        worst_conditional_slack: worst_cond,
        worst_projection_slack: worst_proj,
        violations,
        passed: at.valid && violations == 0,
        failing_state,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::davies::BathKind;
    use crate::model::ising_chain;

    #[test]
    fn at_constant_reference_points() {
        assert_eq!(at_constant(0.0).c_at, 1.0);
        assert!((at_constant(0.25).c_at - 2.0).abs() < 1e-15);
        assert!(!at_constant(0.5).valid);
        assert!(!at_constant(0.7).valid);
    }

    #[test]
    fn product_case_passes_with_c_one() {
        // beta = 0: C_AT = 1 and the inequality is exact superadditivity
        let spec = ising_chain(1.0, 0.5);
        let n = 5;
        let bath = Bath::new(BathKind::ExpHalf, 0.0).unwrap();
        let geom = CoveringGeometry::build(n, 2, 1).unwrap();
        let rep = at_check(&spec, n, bath, &geom, 40, 11).unwrap();
        assert!((rep.c_at - 1.0).abs() < 1e-9);
        assert!(rep.passed, "violations {}", rep.violations);
    }

    #[test]
    fn small_chain_beta_half_passes() {
        let spec = ising_chain(1.0, 0.5);
        let n = 5;
        let bath = Bath::new(BathKind::ExpHalf, 0.5).unwrap();
        let geom = CoveringGeometry::build(n, 2, 1).unwrap();
        let rep = at_check(&spec, n, bath, &geom, 60, 13).unwrap();
        assert!(rep.passed, "worst slacks {} {}", rep.worst_conditional_slack, rep.worst_projection_slack);
        // the conditional relative entropy never exceeds the projection form
        assert!(rep.worst_proj_ge_cond());
    }

    impl AtCheckReport {
        fn worst_proj_ge_cond(&self) -> bool {
            // D_A <= D(rho||E_A* rho) pointwise means more slack in the
            // projection form
            self.worst_projection_slack >= self.worst_conditional_slack - 1e-9
        }
    }
}
