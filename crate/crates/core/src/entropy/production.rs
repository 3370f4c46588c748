//! Entropy production EP(rho) = -tr[L_*(rho)(ln rho - ln omega)] and its
//! additivity over disjoint regions.

use serde::Serialize;

use crate::davies::DaviesGenerator;
use crate::entropy::relative::ENTROPY_EIG_FLOOR;
use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::sites::Interval;
use crate::spectral::{mlog_clipped, op_norm};

/// Tolerance on || L_*(omega) || for a state to count as invariant.
const INVARIANT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct EntropyReport {
    pub relative_entropy: f64,
    pub entropy_production: f64,
    /// EP / (4 D), defined only when D exceeds the floor.
    pub mlsi_ratio: Option<f64>,
    pub support_floored: bool,
}

impl EntropyReport {
    /// Measures D(rho || omega) and EP against an invariant reference.
    pub fn measure(
        gen: &DaviesGenerator,
        rho: &Op,
        omega: &Op,
        scope: &Interval,
    ) -> Result<EntropyReport> {
        let d = crate::entropy::relative::relative_entropy(rho, omega)?;
        let ep = entropy_production(gen, rho, omega, scope)?;
        let floored = crate::spectral::eigh(&rho.hermitize())?.min() < ENTROPY_EIG_FLOOR;
        Ok(EntropyReport {
            relative_entropy: d,
            entropy_production: ep,
            mlsi_ratio: if d > 1e-10 { Some(ep / (4.0 * d)) } else { None },
            support_floored: floored,
        })
    }
}

/// Entropy production of `rho` under the generator, measured against the
/// invariant reference `omega` (any full-rank invariant state gives the same
/// value). Rejects non-invariant references.
pub fn entropy_production(
    gen: &DaviesGenerator,
    rho: &Op,
    omega: &Op,
    scope: &Interval,
) -> Result<f64> {
    let res = op_norm(&gen.apply_schrodinger(omega, scope)?.hermitize());
    if res > INVARIANT_TOL * op_norm(omega).max(1e-300) {
        return Err(Error::InvalidParameter(format!(
            "reference state is not invariant: ||L_*(omega)|| = {res:.3e}"
        )));
    }
    ep_against(gen, rho, omega, scope)
}

/// Entropy production against the Gibbs state of the scope.
pub fn entropy_production_gibbs(
    gen: &DaviesGenerator,
    rho: &Op,
    scope: &Interval,
) -> Result<f64> {
    let sigma = gen.gibbs_on(scope)?.sigma;
    ep_against(gen, rho, &sigma, scope)
}

pub(crate) fn ep_against(
    gen: &DaviesGenerator,
    rho: &Op,
    omega: &Op,
    scope: &Interval,
) -> Result<f64> {
    let lrho = gen.apply_schrodinger(rho, scope)?.hermitize();
    let ln_rho = mlog_clipped(&rho.hermitize(), ENTROPY_EIG_FLOOR)?;
    let ln_omega = mlog_clipped(&omega.hermitize(), ENTROPY_EIG_FLOOR)?;
    Ok(-(lrho.matmul(&ln_rho.sub(&ln_omega)).trace().re))
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityReport {
    pub ep_union: f64,
    pub ep_a: f64,
    pub ep_b: f64,
    pub defect: f64,
    pub ok: bool,
    /// Set when the regions overlap and the check does not apply.
    pub skipped: Option<String>,
}

/// Checks EP_{A u B} = EP_A + EP_B for disjoint regions.
pub fn additivity_check(
    gen_a: &DaviesGenerator,
    gen_b: &DaviesGenerator,
    rho: &Op,
    scope: &Interval,
) -> Result<AdditivityReport> {
    if gen_a.region.iter().any(|s| gen_b.region.contains(s)) {
        return Ok(AdditivityReport {
            ep_union: f64::NAN,
            ep_a: f64::NAN,
            ep_b: f64::NAN,
            defect: f64::NAN,
            ok: false,
            skipped: Some("regions overlap; additivity holds for disjoint regions only".into()),
        });
    }
    let mut union_sites: Vec<usize> = gen_a.region.clone();
    union_sites.extend(&gen_b.region);
    let gen_union = DaviesGenerator::build(
        &gen_a.spec,
        gen_a.n,
        &union_sites,
        gen_a.include_coherent,
        gen_a.bath,
    )?;
    let sigma = gen_union.gibbs_on(scope)?.sigma;
    let ep_a = ep_against(gen_a, rho, &sigma, scope)?;
    let ep_b = ep_against(gen_b, rho, &sigma, scope)?;
    let ep_union = ep_against(&gen_union, rho, &sigma, scope)?;
    let defect = (ep_union - ep_a - ep_b).abs();
    let ok = defect <= 1e-8 * (ep_a.abs() + ep_b.abs() + 1.0);
    Ok(AdditivityReport { ep_union, ep_a, ep_b, defect, ok, skipped: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::davies::{Bath, BathKind};
    use crate::entropy::relative_entropy;
    use crate::model::ising_chain;
    use crate::rng::random_density;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn bath(beta: f64) -> Bath {
        Bath::new(BathKind::ExpHalf, beta).unwrap()
    }

    #[test]
    fn ep_vanishes_at_equilibrium() {
        let spec = ising_chain(1.0, 0.5);
        let n = 3;
        let gen = DaviesGenerator::full_chain(&spec, n, false, bath(0.7)).unwrap();
        let scope = Interval::new(1, n);
        let sigma = gen.gibbs_on(&scope).unwrap().sigma;
        let ep = entropy_production(&gen, &sigma, &sigma, &scope).unwrap();
        assert!(ep.abs() < 1e-10, "EP(sigma) = {ep}");
    }

    #[test]
    fn ep_nonnegative_on_random_states() {
        let spec = ising_chain(1.0, 0.5);
        let n = 3;
        let gen = DaviesGenerator::full_chain(&spec, n, false, bath(0.5)).unwrap();
        let scope = Interval::new(1, n);
        let sigma = gen.gibbs_on(&scope).unwrap().sigma;
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..100 {
            let rho = random_density(&mut rng, 8);
            let ep = entropy_production(&gen, &rho, &sigma, &scope).unwrap();
            assert!(ep >= -1e-10, "EP = {ep}");
        }
    }

    /// Reference independence (any full-rank invariant state): EP against
    /// sigma equals EP against E_*(rho).
    #[test]
    fn ep_reference_independent() {
        let spec = ising_chain(1.0, 0.5);
        let n = 3;
        // a regional generator so that the fixed-point algebra is nontrivial
        let gen = DaviesGenerator::build(&spec, n, &[1, 2], false, bath(0.5)).unwrap();
        let scope = Interval::new(1, n);
        let engine = crate::davies::SectorEngine::build(&gen, &scope).unwrap();
        let fp = engine.fixed_point().unwrap();
        let sigma = gen.gibbs_on(&scope).unwrap().sigma;
        let mut rng = StdRng::seed_from_u64(22);
        for _ in 0..10 {
            let rho = random_density(&mut rng, 8);
            let e_rho = fp.apply_schrodinger(&rho, &scope).hermitize();
            let ep_sigma = entropy_production(&gen, &rho, &sigma, &scope).unwrap();
            let ep_erho = entropy_production(&gen, &rho, &e_rho, &scope).unwrap();
            assert!(
                (ep_sigma - ep_erho).abs() < 1e-8 * (1.0 + ep_sigma.abs()),
                "EP reference dependence: {ep_sigma} vs {ep_erho}"
            );
        }
    }

    #[test]
    fn non_invariant_reference_rejected() {
        let spec = ising_chain(1.0, 0.5);
        let n = 2;
        let gen = DaviesGenerator::full_chain(&spec, n, false, bath(0.5)).unwrap();
        let scope = Interval::new(1, n);
        let mut rng = StdRng::seed_from_u64(23);
        let rho = random_density(&mut rng, 4);
        let not_invariant = random_density(&mut rng, 4);
        assert!(entropy_production(&gen, &rho, &not_invariant, &scope).is_err());
    }

    #[test]
    fn additivity_on_disjoint_regions() {
        let spec = ising_chain(1.0, 0.5);
        let n = 5;
        let scope = Interval::new(1, n);
        let mut rng = StdRng::seed_from_u64(24);
        let ga = DaviesGenerator::build(&spec, n, &[1, 2], false, bath(0.5)).unwrap();
        let gb = DaviesGenerator::build(&spec, n, &[4, 5], false, bath(0.5)).unwrap();
        for _ in 0..5 {
            let rho = random_density(&mut rng, 32);
            let rep = additivity_check(&ga, &gb, &rho, &scope).unwrap();
            assert!(rep.ok, "additivity defect {}", rep.defect);
        }
        // empty B: EP_A = EP_A trivially
        let gempty = DaviesGenerator::build(&spec, n, &[], false, bath(0.5)).unwrap();
        let rho = random_density(&mut rng, 32);
        let rep = additivity_check(&ga, &gempty, &rho, &scope).unwrap();
        assert!(rep.ok);
        assert!(rep.ep_b.abs() < 1e-12);
        // overlapping regions: skipped with reason
        let gc = DaviesGenerator::build(&spec, n, &[2, 3], false, bath(0.5)).unwrap();
        let rep = additivity_check(&ga, &gc, &rho, &scope).unwrap();
        assert!(rep.skipped.is_some());
    }

    /// EP equals the negative derivative of t -> D(rho_t || E_* rho) at 0,
    /// matched against a central finite difference.
    #[test]
    fn ep_matches_entropy_derivative() {
        let spec = ising_chain(1.0, 0.5);
        let n = 2;
        let gen = DaviesGenerator::full_chain(&spec, n, false, bath(0.6)).unwrap();
        let scope = Interval::new(1, n);
        let sigma = gen.gibbs_on(&scope).unwrap().sigma;
        let sup = gen
            .superop_dense(&scope, crate::superop::Picture::Schrodinger)
            .unwrap();
        let mut rng = StdRng::seed_from_u64(25);
        let rho = random_density(&mut rng, 4);
        let ep = entropy_production(&gen, &rho, &sigma, &scope).unwrap();
        let h = 1e-4;
        let plus = sup.exp_t(h, None).unwrap().apply(&rho).hermitize();
        let minus = sup.exp_t(-h, None).unwrap().apply(&rho).hermitize();
        let d_plus = relative_entropy(&plus, &sigma).unwrap();
        let d_minus = relative_entropy(&minus, &sigma).unwrap();
        let fd = -(d_plus - d_minus) / (2.0 * h);
        assert!(
            (ep - fd).abs() <= 1e-5 * ep.abs().max(1e-8),
            "EP {ep} vs finite difference {fd}"
        );
    }
}
