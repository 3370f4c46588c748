//! Quasi-local reduction: the product-vs-regional projection norm lambda,
//! the detectability bound, the iteration count k_A, and the sample check
//! of the resulting entropy inequality.

use faer::c64;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde::Serialize;

use crate::davies::{Bath, DaviesGenerator, FixedPointProjection, SectorEngine};
use crate::entropy::relative_entropy;
use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::rng::random_density_like;
use crate::sites::Interval;
use crate::spectral::singular_values;
use crate::superop::{weight_matrix, OpInner, Picture, SuperOp};

/// Scope dimension up to which dense superoperators are used for lambda and
/// the sandwich; larger scopes switch to power iteration.
pub const DENSE_LAMBDA_GUARD: usize = 32;

#[derive(Clone, Debug, Serialize)]
pub struct LambdaReport {
    pub region: Vec<usize>,
    pub scope: Interval,
    pub lambda: f64,
    /// Ordering of the product, ascending site index unless overridden.
    pub ordering: Vec<usize>,
    /// Spectral gap of the detectability Hamiltonian sum_i (1 - E_i).
    pub gap_dl: f64,
    /// Spectral gap of the regional Davies generator, for reference.
    pub gap_davies: f64,
    pub dense_path: bool,
}

/// Builds the single-site fixed points and the regional one on the joint
/// scope A-partial.
pub fn region_projections(
    spec: &crate::model::HamiltonianSpec,
    n: usize,
    bath: Bath,
    region: &[usize],
) -> Result<(Vec<FixedPointProjection>, FixedPointProjection, Interval, f64)> {
    let mut sites: Vec<usize> = region.to_vec();
    sites.sort_unstable();
    sites.dedup();
    if sites.is_empty() {
        return Err(Error::Geometry("empty region".into()));
    }
    let gen_region = DaviesGenerator::build(spec, n, &sites, false, bath)?;
    let scope = Interval::new(sites[0], *sites.last().unwrap()).collar(spec.range, n);
    let engine = SectorEngine::build(&gen_region, &scope)?;
    let e_region = engine.fixed_point()?;
    let (gap_davies, _) = engine.spectral_gap()?;
    let mut singles = Vec::with_capacity(sites.len());
    for &k in &sites {
        let gk = DaviesGenerator::build(spec, n, &[k], false, bath)?;
        let ek = SectorEngine::build(&gk, &gk.support)?.fixed_point()?;
        singles.push(ek);
    }
    Ok((singles, e_region, scope, gap_davies))
}

/// lambda = || prod_{i in A} E_i - E_A : L_2(sigma) -> L_2(sigma) ||.
///
/// For small scopes the norm is the top singular value of the KMS-weighted
/// dense difference; otherwise power iteration on T^dag T with the
/// KMS-adjoint product (the spectrum is independent of which invariant
/// state weights the adjoint).
pub fn lambda_dl(
    spec: &crate::model::HamiltonianSpec,
    n: usize,
    bath: Bath,
    region: &[usize],
    ordering: Option<&[usize]>,
) -> Result<LambdaReport> {
    let (singles, e_region, scope, gap_davies) = region_projections(spec, n, bath, region)?;
    let mut order: Vec<usize> = match ordering {
        Some(o) => o.to_vec(),
        None => {
            let mut s: Vec<usize> = region.to_vec();
            s.sort_unstable();
            s
        }
    };
    order.dedup();
    let d = spec.local_dim;
    let dim = d.pow(scope.len() as u32);
    let sigma = e_region.gibbs.clone();

    let singles_ordered: Vec<&FixedPointProjection> = {
        let mut sorted_region: Vec<usize> = region.to_vec();
        sorted_region.sort_unstable();
        order
            .iter()
            .map(|&k| {
                let idx = sorted_region.iter().position(|&s| s == k).expect("site in region");
                &singles[idx]
            })
            .collect()
    };

    let gap_dl;
    let lambda;
    let dense = dim <= DENSE_LAMBDA_GUARD;
    if dense {
        // materialize everything on the scope
        let sup_of = |fp: &FixedPointProjection| -> Result<SuperOp> {
            superop_from_apply(dim, Picture::Heisenberg, |x| fp.apply_heisenberg(x, &scope))
        };
        let mut prod = SuperOp::identity(dim, Picture::Heisenberg)?;
        for fp in &singles_ordered {
            prod = prod.compose(&sup_of(fp)?)?;
        }
        let e_a = sup_of(&e_region)?;
        let t = prod.sub(&e_a)?;
        let w = weight_matrix(OpInner::Kms, &sigma.sigma)?;
        let w_half = crate::spectral::msqrt(&Op::new(w))?;
        let w_half_inv = crate::spectral::minv_sqrt(&w_half.matmul(&w_half), 1e-14)?;
        let sym = w_half.matmul(&Op::new(t.matrix.clone())).matmul(&w_half_inv);
        lambda = singular_values(&sym)?.first().copied().unwrap_or(0.0);
        // detectability Hamiltonian sum (1 - E_i)
        let mut ham = SuperOp::zeros(dim, Picture::Heisenberg)?;
        let id = SuperOp::identity(dim, Picture::Heisenberg)?;
        for fp in &singles_ordered {
            ham = ham.add(&id.sub(&sup_of(fp)?)?)?;
        }
        let sym_h = w_half.matmul(&Op::new(ham.matrix.clone())).matmul(&w_half_inv).hermitize();
        let eig = crate::spectral::eigh(&sym_h)?;
        let scale = eig.spectral_norm().max(1e-300);
        gap_dl = eig
            .vals
            .iter()
            .copied()
            .filter(|v| *v > 1e-9 * scale)
            .fold(f64::INFINITY, f64::min);
    } else {
        let ssqrt = sigma.sigma_sqrt();
        let apply_t = |x: &Op| -> Op {
            let mut y = x.clone();
            for fp in singles_ordered.iter().rev() {
                y = fp.apply_heisenberg(&y, &scope);
            }
            y.sub(&e_region.apply_heisenberg(x, &scope))
        };
        let apply_t_adj = |x: &Op| -> Op {
            let mut y = x.clone();
            for fp in singles_ordered.iter() {
                y = fp.apply_heisenberg(&y, &scope);
            }
            y.sub(&e_region.apply_heisenberg(x, &scope))
        };
        lambda = power_norm(dim, &ssqrt, &apply_t, &apply_t_adj, 400, 3)?;
        // gap of sum (1 - E_i) by shifted power iteration off the kernel
        let apply_h = |x: &Op| -> Op {
            let mut acc = Op::zeros(dim);
            for fp in &singles_ordered {
                acc = acc.add(&x.sub(&fp.apply_heisenberg(x, &scope)));
            }
            acc
        };
        let deflate = |x: &Op| -> Op { x.sub(&e_region.apply_heisenberg(x, &scope)) };
        let hmax = power_norm(dim, &ssqrt, &apply_h, &apply_h, 300, 2)?;
        let shifted = |x: &Op| -> Op {
            let xd = deflate(x);
            xd.scale(c64::new(hmax, 0.0)).sub(&apply_h(&xd))
        };
        let top = power_norm(dim, &ssqrt, &shifted, &shifted, 400, 3)?;
        gap_dl = (hmax - top).max(0.0);
    }
    Ok(LambdaReport {
        region: region.to_vec(),
        scope,
        lambda,
        ordering: order,
        gap_dl,
        gap_davies,
        dense_path: dense,
    })
}

/// Dense superoperator of an arbitrary apply function.
pub fn superop_from_apply(
    dim: usize,
    picture: Picture,
    f: impl Fn(&Op) -> Op,
) -> Result<SuperOp> {
    SuperOp::guard_dim(dim)?;
    let mut m = faer::Mat::<c64>::zeros(dim * dim, dim * dim);
    for j in 0..dim {
        for i in 0..dim {
            let e = Op::from_fn(dim, |a, b| if (a, b) == (i, j) { c64::ONE } else { c64::ZERO });
            let img = f(&e);
            for b in 0..dim {
                for a in 0..dim {
                    m[(a + b * dim, i + j * dim)] = img.at(a, b);
                }
            }
        }
    }
    SuperOp::from_matrix(m, picture)
}

/// Largest singular value of T in the weighted L2, by power iteration on
/// T^dag T (T^dag the KMS adjoint) with seeded Hermitian starts. The
/// spectrum of T^dag T does not depend on the inner product used for the
/// Rayleigh quotients, so the cheap HS pairing drives the iteration.
fn power_norm(
    dim: usize,
    _sigma_sqrt: &Op,
    apply_t: &dyn Fn(&Op) -> Op,
    apply_t_adj: &dyn Fn(&Op) -> Op,
    iters: usize,
    starts: u64,
) -> Result<f64> {
    let mut best = 0.0f64;
    for s in 0..starts {
        let mut rng = StdRng::seed_from_u64(0x7a3b + s);
        let mut x = crate::rng::random_hermitian(&mut rng, dim);
        let norm0 = crate::spectral::hs_norm(&x).max(1e-300);
        x = x.scale(c64::new(1.0 / norm0, 0.0));
        let mut last = 0.0f64;
        for it in 0..iters {
            // y = T^dag T x; the Rayleigh quotient <x, y>/<x, x> tends to
            // lambda^2 as x aligns with the dominant eigenvector
            let y = apply_t_adj(&apply_t(&x));
            let num = crate::matrix::hs_inner(&x, &y).re;
            let est = num.max(0.0).sqrt();
            let norm = crate::spectral::hs_norm(&y).max(1e-300);
            x = y.scale(c64::new(1.0 / norm, 0.0));
            if it > 12 && (est - last).abs() <= 1e-9 * est.max(1e-300) {
                best = best.max(est);
                break;
            }
            last = est;
            if it == iters - 1 {
                best = best.max(est);
            }
        }
    }
    Ok(best)
}

/// Detectability bound (gap / g^2 + 1)^{-1/2} on the product defect.
pub fn detectability_bound(gap: f64, g: usize) -> f64 {
    assert!(gap >= 0.0 && g >= 1);
    1.0 / (gap / (g * g) as f64 + 1.0).sqrt()
}

/// Interaction degree of the single-site expectations in a region: the
/// largest number of E_i failing to commute with any given E_j, bounded by
/// the overlaps of their support collars.
pub fn interaction_degree(region: &[usize], r: usize, n: usize) -> usize {
    let mut g = 0usize;
    for &j in region {
        let ij = Interval::new(j, j).collar(r, n);
        let count = region
            .iter()
            .filter(|&&i| i != j && Interval::new(i, i).collar(r, n).overlaps(&ij))
            .count();
        g = g.max(count);
    }
    g.max(1)
}

/// Smallest k with lambda^k 2 d^{2|Ad|} e^{2 beta |Ad| J} <= 1, and the
/// epsilon = lambda^k d^{2|Ad|} e^{2 beta |Ad| J} achieved there.
pub fn k_a(
    d: usize,
    boundary_size: usize,
    beta: f64,
    strength: f64,
    lambda: f64,
) -> Result<(usize, f64)> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("lambda = {lambda} not in (0,1)")));
    }
    let ln_c = (2.0f64).ln()
        + 2.0 * boundary_size as f64 * (d as f64).ln()
        + 2.0 * beta * boundary_size as f64 * strength;
    let mut k = if lambda == 0.0 {
        1
    } else {
        ((ln_c / -(lambda.ln())) - 1e-9).ceil().max(1.0) as usize
    };
    let cbound =
        (d as f64).powi(2 * boundary_size as i32) * (2.0 * beta * boundary_size as f64 * strength).exp();
    while lambda.powi(k as i32) * 2.0 * cbound > 1.0 + 1e-12 {
        k += 1;
    }
    Ok((k, lambda.powi(k as i32) * cbound))
}

#[derive(Clone, Debug, Serialize)]
pub struct QuasiLocalReport {
    pub region: Vec<usize>,
    pub k_a: usize,
    /// Smallest k at which the cp sandwich at eps = 1/2 first holds.
    pub k_star: Option<usize>,
    pub sandwich_at_k_a: crate::algebra::SandwichReport,
    pub samples: usize,
    pub worst_slack: f64,
    pub violations: usize,
    pub passed: bool,
}

/// Verifies the quasi-local entropy bound
/// D(rho || E_{A*} rho) <= 4 k sum_{i in A} D(rho || E_{i*} rho)
/// on sampled states, after establishing the cp-order sandwich
/// (1/2) E_A <=_cp (prod E_i)^k <=_cp (3/2) E_A at k = k_A.
pub fn quasilocal_at_check(
    spec: &crate::model::HamiltonianSpec,
    n: usize,
    bath: Bath,
    region: &[usize],
    k_a_value: usize,
    samples: usize,
    seed: u64,
) -> Result<QuasiLocalReport> {
    let (singles, e_region, scope, _) = region_projections(spec, n, bath, region)?;
    let d = spec.local_dim;
    let dim = d.pow(scope.len() as u32);
    SuperOp::guard_dim(dim)?;
    let sup_of = |fp: &FixedPointProjection| -> Result<SuperOp> {
        superop_from_apply(dim, Picture::Heisenberg, |x| fp.apply_heisenberg(x, &scope))
    };
    let mut prod = SuperOp::identity(dim, Picture::Heisenberg)?;
    for fp in &singles {
        prod = prod.compose(&sup_of(fp)?)?;
    }
    let e_a = sup_of(&e_region)?;
    // empirical minimal k for the eps = 1/2 sandwich
    let mut k_star = None;
    let mut power = SuperOp::identity(dim, Picture::Heisenberg)?;
    for k in 1..=k_a_value {
        power = power.compose(&prod)?;
        let rep = crate::algebra::cp_sandwich_check(&power, &e_a, 0.5)?;
        if rep.holds {
            k_star = Some(k);
            break;
        }
    }
    let mut power_ka = SuperOp::identity(dim, Picture::Heisenberg)?;
    for _ in 0..k_a_value {
        power_ka = power_ka.compose(&prod)?;
    }
    let sandwich = crate::algebra::cp_sandwich_check(&power_ka, &e_a, 0.5)?;
    if !sandwich.holds {
        return Err(Error::EigFailure(format!(
            "cp sandwich fails at the formula k_A = {k_a_value} (min eigs {:.3e}, {:.3e}); \
             this contradicts the quasilocal reduction",
            sandwich.lower_min_eig, sandwich.upper_min_eig
        )));
    }

    let sigma = &e_region.gibbs.sigma;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut violations = 0usize;
    for _ in 0..samples {
        let rho = random_density_like(&mut rng, sigma);
        let e_rho = e_region.apply_schrodinger(&rho, &scope).hermitize();
        let lhs = relative_entropy(&rho, &e_rho)?;
        let mut rhs = 0.0;
        for fp in &singles {
            let ei_rho = fp.apply_schrodinger(&rho, &scope).hermitize();
            rhs += relative_entropy(&rho, &ei_rho)?;
        }
        let slack = 4.0 * k_a_value as f64 * rhs - lhs;
        worst = worst.min(slack);
        if slack < -1e-8 {
            violations += 1;
        }
    }
    Ok(QuasiLocalReport {
        region: region.to_vec(),
        k_a: k_a_value,
        k_star,
        sandwich_at_k_a: sandwich,
        samples,
        worst_slack: worst,
        violations,
        passed: violations == 0,
    })
}
