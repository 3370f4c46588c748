//! Davies generators: per-site GKLS pieces built from Bohr components of an
//! orthonormal coupling basis, summed over a region of the chain.

use faer::c64;

use crate::davies::bath::Bath;
use crate::davies::bohr::{bohr_decompose, BOHR_CLUSTER_TOL_REL};
use crate::davies::local::{LocalAction, LocalMap};
use crate::error::{Error, Result};
use crate::matrix::{hermitian_basis, hs_inner, Op};
use crate::model::{GibbsState, HamiltonianSpec};
use crate::sites::{embed, Interval, SiteSpace};
use crate::spectral::op_norm;
use crate::superop::{Picture, SuperOp};

/// The GKLS dissipator of one site, materialized on its local patch.
#[derive(Clone, Debug)]
pub struct SitePiece {
    pub site: usize,
    pub patch: Interval,
    /// Schrodinger-picture action on the patch.
    pub map: LocalMap,
    /// Distinct Bohr frequencies entering the dissipator.
    pub frequencies: Vec<f64>,
    /// The weighted jump operators (chi(omega), S^omega) on the patch, kept
    /// for spectral work in the sector representation.
    pub kraus: Vec<(f64, Op)>,
}

/// Builds the site dissipator
/// `L_k(rho) = sum_{omega,alpha} chi(omega) (S^w rho S^w+ - 1/2 {rho, S^w+ S^w})`
/// from explicit couplings; the couplings must form an orthonormal
/// self-adjoint family on the site.
pub fn build_site_piece_with_couplings(
    spec: &HamiltonianSpec,
    n: usize,
    site: usize,
    couplings: &[Op],
    bath: &Bath,
    cluster_tol_rel: f64,
) -> Result<SitePiece> {
    if !(1..=n).contains(&site) {
        return Err(Error::SiteOutOfRange(format!("site {site} of chain [1,{n}]")));
    }
    let d = spec.local_dim;
    for (i, a) in couplings.iter().enumerate() {
        if a.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "coupling dim {} vs local dim {d}",
                a.dim()
            )));
        }
        if a.herm_residual() > 1e-10 {
            return Err(Error::NotHermitian { residual: a.herm_residual() });
        }
        for (j, b) in couplings.iter().enumerate() {
            let ip = hs_inner(a, b);
            let want = if i == j { 1.0 } else { 0.0 };
            if (ip.re - want).abs() > 1e-10 || ip.im.abs() > 1e-10 {
                return Err(Error::InvalidParameter(format!(
                    "couplings not orthonormal: <S{i}, S{j}> = {ip:?}"
                )));
            }
        }
    }

    // patch: union of supports of the terms overlapping the site
    let mut lo = site;
    let mut hi = site;
    for (start, t) in spec.terms_overlapping(site, n) {
        lo = lo.min(start);
        hi = hi.max(start + t.span - 1);
    }
    let patch = Interval::new(lo, hi);
    let pspace = SiteSpace::new(patch.len(), d)?;
    let h_loc = {
        let mut h = Op::zeros(pspace.total_dim());
        for (start, t) in spec.terms_overlapping(site, n) {
            let rel: Vec<usize> = (0..t.span).map(|o| start - lo + 1 + o).collect();
            h = h.add(&embed(&t.matrix, &rel, &pspace)?);
        }
        h.hermitize()
    };
    let cluster_tol = (cluster_tol_rel * op_norm(&h_loc)).max(1e-12);

    let pdim = pspace.total_dim();
    let mut acc = SuperOp::zeros(pdim, Picture::Schrodinger)?;
    let mut freqs: Vec<f64> = Vec::new();
    let mut kraus: Vec<(f64, Op)> = Vec::new();
    let site_rel = site - lo + 1;
    for s in couplings {
        let s_patch = embed(s, &[site_rel], &pspace)?;
        let bohr = bohr_decompose(&h_loc, &s_patch, cluster_tol)?;
        for (w, comp) in bohr.frequencies.iter().zip(bohr.components.iter()) {
            let chi_val = bath.chi(*w);
            let chi = c64::new(chi_val, 0.0);
            let jump = SuperOp::from_left_right(comp, &comp.adjoint(), Picture::Schrodinger)?;
            let ss = comp.adjoint().matmul(comp);
            let left = SuperOp::from_left_right(&ss, &Op::identity(pdim), Picture::Schrodinger)?;
            let right = SuperOp::from_left_right(&Op::identity(pdim), &ss, Picture::Schrodinger)?;
            let half = c64::new(0.5, 0.0);
            let term = jump.sub(&left.scale(half).add(&right.scale(half))?)?.scale(chi);
            acc = acc.add(&term)?;
            kraus.push((chi_val, comp.clone()));
            if !freqs.iter().any(|f| (f - w).abs() < 1e-10) {
                freqs.push(*w);
            }
        }
    }
    freqs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // detailed balance requires the bath to satisfy KMS on these frequencies
    let kms = bath.kms_residual(&freqs);
    if kms > 1e-10 {
        return Err(Error::InvalidParameter(format!("bath violates KMS: residual {kms:.3e}")));
    }
    Ok(SitePiece {
        site,
        patch,
        map: LocalMap { patch, action: LocalAction::Dense(acc.matrix) },
        frequencies: freqs,
        kraus,
    })
}

/// Site dissipator with the default couplings: the normalized Hermitian
/// basis of the local site algebra (Pauli basis for d = 2).
pub fn build_site_piece(
    spec: &HamiltonianSpec,
    n: usize,
    site: usize,
    bath: &Bath,
) -> Result<SitePiece> {
    let couplings = hermitian_basis(spec.local_dim);
    build_site_piece_with_couplings(spec, n, site, &couplings, bath, BOHR_CLUSTER_TOL_REL)
}

/// A Davies generator restricted to a region of the chain.
#[derive(Clone, Debug)]
pub struct DaviesGenerator {
    pub spec: HamiltonianSpec,
    pub n: usize,
    pub region: Vec<usize>,
    pub include_coherent: bool,
    pub bath: Bath,
    pub pieces: Vec<SitePiece>,
    /// Hull of the patches; the generator acts trivially outside.
    pub support: Interval,
    space: SiteSpace,
}

impl DaviesGenerator {
    /// Builds the generator `sum_{k in region} L_k` (plus `-i[H, .]` on the
    /// support hull when `include_coherent`).
    pub fn build(
        spec: &HamiltonianSpec,
        n: usize,
        region: &[usize],
        include_coherent: bool,
        bath: Bath,
    ) -> Result<Self> {
        let space = SiteSpace::new(n, spec.local_dim)?;
        let mut sites: Vec<usize> = region.to_vec();
        sites.sort_unstable();
        sites.dedup();
        let mut pieces = Vec::with_capacity(sites.len());
        for &k in &sites {
            pieces.push(build_site_piece(spec, n, k, &bath)?);
        }
        let support = if pieces.is_empty() {
            Interval::empty()
        } else {
            Interval::new(
                pieces.iter().map(|p| p.patch.lo).min().unwrap(),
                pieces.iter().map(|p| p.patch.hi).max().unwrap(),
            )
        };
        Ok(DaviesGenerator {
            spec: spec.clone(),
            n,
            region: sites,
            include_coherent,
            bath,
            pieces,
            support,
            space,
        })
    }

    pub fn full_chain(
        spec: &HamiltonianSpec,
        n: usize,
        include_coherent: bool,
        bath: Bath,
    ) -> Result<Self> {
        let all: Vec<usize> = (1..=n).collect();
        Self::build(spec, n, &all, include_coherent, bath)
    }

    pub fn local_dim(&self) -> usize {
        self.spec.local_dim
    }

    /// Gibbs state of the Hamiltonian restricted to `scope`.
    pub fn gibbs_on(&self, scope: &Interval) -> Result<GibbsState> {
        GibbsState::new(&self.spec.hamiltonian_on(scope)?, self.bath.beta)
    }

    fn coherent_h(&self, scope: &Interval) -> Result<Op> {
        self.spec.hamiltonian_on(scope)
    }

    /// Applies the Schrodinger generator to an operator on `scope` (which
    /// must contain the support).
    pub fn apply_schrodinger(&self, rho: &Op, scope: &Interval) -> Result<Op> {
        self.apply_schrodinger_ext(rho, scope, 1)
    }

    /// Schrodinger application of `L (x) id` with an ancilla of the given
    /// dimension appended after the scope.
    pub fn apply_schrodinger_ext(
        &self,
        rho: &Op,
        scope: &Interval,
        ancilla: usize,
    ) -> Result<Op> {
        if !self.support.is_empty()
            && (scope.lo > self.support.lo || scope.hi < self.support.hi)
        {
            return Err(Error::Geometry(format!(
                "scope {scope} does not contain generator support {}",
                self.support
            )));
        }
        let d = self.local_dim();
        let dim = d.pow(scope.len() as u32) * ancilla;
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs scope dim {dim}",
                rho.dim()
            )));
        }
        let mut out = Op::zeros(dim);
        for p in &self.pieces {
            out = out.add(&p.map.apply_with_ancilla(rho, scope, d, ancilla));
        }
        if self.include_coherent {
            let h = self.coherent_h(scope)?.kron(&Op::identity(ancilla));
            out = out.add(&h.commutator(rho).scale(c64::new(0.0, -1.0)));
        }
        Ok(out)
    }

    /// Heisenberg-picture application (HS adjoint of the Schrodinger form).
    pub fn apply_heisenberg(&self, x: &Op, scope: &Interval) -> Result<Op> {
        let d = self.local_dim();
        let dim = d.pow(scope.len() as u32);
        let mut out = Op::zeros(dim);
        for p in &self.pieces {
            out = out.add(&p.map.hs_adjoint().apply(x, scope, d));
        }
        if self.include_coherent {
            let h = self.coherent_h(scope)?;
            out = out.add(&h.commutator(x).scale(c64::new(0.0, 1.0)));
        }
        Ok(out)
    }

    /// Upper bound on the induced one-norm of the generator, used to pick
    /// integrator steps.
    pub fn one_norm_bound(&self, scope: &Interval) -> Result<f64> {
        let mut s: f64 = self.pieces.iter().map(|p| p.map.one_norm()).sum();
        if self.include_coherent {
            s += 2.0 * op_norm(&self.coherent_h(scope)?);
        }
        Ok(s.max(1e-12))
    }

    /// Power-iteration estimate of the spectral radius of the generator on
    /// `scope`; tighter than the one-norm bound and used for step sizing.
    pub fn spectral_radius_estimate(&self, scope: &Interval) -> Result<f64> {
        let d = self.local_dim();
        let dim = d.pow(scope.len() as u32);
        let mut rng = <rand::rngs::StdRng as rand::SeedableRng>::seed_from_u64(0x5bec);
        let mut x = crate::rng::random_hermitian(&mut rng, dim);
        let mut est = 0.0f64;
        for _ in 0..25 {
            let y = self.apply_schrodinger(&x, scope)?;
            let norm = crate::spectral::hs_norm(&y);
            let base = crate::spectral::hs_norm(&x).max(1e-300);
            est = est.max(norm / base);
            if norm < 1e-280 {
                break;
            }
            x = y.scale(c64::new(1.0 / norm.max(1e-300), 0.0));
        }
        Ok(est.max(1e-12))
    }

    /// e^{t L}(rho) on `scope` by Taylor stepping with sub-steps sized from
    /// the spectral radius; exact to machine precision at every grid point.
    pub fn trajectory(&self, rho0: &Op, grid: &[f64], scope: &Interval) -> Result<Vec<Op>> {
        for w in grid.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::InvalidParameter("time grid must increase".into()));
            }
        }
        if let Some(&t0) = grid.first() {
            if t0 < 0.0 {
                return Err(Error::InvalidParameter(format!("negative time {t0}")));
            }
        }
        let rho_est = self.spectral_radius_estimate(scope)?;
        let dt_max = 1.0 / (1.15 * rho_est);
        let mut out = Vec::with_capacity(grid.len());
        let mut rho = rho0.clone();
        let mut t = 0.0f64;
        for &tg in grid {
            let mut remaining = tg - t;
            while remaining > 1e-15 {
                let dt = remaining.min(dt_max);
                rho = self.taylor_step(&rho, dt, scope)?;
                remaining -= dt;
            }
            t = tg;
            out.push(rho.clone());
        }
        Ok(out)
    }

    pub fn evolve(&self, rho0: &Op, t: f64, scope: &Interval) -> Result<Op> {
        if t < 0.0 {
            return Err(Error::InvalidParameter(format!("negative time {t}")));
        }
        if t == 0.0 {
            return Ok(rho0.clone());
        }
        Ok(self.trajectory(rho0, &[t], scope)?.pop().unwrap())
    }

    fn taylor_step(&self, rho: &Op, dt: f64, scope: &Interval) -> Result<Op> {
        let mut acc = rho.clone();
        let mut term = rho.clone();
        for j in 1..=16u32 {
            term = self.apply_schrodinger(&term, scope)?.scale(c64::new(dt / j as f64, 0.0));
            acc = acc.add(&term);
        }
        Ok(acc)
    }

    /// Dense superoperator on `scope` (memory-guarded), built column by
    /// column.
    pub fn superop_dense(&self, scope: &Interval, picture: Picture) -> Result<SuperOp> {
        let d = self.local_dim();
        let dim = d.pow(scope.len() as u32);
        SuperOp::guard_dim(dim)?;
        let mut m = faer::Mat::<c64>::zeros(dim * dim, dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                let e = Op::from_fn(dim, |a, b| {
                    if (a, b) == (i, j) {
                        c64::ONE
                    } else {
                        c64::ZERO
                    }
                });
                let img = match picture {
                    Picture::Schrodinger => self.apply_schrodinger(&e, scope)?,
                    Picture::Heisenberg => self.apply_heisenberg(&e, scope)?,
                };
                let col = i + j * dim;
                for b in 0..dim {
                    for a in 0..dim {
                        m[(a + b * dim, col)] = img.at(a, b);
                    }
                }
            }
        }
        SuperOp::from_matrix(m, picture)
    }

    /// || L_*(sigma) ||_op for the Gibbs state on `scope`; zero for an exact
    /// fixed point.
    pub fn fixed_point_residual(&self, scope: &Interval) -> Result<f64> {
        let g = self.gibbs_on(scope)?;
        Ok(op_norm(&self.apply_schrodinger(&g.sigma, scope)?.hermitize()))
    }

    /// Max over sampled pairs of |tr[s L(X) Y] - tr[s X L(Y)]| / (||X|| ||Y||),
    /// the GNS symmetry defect of the dissipative part.
    pub fn gns_symmetry_residual(
        &self,
        scope: &Interval,
        samples: usize,
        rng: &mut impl rand::Rng,
    ) -> Result<f64> {
        let g = self.gibbs_on(scope)?;
        let dim = g.dim();
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x = crate::rng::random_hermitian(rng, dim);
            let y = crate::rng::random_hermitian(rng, dim);
            let lx = self.apply_heisenberg(&x, scope)?;
            let ly = self.apply_heisenberg(&y, scope)?;
            let lhs = g.sigma.matmul(&lx).matmul(&y).trace();
            let rhs = g.sigma.matmul(&x).matmul(&ly).trace();
            let scale = op_norm(&x) * op_norm(&y);
            worst = worst.max((lhs - rhs).norm() / scale.max(1e-300));
        }
        Ok(worst)
    }

    /// The chain interval.
    pub fn chain(&self) -> Interval {
        Interval::new(1, self.n)
    }

    pub fn space(&self) -> &SiteSpace {
        &self.space
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::davies::bath::{Bath, BathKind};
    use crate::matrix::pauli;
    use crate::model::ising_chain;
    use crate::rng::{random_density, random_hermitian};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn bath(beta: f64) -> Bath {
        Bath::new(BathKind::ExpHalf, beta).unwrap()
    }

    /// Single-qubit chain at beta = 0 with Pauli couplings: the dissipator is
    /// depolarizing-like and fixes the maximally mixed state. Oracle: solve
    /// the fixed point of the 4x4 superoperator directly.
    #[test]
    fn single_qubit_beta_zero_fixes_maximally_mixed() {
        let spec = crate::model::HamiltonianSpec::new(
            2,
            1,
            true,
            vec![crate::model::Term { label: "z".into(), span: 1, matrix: pauli::z(), at: None }],
        )
        .unwrap();
        let gen = DaviesGenerator::full_chain(&spec, 1, false, bath(0.0)).unwrap();
        let scope = Interval::new(1, 1);
        let max_mixed = Op::identity(2).scale(c64::new(0.5, 0.0));
        let img = gen.apply_schrodinger(&max_mixed, &scope).unwrap();
        assert!(img.max_abs() < 1e-12, "maximally mixed not fixed");
        // trace annihilation on random inputs
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..10 {
            let rho = random_density(&mut rng, 2);
            let img = gen.apply_schrodinger(&rho, &scope).unwrap();
            assert!(img.trace().norm() < 1e-13);
        }
    }

    #[test]
    fn single_site_gibbs_is_fixed_at_beta_one() {
        // L_{k*}(sigma) = 0 for H = sigma_z at beta = 1
        let spec = crate::model::HamiltonianSpec::new(
            2,
            1,
            true,
            vec![crate::model::Term { label: "z".into(), span: 1, matrix: pauli::z(), at: None }],
        )
        .unwrap();
        let gen = DaviesGenerator::full_chain(&spec, 1, false, bath(1.0)).unwrap();
        let res = gen.fixed_point_residual(&Interval::new(1, 1)).unwrap();
        assert!(res < 1e-12, "residual {res}");
    }

    #[test]
    fn empty_region_is_zero_generator() {
        let spec = ising_chain(1.0, 0.5);
        let gen = DaviesGenerator::build(&spec, 3, &[], false, bath(0.5)).unwrap();
        let scope = Interval::new(1, 3);
        let mut rng = StdRng::seed_from_u64(4);
        let x = random_hermitian(&mut rng, 8);
        assert!(gen.apply_schrodinger(&x, &scope).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn full_chain_fixes_gibbs() {
        let spec = ising_chain(1.0, 0.5);
        for beta in [0.0, 0.5, 1.0] {
            let gen = DaviesGenerator::full_chain(&spec, 4, false, bath(beta)).unwrap();
            let res = gen.fixed_point_residual(&Interval::new(1, 4)).unwrap();
            assert!(res < 1e-9, "residual {res} at beta {beta}");
        }
    }

    #[test]
    fn gns_symmetry_of_dissipative_part() {
        let spec = ising_chain(1.0, 0.5);
        let gen = DaviesGenerator::full_chain(&spec, 3, false, bath(0.7)).unwrap();
        let mut rng = StdRng::seed_from_u64(5);
        let res = gen.gns_symmetry_residual(&Interval::new(1, 3), 12, &mut rng).unwrap();
        assert!(res < 1e-8, "GNS residual {res}");
    }

    /// Locality: [e^{tL_A}, X_B] = 0 for B outside the support collar.
    #[test]
    fn regional_generator_is_local() {
        let spec = ising_chain(1.0, 0.5);
        let n = 5;
        let gen = DaviesGenerator::build(&spec, n, &[1, 2], false, bath(0.5)).unwrap();
        // support is [1,3] for range-2 Ising
        assert_eq!(gen.support, Interval::new(1, 3));
        let scope = Interval::new(1, n);
        let space = SiteSpace::new(n, 2).unwrap();
        let mut rng = StdRng::seed_from_u64(6);
        let x = random_hermitian(&mut rng, 4);
        let xb = embed(&x, &[4, 5], &space).unwrap();
        let rho = random_density(&mut rng, 32);
        // L(X_B rho X_B ...) commutes: check L(X_B rho) = X_B L(rho)
        let lhs = gen.apply_schrodinger(&xb.matmul(&rho), &scope).unwrap();
        let rhs = xb.matmul(&gen.apply_schrodinger(&rho, &scope).unwrap());
        assert!(lhs.approx_eq(&rhs, 1e-10));
    }

    #[test]
    fn trajectory_preserves_trace_and_reaches_gibbs() {
        let spec = ising_chain(1.0, 0.5);
        let n = 3;
        let gen = DaviesGenerator::full_chain(&spec, n, false, bath(0.8)).unwrap();
        let scope = Interval::new(1, n);
        let mut rng = StdRng::seed_from_u64(7);
        let rho0 = random_density(&mut rng, 8);
        let grid = [0.5, 2.0, 8.0, 30.0];
        let traj = gen.trajectory(&rho0, &grid, &scope).unwrap();
        for rho in &traj {
            assert!((rho.trace().re - 1.0).abs() < 1e-11);
            assert!(rho.herm_residual() < 1e-11);
        }
        let sigma = gen.gibbs_on(&scope).unwrap().sigma;
        let last = traj.last().unwrap();
        assert!(
            last.approx_eq(&sigma, 1e-6),
            "trajectory end distance {}",
            last.distance(&sigma)
        );
    }

    #[test]
    fn evolve_time_zero_and_negative() {
        let spec = ising_chain(1.0, 0.0);
        let gen = DaviesGenerator::full_chain(&spec, 2, false, bath(0.5)).unwrap();
        let scope = Interval::new(1, 2);
        let mut rng = StdRng::seed_from_u64(8);
        let rho = random_density(&mut rng, 4);
        assert!(gen.evolve(&rho, 0.0, &scope).unwrap().approx_eq(&rho, 0.0));
        assert!(gen.evolve(&rho, -1.0, &scope).is_err());
    }

    #[test]
    fn dense_superop_matches_apply() {
        let spec = ising_chain(1.0, 0.5);
        let n = 3;
        let gen = DaviesGenerator::full_chain(&spec, n, true, bath(0.5)).unwrap();
        let scope = Interval::new(1, n);
        let sup = gen.superop_dense(&scope, Picture::Schrodinger).unwrap();
        let mut rng = StdRng::seed_from_u64(9);
        let x = random_hermitian(&mut rng, 8);
        let got = sup.apply(&x);
        let want = gen.apply_schrodinger(&x, &scope).unwrap();
        assert!(got.approx_eq(&want, 1e-10));
        // Heisenberg is the HS adjoint
        let sup_h = gen.superop_dense(&scope, Picture::Heisenberg).unwrap();
        let diff = crate::matrix::max_abs(&(&sup_h.matrix - sup.matrix.adjoint()));
        assert!(diff < 1e-10);
    }

    #[test]
    fn s_omega_supported_on_r_ball() {
        // commuting locality: the site piece of a range-2 chain occupies at
        // most 3 sites
        let spec = ising_chain(1.0, 0.5);
        let piece = build_site_piece(&spec, 5, 3, &bath(0.5)).unwrap();
        assert_eq!(piece.patch, Interval::new(2, 4));
        let edge = build_site_piece(&spec, 5, 1, &bath(0.5)).unwrap();
        assert_eq!(edge.patch, Interval::new(1, 2));
    }
}
