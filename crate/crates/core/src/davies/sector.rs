//! Spectral representation of GNS-symmetric Davies generators.
//!
//! The generator commutes with the modular flow of the Gibbs state, so in
//! the Hamiltonian eigenbasis it preserves the "Bohr sectors" of matrix-unit
//! pairs (a, b) grouped by the energy difference E_a - E_b. Within each
//! sector the Schrodinger matrix is similar to a Hermitian block under the
//! diagonal GNS weight, which gives exact fixed points, gaps and semigroup
//! exponentials from small dense eigenproblems instead of one D^2 x D^2 one.

use faer::prelude::*;
use faer::c64;

use crate::davies::generator::DaviesGenerator;
use crate::davies::local::{LocalAction, LocalMap};
use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::model::GibbsState;
use crate::sites::{embed, Interval, SiteSpace};
use crate::spectral::{cluster_sorted, eigh, HermEig};
use crate::superop::{Picture, SuperOp};

/// Kernel threshold relative to the largest generator eigenvalue.
pub const KERNEL_TOL_REL: f64 = 1e-10;
/// Largest admissible sector block.
pub const MAX_SECTOR_DIM: usize = 4096;

#[derive(Clone, Debug)]
pub struct Sector {
    pub freq: f64,
    /// Eigenbasis index pairs (a, b) in this sector.
    pub pairs: Vec<(usize, usize)>,
    /// Eigendecomposition of the GNS-symmetrized Schrodinger block.
    pub eig: HermEig,
}

#[derive(Debug)]
pub struct SectorEngine {
    pub scope: Interval,
    pub d: usize,
    pub dim: usize,
    /// Gibbs state of the Hamiltonian restricted to the scope; its
    /// eigenbasis is the working basis.
    pub gibbs: GibbsState,
    pub sectors: Vec<Sector>,
    /// Max Hermiticity defect of the symmetrized blocks, relative.
    pub symmetry_residual: f64,
    /// Largest |eigenvalue| across sectors.
    pub spectral_scale: f64,
}

impl SectorEngine {
    /// Builds the engine for the dissipative part of `gen` on `scope`.
    /// The scope must contain the generator support; the coherent flag is
    /// rejected because the commutator part is not GNS-symmetric.
    pub fn build(gen: &DaviesGenerator, scope: &Interval) -> Result<Self> {
        if gen.include_coherent {
            return Err(Error::InvalidParameter(
                "sector engine wants the dissipative part; build the generator without the \
                 coherent term"
                    .into(),
            ));
        }
        if !gen.support.is_empty()
            && (scope.lo > gen.support.lo || scope.hi < gen.support.hi)
        {
            return Err(Error::Geometry(format!(
                "scope {scope} does not contain support {}",
                gen.support
            )));
        }
        let d = gen.local_dim();
        let gibbs = gen.gibbs_on(scope)?;
        let dim = gibbs.dim();
        let espace = SiteSpace::with_guard(scope.len(), d, dim.max(2))?;

        // cluster the scope energies to define the sectors
        let h_norm = gibbs
            .eig
            .vals
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-12);
        let tol = 1e-8 * h_norm;
        let energy_groups = cluster_sorted(&gibbs.eig.vals, tol);
        let mut cluster_of = vec![0usize; dim];
        let mut cluster_energy = Vec::with_capacity(energy_groups.len());
        for (g, idxs) in energy_groups.iter().enumerate() {
            let e = idxs.iter().map(|&i| gibbs.eig.vals[i]).sum::<f64>() / idxs.len() as f64;
            cluster_energy.push(e);
            for &i in idxs {
                cluster_of[i] = g;
            }
        }

        // sector = clustered value of nu(a,b) = E_a - E_b
        let mut nus: Vec<(f64, usize, usize)> = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                nus.push((cluster_energy[cluster_of[a]] - cluster_energy[cluster_of[b]], a, b));
            }
        }
        nus.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let nu_vals: Vec<f64> = nus.iter().map(|t| t.0).collect();
        let nu_groups = cluster_sorted(&nu_vals, tol);

        let mut sectors_pairs: Vec<(f64, Vec<(usize, usize)>)> = Vec::new();
        let mut pair_lookup = vec![(u32::MAX, u32::MAX); dim * dim];
        for group in &nu_groups {
            let freq = group.iter().map(|&i| nu_vals[i]).sum::<f64>() / group.len() as f64;
            let mut pairs = Vec::with_capacity(group.len());
            for &i in group {
                let (_, a, b) = nus[i];
                pair_lookup[a * dim + b] =
                    (sectors_pairs.len() as u32, pairs.len() as u32);
                pairs.push((a, b));
            }
            if pairs.len() > MAX_SECTOR_DIM {
                return Err(Error::MemoryGuard {
                    what: "sector block",
                    dim: pairs.len(),
                    guard: MAX_SECTOR_DIM,
                });
            }
            sectors_pairs.push((freq, pairs));
        }

        // rotate every jump operator into the eigenbasis
        let u = &gibbs.eig.vecs;
        let mut jumps: Vec<(f64, Mat<c64>)> = Vec::new();
        let mut k_tot = Mat::<c64>::zeros(dim, dim);
        for piece in &gen.pieces {
            let rel = Interval::new(
                piece.patch.lo - scope.lo + 1,
                piece.patch.hi - scope.lo + 1,
            );
            for (chi, s) in &piece.kraus {
                let s_scope = embed(s, &rel.sites(), &espace)?;
                let s_tilde = u.adjoint() * s_scope.mat() * u;
                k_tot += Scale(c64::new(*chi, 0.0)) * (s_tilde.adjoint() * &s_tilde);
                jumps.push((*chi, s_tilde));
            }
        }

        // raw Schrodinger blocks per sector
        let mut blocks: Vec<Mat<c64>> = sectors_pairs
            .iter()
            .map(|(_, pairs)| Mat::zeros(pairs.len(), pairs.len()))
            .collect();
        let mut leakage = 0.0f64;
        for (chi, s) in &jumps {
            let nnz: Vec<(usize, usize, c64)> = nonzeros(s);
            for &(a, c, v1) in &nnz {
                for &(b, dcol, v2) in &nnz {
                    let (sec_row, pos_row) = pair_lookup[a * dim + b];
                    let (sec_col, pos_col) = pair_lookup[c * dim + dcol];
                    if sec_row != sec_col {
                        leakage = leakage.max((v1 * v2.conj()).norm() * chi);
                        continue;
                    }
                    blocks[sec_row as usize][(pos_row as usize, pos_col as usize)] +=
                        c64::new(*chi, 0.0) * v1 * v2.conj();
                }
            }
        }
        // anticommutator part -1/2 (K rho + rho K)
        let kband: Vec<(usize, usize, c64)> = nonzeros(&k_tot);
        for (sec, (_, pairs)) in sectors_pairs.iter().enumerate() {
            for (pos_col, &(c, dcol)) in pairs.iter().enumerate() {
                for &(a, c2, kv) in &kband {
                    if c2 != c {
                        continue;
                    }
                    let (sr, pr) = pair_lookup[a * dim + dcol];
                    if sr as usize == sec {
                        blocks[sec][(pr as usize, pos_col)] -= kv * 0.5;
                    }
                }
                for &(d2, b, kv) in &kband {
                    if d2 != dcol {
                        continue;
                    }
                    let (sr, pr) = pair_lookup[c * dim + b];
                    if sr as usize == sec {
                        blocks[sec][(pr as usize, pos_col)] -= kv * 0.5;
                    }
                }
            }
        }
        if leakage > 1e-10 {
            return Err(Error::EigFailure(format!(
                "sector leakage {leakage:.3e}; energy clustering too fine"
            )));
        }

        // symmetrize with the diagonal GNS weight w_(a,b) = sigma_b and
        // eigendecompose
        let mut sectors = Vec::with_capacity(sectors_pairs.len());
        let mut symmetry_residual = 0.0f64;
        let mut spectral_scale = 0.0f64;
        for (sec, (freq, pairs)) in sectors_pairs.into_iter().enumerate() {
            let s = pairs.len();
            let w: Vec<f64> = pairs.iter().map(|&(_, b)| gibbs.weights[b]).collect();
            let mut m = Mat::<c64>::zeros(s, s);
            for j in 0..s {
                for i in 0..s {
                    m[(i, j)] = blocks[sec][(i, j)] * (w[j] / w[i]).sqrt();
                }
            }
            let mop = Op::new(m);
            let res = mop.herm_residual() / mop.max_abs().max(1e-300);
            symmetry_residual = symmetry_residual.max(res);
            let eig = eigh(&mop.hermitize())?;
            spectral_scale = spectral_scale.max(eig.spectral_norm());
            sectors.push(Sector { freq, pairs, eig });
        }

        Ok(SectorEngine {
            scope: *scope,
            d,
            dim,
            gibbs,
            sectors,
            symmetry_residual,
            spectral_scale,
        })
    }

    /// All generator eigenvalues (real in the symmetrized representation).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut out: Vec<f64> =
            self.sectors.iter().flat_map(|s| s.eig.vals.iter().copied()).collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    fn kernel_threshold(&self) -> f64 {
        KERNEL_TOL_REL * self.spectral_scale.max(1e-300)
    }

    /// Spectral gap: smallest magnitude of a nonzero eigenvalue of -L, with
    /// the margin to the kernel threshold.
    pub fn spectral_gap(&self) -> Result<(f64, f64)> {
        let thresh = self.kernel_threshold();
        let mut gap = f64::INFINITY;
        let mut largest_kernel = 0.0f64;
        for s in &self.sectors {
            for &v in &s.eig.vals {
                let mag = v.abs();
                if mag > thresh {
                    gap = gap.min(mag);
                } else {
                    largest_kernel = largest_kernel.max(mag);
                }
            }
        }
        if !gap.is_finite() {
            return Err(Error::KernelUnstable("no nonzero eigenvalues".into()));
        }
        if gap < 100.0 * thresh.max(largest_kernel) {
            return Err(Error::KernelUnstable(format!(
                "gap {gap:.3e} too close to kernel threshold {thresh:.3e} \
                 (largest kernel magnitude {largest_kernel:.3e})"
            )));
        }
        Ok((gap, gap / thresh.max(1e-300)))
    }

    /// GNS-orthonormal basis of the Heisenberg fixed-point algebra, in the
    /// computational basis of the scope.
    pub fn kernel_basis(&self) -> Result<Vec<Op>> {
        // validate stability first
        let _ = self.spectral_gap()?;
        let thresh = self.kernel_threshold();
        let u = &self.gibbs.eig.vecs;
        let mut out = Vec::new();
        for s in &self.sectors {
            for (col, &v) in s.eig.vals.iter().enumerate() {
                if v.abs() > thresh {
                    continue;
                }
                // Heisenberg kernel op: N = unvec(W^{-1/2} u_col)
                let mut n_eig = Mat::<c64>::zeros(self.dim, self.dim);
                for (pos, &(a, b)) in s.pairs.iter().enumerate() {
                    let w = self.gibbs.weights[b];
                    n_eig[(a, b)] = s.eig.vecs[(pos, col)] / w.sqrt();
                }
                out.push(Op::new(u * n_eig * u.adjoint()));
            }
        }
        Ok(out)
    }

    /// Dense superoperator of e^{tL} on the scope, assembled per sector.
    pub fn exp_superop(&self, t: f64, picture: Picture) -> Result<SuperOp> {
        SuperOp::guard_dim(self.dim)?;
        let dd = self.dim * self.dim;
        let mut m = Mat::<c64>::zeros(dd, dd);
        // vec index of the pair (a, b) in eigenbasis coords is a + b*dim
        for s in &self.sectors {
            let sd = s.pairs.len();
            let core = Mat::from_fn(sd, sd, |i, j| {
                let mut acc = c64::ZERO;
                for k in 0..sd {
                    acc += s.eig.vecs[(i, k)]
                        * c64::new((t * s.eig.vals[k]).exp(), 0.0)
                        * s.eig.vecs[(j, k)].conj();
                }
                acc
            });
            for (pj, &(c, dcol)) in s.pairs.iter().enumerate() {
                for (pi, &(a, b)) in s.pairs.iter().enumerate() {
                    // unsymmetrize: W^{1/2} core W^{-1/2}
                    let w = (self.gibbs.weights[b] / self.gibbs.weights[dcol]).sqrt();
                    m[(a + b * self.dim, c + dcol * self.dim)] = core[(pi, pj)] * w;
                }
            }
        }
        // rotate to the computational basis: vec(U X U^dag) = (U^conj kron U) vec(X)
        let u = Op::new(self.gibbs.eig.vecs.to_owned());
        let rot = u.conjugate().kron(&u);
        let rotated = rot.mat() * m * rot.mat().adjoint();
        let sup = SuperOp::from_matrix(rotated, Picture::Schrodinger)?;
        match picture {
            Picture::Schrodinger => Ok(sup),
            Picture::Heisenberg => Ok(SuperOp {
                dim: sup.dim,
                matrix: sup.matrix.adjoint().to_owned(),
                picture: Picture::Heisenberg,
            }),
        }
    }

    /// Fixed-point data: kernel basis plus the scope Gibbs state, packaged
    /// as a conditional-expectation projection.
    pub fn fixed_point(&self) -> Result<FixedPointProjection> {
        let kernel = self.kernel_basis()?;
        let (gap, margin) = self.spectral_gap()?;
        FixedPointProjection::new(self.scope, self.d, kernel, self.gibbs.clone(), gap, margin)
    }

    /// Hermitian traceless direction of the slowest decaying mode, in the
    /// Schrodinger picture and computational basis. Useful as a seed for
    /// MLSI ratio minimization.
    pub fn slow_mode(&self) -> Result<Op> {
        let thresh = self.kernel_threshold();
        let mut best: Option<(f64, usize, usize)> = None;
        for (si, s) in self.sectors.iter().enumerate() {
            for (k, &v) in s.eig.vals.iter().enumerate() {
                let mag = v.abs();
                if mag > thresh && best.map_or(true, |(b, _, _)| mag < b) {
                    best = Some((mag, si, k));
                }
            }
        }
        let (_, si, k) = best.ok_or_else(|| Error::KernelUnstable("no slow mode".into()))?;
        let s = &self.sectors[si];
        // Schrodinger eigenvector: v = W^{1/2} u
        let mut x_eig = Mat::<c64>::zeros(self.dim, self.dim);
        for (pos, &(a, b)) in s.pairs.iter().enumerate() {
            x_eig[(a, b)] = s.eig.vecs[(pos, k)] * c64::new(self.gibbs.weights[b].sqrt(), 0.0);
        }
        let u = &self.gibbs.eig.vecs;
        let x = Op::new(u * x_eig * u.adjoint());
        // hermitize (the adjoint lives in the mirror sector at -nu) and
        // remove the trace component
        let xh = x.add(&x.adjoint()).scale(c64::new(0.5, 0.0)).hermitize();
        let xh = if xh.max_abs() < 1e-12 {
            x.sub(&x.adjoint()).scale(c64::new(0.0, 0.5)).hermitize()
        } else {
            xh
        };
        let tr = xh.trace().re / self.dim as f64;
        let centered = xh.sub(&Op::identity(self.dim).scale(c64::new(tr, 0.0)));
        let norm = crate::spectral::op_norm(&centered).max(1e-300);
        Ok(centered.scale(c64::new(1.0 / norm, 0.0)))
    }
}

fn nonzeros(m: &Mat<c64>) -> Vec<(usize, usize, c64)> {
    let scale = crate::matrix::max_abs(m).max(1e-300);
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.norm() > 1e-13 * scale {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// The conditional expectation onto the fixed-point algebra of a Davies
/// generator, in both pictures, held as a GNS-orthonormal kernel basis on
/// the generator's scope.
#[derive(Clone, Debug)]
pub struct FixedPointProjection {
    pub scope: Interval,
    pub d: usize,
    /// GNS-orthonormal Heisenberg kernel basis (computational basis coords).
    pub kernel: Vec<Op>,
    pub gibbs: GibbsState,
    pub gap: f64,
    pub kernel_margin: f64,
    heisenberg: LocalMap,
    schrodinger: LocalMap,
}

impl FixedPointProjection {
    pub fn new(
        scope: Interval,
        d: usize,
        kernel: Vec<Op>,
        gibbs: GibbsState,
        gap: f64,
        kernel_margin: f64,
    ) -> Result<Self> {
        if kernel.is_empty() {
            return Err(Error::KernelUnstable("empty fixed-point space".into()));
        }
        let dim = gibbs.dim();
        let p2 = dim * dim;
        let k = kernel.len();
        // B_j = sigma N_j^dag, precomputed once
        let bs: Vec<Op> = kernel.iter().map(|n| gibbs.sigma.matmul(&n.adjoint())).collect();
        // E(X) = sum_j N_j tr(B_j X)
        let h_kets = Mat::from_fn(p2, k, |v, j| kernel[j].at(v % dim, v / dim));
        let h_bras = Mat::from_fn(k, p2, |j, v| bs[j].at(v / dim, v % dim));
        // E_*(rho) = sum_j B_j tr(N_j rho)
        let s_kets = Mat::from_fn(p2, k, |v, j| bs[j].at(v % dim, v / dim));
        let s_bras = Mat::from_fn(k, p2, |j, v| kernel[j].at(v / dim, v % dim));
        let heisenberg =
            LocalMap { patch: scope, action: LocalAction::LowRank { kets: h_kets, bras: h_bras } };
        let schrodinger =
            LocalMap { patch: scope, action: LocalAction::LowRank { kets: s_kets, bras: s_bras } };
        Ok(FixedPointProjection {
            scope,
            d,
            kernel,
            gibbs,
            gap,
            kernel_margin,
            heisenberg,
            schrodinger,
        })
    }

    pub fn fixed_point_dim(&self) -> usize {
        self.kernel.len()
    }

    fn dim(&self) -> usize {
        self.gibbs.dim()
    }

    /// E(X) = sum_j N_j tr(sigma N_j^dag X) as a local map on the scope.
    pub fn heisenberg_map(&self) -> &LocalMap {
        &self.heisenberg
    }

    /// E_*(rho) = sum_j (sigma N_j^dag) tr(N_j rho).
    pub fn schrodinger_map(&self) -> &LocalMap {
        &self.schrodinger
    }

    /// Applies E to an operator on an ambient interval containing the scope.
    pub fn apply_heisenberg(&self, x: &Op, ambient: &Interval) -> Op {
        self.heisenberg.apply(x, ambient, self.d)
    }

    pub fn apply_schrodinger(&self, rho: &Op, ambient: &Interval) -> Op {
        self.schrodinger.apply(rho, ambient, self.d)
    }

    /// E_* (x) id with an ancilla appended after the ambient interval.
    pub fn apply_schrodinger_ext(&self, rho: &Op, ambient: &Interval, ancilla: usize) -> Op {
        self.schrodinger.apply_with_ancilla(rho, ambient, self.d, ancilla)
    }

    /// Dense superoperator on the scope (guarded).
    pub fn dense_superop(&self, picture: Picture) -> Result<SuperOp> {
        SuperOp::guard_dim(self.dim())?;
        let map = match picture {
            Picture::Heisenberg => &self.heisenberg,
            Picture::Schrodinger => &self.schrodinger,
        };
        match &map.action {
            LocalAction::LowRank { kets, bras } => SuperOp::from_matrix(kets * bras, picture),
            LocalAction::Dense(m) => SuperOp::from_matrix(m.clone(), picture),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::davies::bath::{Bath, BathKind};
    use crate::davies::generator::DaviesGenerator;
    use crate::model::ising_chain;
    use crate::rng::{random_density, random_hermitian};
    use crate::spectral::is_psd;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn bath(beta: f64) -> Bath {
        Bath::new(BathKind::ExpHalf, beta).unwrap()
    }

    /// Frozen oracle: the single-qubit Davies generator at beta = 0 with
    /// chi = 1 and Pauli couplings has all nontrivial eigenvalues equal to
    /// -2 (4x4 diagonalization oracle: L(rho) = tr(rho) 1 - 2 rho).
    #[test]
    fn depolarizing_gap_matches_dense_oracle() {
        let spec = crate::model::HamiltonianSpec::new(
            2,
            1,
            true,
            vec![crate::model::Term {
                label: "z".into(),
                span: 1,
                matrix: crate::matrix::pauli::z(),
                at: None,
            }],
        )
        .unwrap();
        let gen = DaviesGenerator::full_chain(&spec, 1, false, bath(0.0)).unwrap();
        let scope = Interval::new(1, 1);
        // oracle: dense superoperator spectrum
        let sup = gen.superop_dense(&scope, Picture::Schrodinger).unwrap();
        let mut vals = crate::spectral::eigh(&Op::new(sup.matrix.clone()).hermitize())
            .unwrap()
            .vals;
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // spectrum is {0, -2, -2, -2}
        assert!(vals[3].abs() < 1e-12);
        for v in &vals[..3] {
            assert!((v + 2.0).abs() < 1e-12, "eigenvalue {v}");
        }
        let engine = SectorEngine::build(&gen, &scope).unwrap();
        let (gap, _) = engine.spectral_gap().unwrap();
        assert!((gap - 2.0).abs() < 1e-10, "gap {gap}");
    }

    #[test]
    fn engine_matches_dense_exponential() {
        let spec = ising_chain(1.0, 0.5);
        let n = 3;
        let gen = DaviesGenerator::full_chain(&spec, n, false, bath(0.6)).unwrap();
        let scope = Interval::new(1, n);
        let engine = SectorEngine::build(&gen, &scope).unwrap();
        assert!(engine.symmetry_residual < 1e-9, "residual {}", engine.symmetry_residual);
        // eigenvalues real and <= 0 (detailed balance)
        let vals = engine.eigenvalues();
        assert!(vals.iter().all(|&v| v <= 1e-9));
        // e^{tL} from sectors vs trajectory stepping on random input
        let mut rng = StdRng::seed_from_u64(11);
        let rho = random_density(&mut rng, 8);
        for t in [0.3, 1.7] {
            let via_engine = engine.exp_superop(t, Picture::Schrodinger).unwrap().apply(&rho);
            let via_taylor = gen.evolve(&rho, t, &scope).unwrap();
            assert!(
                via_engine.approx_eq(&via_taylor, 1e-9),
                "exp mismatch at t={t}: {}",
                via_engine.distance(&via_taylor)
            );
        }
    }

    #[test]
    fn fixed_point_is_projection_and_fixes_sigma() {
        let spec = ising_chain(1.0, 0.5);
        let n = 3;
        let gen = DaviesGenerator::full_chain(&spec, n, false, bath(0.5)).unwrap();
        let scope = Interval::new(1, n);
        let engine = SectorEngine::build(&gen, &scope).unwrap();
        let fp = engine.fixed_point().unwrap();
        // full-chain Davies generator is primitive: one fixed point
        assert_eq!(fp.fixed_point_dim(), 1);
        let mut rng = StdRng::seed_from_u64(12);
        let rho = random_density(&mut rng, 8);
        let e_rho = fp.apply_schrodinger(&rho, &scope);
        assert!(e_rho.approx_eq(&engine.gibbs.sigma, 1e-9), "E_* rho != sigma");
        // idempotence and unitality of the Heisenberg picture
        let x = random_hermitian(&mut rng, 8);
        let ex = fp.apply_heisenberg(&x, &scope);
        let eex = fp.apply_heisenberg(&ex, &scope);
        assert!(ex.approx_eq(&eex, 1e-10), "E not idempotent");
        let one = Op::identity(8);
        assert!(fp.apply_heisenberg(&one, &scope).approx_eq(&one, 1e-10), "E not unital");
        // CP: Choi of the dense map is PSD
        let dense = fp.dense_superop(Picture::Heisenberg).unwrap();
        assert!(is_psd(&dense.choi().hermitize(), 1e-9).unwrap());
    }

    #[test]
    fn fixed_point_agrees_with_long_time_limit() {
        let spec = ising_chain(1.0, 0.5);
        let n = 3;
        // regional generator: nontrivial fixed-point algebra
        let gen = DaviesGenerator::build(&spec, n, &[1, 2], false, bath(0.5)).unwrap();
        let scope = Interval::new(1, n);
        let engine = SectorEngine::build(&gen, &scope).unwrap();
        let fp = engine.fixed_point().unwrap();
        assert!(fp.fixed_point_dim() > 1, "regional generator has a larger kernel");
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..3 {
            let rho = random_density(&mut rng, 8);
            let limit = gen.evolve(&rho, 400.0, &scope).unwrap();
            let e_rho = fp.apply_schrodinger(&rho, &scope);
            assert!(
                limit.approx_eq(&e_rho, 1e-7),
                "E_* vs t->infinity limit: {}",
                limit.distance(&e_rho)
            );
        }
        // E_* preserves the global Gibbs state
        let sigma = gen.gibbs_on(&scope).unwrap().sigma;
        assert!(fp.apply_schrodinger(&sigma, &scope).approx_eq(&sigma, 1e-9));
    }

    #[test]
    fn disjoint_regions_gap_is_minimum() {
        let spec = ising_chain(1.0, 0.5);
        let n = 5;
        let beta = 0.5;
        let gap_of = |region: &[usize]| {
            let gen = DaviesGenerator::build(&spec, n, region, false, bath(beta)).unwrap();
            let scope = gen.support;
            SectorEngine::build(&gen, &scope).unwrap().spectral_gap().unwrap().0
        };
        let g1 = gap_of(&[1]);
        let g5 = gap_of(&[5]);
        let g15 = gap_of(&[1, 5]);
        assert!(
            (g15 - g1.min(g5)).abs() < 1e-8,
            "gap(L_1 + L_5) = {g15}, parts {g1}, {g5}"
        );
    }

    #[test]
    fn rejects_coherent_part() {
        let spec = ising_chain(1.0, 0.5);
        let gen = DaviesGenerator::full_chain(&spec, 2, true, bath(0.5)).unwrap();
        assert!(SectorEngine::build(&gen, &Interval::new(1, 2)).is_err());
    }

    #[test]
    fn locality_of_fixed_point_patch() {
        // E_A applied on a larger ambient acts only on the scope
        let spec = ising_chain(1.0, 0.5);
        let n = 5;
        let gen = DaviesGenerator::build(&spec, n, &[1, 2], false, bath(0.5)).unwrap();
        let scope = gen.support; // [1,3]
        let engine = SectorEngine::build(&gen, &scope).unwrap();
        let fp = engine.fixed_point().unwrap();
        let chain = Interval::new(1, n);
        let mut rng = StdRng::seed_from_u64(14);
        // product input: E acts on the left factor only
        let xl = random_hermitian(&mut rng, 8);
        let xr = random_hermitian(&mut rng, 4);
        let x = xl.kron(&xr);
        let got = fp.apply_heisenberg(&x, &chain);
        let want = fp.apply_heisenberg(&xl, &scope).kron(&xr);
        assert!(got.approx_eq(&want, 1e-10));
    }
}
