//! Bohr (Fourier) decomposition of coupling operators.
//!
//! The components satisfy e^{-itH} S e^{itH} = sum_omega e^{it omega} S^omega,
//! which fixes the sign convention: S^omega collects the matrix elements
//! P_eps S P_eps' with eps' - eps = omega. A property test pins the
//! convention against the covariance identity.

use faer::prelude::*;
use faer::c64;

use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::spectral::{cluster_sorted, eigh_checked};

pub const BOHR_CLUSTER_TOL_REL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct BohrDecomposition {
    /// Distinct Bohr frequencies, ascending.
    pub frequencies: Vec<f64>,
    /// Components aligned with `frequencies`.
    pub components: Vec<Op>,
    pub cluster_tol: f64,
}

impl BohrDecomposition {
    /// Sum of all components; equals the source coupling.
    pub fn reconstruct(&self) -> Op {
        let dim = self.components[0].dim();
        self.components.iter().fold(Op::zeros(dim), |acc, c| acc.add(c))
    }

    pub fn component_at(&self, omega: f64) -> Option<&Op> {
        self.frequencies
            .iter()
            .position(|&w| (w - omega).abs() <= self.cluster_tol.max(1e-12))
            .map(|i| &self.components[i])
    }
}

/// Decomposes `s` into Bohr components of the Hermitian `h`.
///
/// Eigenvalues of `h` are clustered within `cluster_tol`; frequencies are the
/// pairwise cluster differences, clustered again with the same tolerance.
/// Reports an error when either clustering is ambiguous (a cluster spreads
/// over more than three tolerances).
pub fn bohr_decompose(h: &Op, s: &Op, cluster_tol: f64) -> Result<BohrDecomposition> {
    if cluster_tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("cluster_tol = {cluster_tol}")));
    }
    let eig = eigh_checked(h, 1e-9)?;
    let dim = h.dim();
    let groups = check_clusters(&eig.vals, cluster_tol, "eigenvalue")?;
    // energies per cluster
    let energy: Vec<f64> = groups
        .iter()
        .map(|g| g.iter().map(|&i| eig.vals[i]).sum::<f64>() / g.len() as f64)
        .collect();
    // rotate s into the eigenbasis once
    let s_eig = Op::new(eig.vecs.adjoint() * s.mat() * &eig.vecs);

    // all pairwise differences omega = eps' - eps
    let mut diffs: Vec<f64> = Vec::with_capacity(energy.len() * energy.len());
    for &ea in &energy {
        for &eb in &energy {
            diffs.push(eb - ea);
        }
    }
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let freq_groups = check_clusters(&diffs, cluster_tol, "frequency")?;
    let frequencies: Vec<f64> = freq_groups
        .iter()
        .map(|g| g.iter().map(|&i| diffs[i]).sum::<f64>() / g.len() as f64)
        .collect();

    let freq_of = |w: f64| -> usize {
        frequencies
            .iter()
            .position(|&f| (f - w).abs() <= cluster_tol * 3.0 + 1e-14)
            .expect("frequency cluster lookup")
    };

    // accumulate P_a S P_b into the component at eps_b - eps_a, in the
    // eigenbasis (block extraction), then rotate back
    let mut comps_eig: Vec<Mat<c64>> =
        (0..frequencies.len()).map(|_| Mat::zeros(dim, dim)).collect();
    for (ga, group_a) in groups.iter().enumerate() {
        for (gb, group_b) in groups.iter().enumerate() {
            let w = energy[gb] - energy[ga];
            let target = &mut comps_eig[freq_of(w)];
            for &i in group_a {
                for &j in group_b {
                    target[(i, j)] = s_eig.at(i, j);
                }
            }
        }
    }
    let mut components = Vec::with_capacity(frequencies.len());
    let mut keep_freqs = Vec::new();
    let scale = s.max_abs().max(1e-300);
    for (w, c) in frequencies.iter().zip(comps_eig.into_iter()) {
        let back = Op::new(&eig.vecs * c * eig.vecs.adjoint());
        // drop numerically empty components
        if back.max_abs() > 1e-13 * scale {
            components.push(back);
            keep_freqs.push(*w);
        }
    }
    if components.is_empty() {
        components.push(Op::zeros(dim));
        keep_freqs.push(0.0);
    }
    Ok(BohrDecomposition { frequencies: keep_freqs, components, cluster_tol })
}

fn check_clusters(sorted: &[f64], tol: f64, what: &str) -> Result<Vec<Vec<usize>>> {
    let groups = cluster_sorted(sorted, tol);
    for g in &groups {
        let spread = sorted[*g.last().unwrap()] - sorted[g[0]];
        if spread > 3.0 * tol {
            return Err(Error::ClusterAmbiguity(format!(
                "{what} cluster spreads {spread:.3e} over tolerance {tol:.3e}"
            )));
        }
    }
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::pauli;
    use crate::rng::random_hermitian;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn sigma_x_under_sigma_z() {
        let b = bohr_decompose(&pauli::z(), &pauli::x(), 1e-9).unwrap();
        assert_eq!(b.frequencies.len(), 2);
        assert!((b.frequencies[0] + 2.0).abs() < 1e-12);
        assert!((b.frequencies[1] - 2.0).abs() < 1e-12);
        assert!(b.reconstruct().approx_eq(&pauli::x(), 1e-12));
    }

    #[test]
    fn commuting_coupling_is_single_zero_frequency() {
        let b = bohr_decompose(&pauli::z(), &pauli::z(), 1e-9).unwrap();
        assert_eq!(b.frequencies.len(), 1);
        assert!(b.frequencies[0].abs() < 1e-12);
        assert!(b.components[0].approx_eq(&pauli::z(), 1e-12));
    }

    #[test]
    fn reconstruction_on_random_pairs() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..8 {
            let h = random_hermitian(&mut rng, 6);
            let s = random_hermitian(&mut rng, 6);
            let b = bohr_decompose(&h, &s, 1e-8 * crate::spectral::op_norm(&h)).unwrap();
            assert!(b.reconstruct().approx_eq(&s, 1e-9), "sum of components != S");
        }
    }

    /// Pins the sign convention: e^{-itH} S e^{itH} = sum e^{it w} S^w.
    #[test]
    fn covariance_identity_fixes_sign() {
        let mut rng = StdRng::seed_from_u64(33);
        let h = random_hermitian(&mut rng, 5);
        let s = random_hermitian(&mut rng, 5);
        let b = bohr_decompose(&h, &s, 1e-8 * crate::spectral::op_norm(&h)).unwrap();
        for &t in &[0.3, 1.1, -0.7] {
            let eig = crate::spectral::eigh(&h).unwrap();
            let u_t = {
                let d = h.dim();
                let c = Mat::from_fn(d, d, |i, j| {
                    if i == j {
                        c64::new(0.0, -t * eig.vals[i]).exp()
                    } else {
                        c64::ZERO
                    }
                });
                Op::new(eig.vecs.as_ref() * c * eig.vecs.adjoint())
            };
            let lhs = u_t.matmul(&s).matmul(&u_t.adjoint());
            let mut rhs = Op::zeros(h.dim());
            for (w, c) in b.frequencies.iter().zip(b.components.iter()) {
                rhs = rhs.add(&c.scale(c64::new(0.0, t * w).exp()));
            }
            assert!(lhs.approx_eq(&rhs, 1e-9), "covariance violated at t={t}");
        }
    }

    /// (S^w)^dag = S^{-w} for self-adjoint couplings.
    #[test]
    fn adjoint_maps_to_negated_frequency() {
        let mut rng = StdRng::seed_from_u64(37);
        let h = random_hermitian(&mut rng, 4);
        let s = random_hermitian(&mut rng, 4);
        let b = bohr_decompose(&h, &s, 1e-8 * crate::spectral::op_norm(&h)).unwrap();
        for (w, c) in b.frequencies.iter().zip(b.components.iter()) {
            let partner = b.component_at(-w).expect("-w present");
            assert!(c.adjoint().approx_eq(partner, 1e-10));
        }
    }

    #[test]
    fn ambiguous_clustering_reported() {
        // eigenvalues chain into one cluster whose spread exceeds 3 tol
        let h = Op::diag_real(&[0.0, 0.9e-6, 1.8e-6, 2.7e-6, 3.6e-6, 1.0]);
        let s = random_hermitian(&mut StdRng::seed_from_u64(1), 6);
        match bohr_decompose(&h, &s, 1.0e-6) {
            Err(Error::ClusterAmbiguity(_)) => {}
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }
}
