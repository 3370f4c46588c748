//! Seeded random matrices, states and channels for tests and samplers.
//!
//! All randomness in the library flows through explicitly seeded [`StdRng`]s
//! so that every run is reproducible from the recorded seeds.

use faer::prelude::*;
use faer::c64;
use rand::Rng;

use crate::matrix::Op;
use crate::spectral::{minv_sqrt, msqrt};

pub fn gaussian_c64(rng: &mut impl Rng) -> c64 {
    // Box-Muller; E|z|^2 = 1
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (-u1.ln()).sqrt();
    c64::new(r * u2.cos(), r * u2.sin())
}

pub fn random_matrix(rng: &mut impl Rng, dim: usize) -> Op {
    let m = Mat::from_fn(dim, dim, |_, _| gaussian_c64(rng));
    Op::new(m)
}

pub fn random_hermitian(rng: &mut impl Rng, dim: usize) -> Op {
    random_matrix(rng, dim).hermitize()
}

pub fn random_psd(rng: &mut impl Rng, dim: usize) -> Op {
    let g = random_matrix(rng, dim);
    g.matmul(&g.adjoint()).hermitize()
}

/// Full-rank random density matrix (Wishart normalized).
pub fn random_density(rng: &mut impl Rng, dim: usize) -> Op {
    let w = random_psd(rng, dim);
    let t = w.trace().re;
    // tiny ridge keeps the state comfortably full rank
    let ridge = 1e-6 * t / dim as f64;
    let m = w.add(&Op::identity(dim).scale(c64::new(ridge, 0.0)));
    m.scale(c64::new(1.0 / m.trace().re, 0.0))
}

/// Rank-one density matrix from a Haar-like random vector.
pub fn random_pure(rng: &mut impl Rng, dim: usize) -> Op {
    let v: Vec<c64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Op::new(Mat::from_fn(dim, dim, |i, j| v[i] * v[j].conj() / (n * n)))
}

/// Random unitary via QR of a Ginibre matrix with phase fixing.
pub fn random_unitary(rng: &mut impl Rng, dim: usize) -> Op {
    let g = random_matrix(rng, dim);
    let qr = g.mat().qr();
    let q = qr.compute_Q();
    let r = qr.R();
    let m = Mat::from_fn(dim, dim, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64::ONE };
        q[(i, j)] * phase
    });
    Op::new(m)
}

/// Random CPTP map given as Kraus operators (Stinespring with `k` branches).
pub fn random_channel_kraus(rng: &mut impl Rng, dim: usize, k: usize) -> Vec<Op> {
    // columns of a Haar isometry C^dim -> C^dim (x) C^k
    let big = random_unitary(rng, dim * k);
    let mut kraus = Vec::with_capacity(k);
    for a in 0..k {
        // K_a[i, j] = V[(i, a), j] taking the first `dim` columns
        let m = Mat::from_fn(dim, dim, |i, j| big.at(i * k + a, j));
        kraus.push(Op::new(m));
    }
    kraus
}

/// A density matrix near `sigma`: sigma^(1/2) (1 + eps K) sigma^(1/2)
/// renormalized, with K a random Hermitian perturbation.
pub fn perturbed_density(rng: &mut impl Rng, sigma: &Op, eps: f64) -> Op {
    let k = random_hermitian(rng, sigma.dim());
    let knorm = crate::spectral::op_norm(&k).max(1e-12);
    let scaled = k.scale(c64::new(eps / knorm, 0.0));
    let pos = Op::identity(sigma.dim()).add(&scaled);
    let s = msqrt(sigma).expect("sigma psd");
    let m = s.matmul(&pos).matmul(&s).hermitize();
    // eps < 1 keeps this positive
    m.scale(c64::new(1.0 / m.trace().re, 0.0))
}

/// Random state supported on the range of a full-rank reference, produced by
/// conjugating a random density with reference^(1/2); exercises generic
/// spectra without rank deficiency.
pub fn random_density_like(rng: &mut impl Rng, reference: &Op) -> Op {
    let s = msqrt(reference).expect("reference psd");
    let rho = random_density(rng, reference.dim());
    let m = s.matmul(&rho).matmul(&s).hermitize();
    m.scale(c64::new(1.0 / m.trace().re, 0.0))
}

/// Whitened copy: returns sigma^(-1/2) x sigma^(-1/2) for full-rank sigma.
pub fn whiten(x: &Op, sigma: &Op) -> Op {
    let w = minv_sqrt(sigma, 1e-14).expect("full rank");
    w.matmul(x).matmul(&w).hermitize()
}
