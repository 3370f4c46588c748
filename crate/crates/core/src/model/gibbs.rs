//! Gibbs states sigma = e^{-beta H} / tr e^{-beta H}.


use crate::error::{Error, Result};
use crate::matrix::Op;
use crate::spectral::{eigh_checked, HermEig};

/// A full-rank thermal state together with its Hamiltonian eigendata.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub beta: f64,
    pub hamiltonian: Op,
    pub sigma: Op,
    pub log_sigma: Op,
    /// Eigendecomposition of the Hamiltonian (ascending).
    pub eig: HermEig,
    /// Boltzmann weights in the eigenbasis (the spectrum of sigma, aligned
    /// with `eig.vals`).
    pub weights: Vec<f64>,
}

impl GibbsState {
    /// Builds the Gibbs state of `h` at inverse temperature `beta >= 0`.
    /// The spectrum is shifted by its minimum before exponentiating so large
    /// beta cannot overflow.
    pub fn new(h: &Op, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta = {beta}")));
        }
        let eig = eigh_checked(h, 1e-9)?;
        let e0 = eig.min();
        let boltz: Vec<f64> = eig.vals.iter().map(|&e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = boltz.iter().sum();
        let weights: Vec<f64> = boltz.iter().map(|w| w / z).collect();
        let lnz_shifted = z.ln();
        let sigma = eig.with_diagonal(&weights);
        // ln sigma = -beta (H - e0) - ln Z
        let log_sigma = eig.apply_fn(move |e| -beta * (e - e0) - lnz_shifted);
        Ok(GibbsState { beta, hamiltonian: h.clone(), sigma, log_sigma, eig, weights })
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    /// sigma^(1/2).
    pub fn sigma_sqrt(&self) -> Op {
        self.power(0.5)
    }

    /// sigma^p through the cached eigenbasis.
    pub fn power(&self, p: f64) -> Op {
        let d: Vec<f64> = self.weights.iter().map(|w| w.powf(p)).collect();
        self.eig.with_diagonal(&d)
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Purity tr(sigma^2).
    pub fn purity(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}
