//! Bath spectral functions chi^{beta,omega} with the KMS condition
//! chi(-omega) = e^{-beta omega} chi(omega).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BathKind {
    /// chi(omega) = e^{beta omega / 2}; satisfies KMS identically.
    ExpHalf,
    /// Glauber form chi(omega) = (1 + e^{-beta omega})^{-1}, bounded by 1.
    Glauber,
}

impl std::str::FromStr for BathKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp-half" | "exp_half" | "exp" => Ok(BathKind::ExpHalf),
            "glauber" => Ok(BathKind::Glauber),
            other => Err(Error::InvalidParameter(format!("unknown bath '{other}'"))),
        }
    }
}

/// A sampled bath spectral function at fixed inverse temperature.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Bath {
    pub kind: BathKind,
    pub beta: f64,
}

impl Bath {
    pub fn new(kind: BathKind, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("bath beta = {beta}")));
        }
        Ok(Bath { kind, beta })
    }

    pub fn chi(&self, omega: f64) -> f64 {
        match self.kind {
            BathKind::ExpHalf => (self.beta * omega / 2.0).exp(),
            BathKind::Glauber => 1.0 / (1.0 + (-self.beta * omega).exp()),
        }
    }

    /// Max relative violation of chi(-w) = e^{-beta w} chi(w) over the
    /// sampled frequencies.
    pub fn kms_residual(&self, omegas: &[f64]) -> f64 {
        omegas
            .iter()
            .map(|&w| {
                let lhs = self.chi(-w);
                let rhs = (-self.beta * w).exp() * self.chi(w);
                (lhs - rhs).abs() / rhs.abs().max(1e-300)
            })
            .fold(0.0, f64::max)
    }

    /// (chi_min, chi_max) over the sampled frequencies.
    pub fn bounds(&self, omegas: &[f64]) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for &w in omegas {
            let c = self.chi(w);
            lo = lo.min(c);
            hi = hi.max(c);
        }
        (lo, hi)
    }
}
