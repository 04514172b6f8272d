//! Wigner functions of the eigenstates |φ⟩ of P⁻¹XP⁻¹.
//!
//! In momentum representation ⟨p|φ⟩ = p·e^{iφp³/3}/sqrt(2π), which is
//! delta-normalized in φ. Its Wigner function is
//!
//! W_φ(X, P) = (2P² - X/φ)·Ai(-ξ) / (π |2φ|^{1/3}),
//! ξ = (2X - 2φP²) / (2φ)^{1/3},
//!
//! with the real signed cube root for φ < 0, so W_{-φ}(X, P) = W_φ(-X, P).
//!
//! Two other printed forms exist: X·Ai(ξ)/(πφ(2φ)^{1/3}) and
//! x·Ai(ξ)/(2π(2φ)^{1/3}). Both drop the 2P² term and flip the sign of the
//! Airy argument, and neither matches a direct Wigner transform of the
//! momentum wavefunction. The form above does.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::airy::airy_ai;
use super::grid::{GridSpec, PhaseGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiState {
    phi: f64,
}

impl PhiState {
    pub fn new(phi: f64) -> Result<Self> {
        if !phi.is_finite() || phi == 0.0 {
            return Err(Error::Domain(format!("phi must be finite and nonzero, got {phi}")));
        }
        Ok(PhiState { phi })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// W_φ(x, p).
    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let phi = self.phi;
        let r = (2.0 * phi).cbrt();
        let xi = (2.0 * x - 2.0 * phi * p * p) / r;
        (2.0 * p * p - x / phi) * airy_ai(-xi) / (PI * r.abs())
    }
}

/// W_φ sampled on a grid (not trace-normalizable).
pub fn phi_wigner(s: PhiState, spec: GridSpec) -> PhaseGrid {
    PhaseGrid::from_fn(spec, move |x, p| s.wigner(x, p))
}
