//! Fisher information of the protocol states for displacements along X:
//! homodyne and φ-basis CFI, Fock-space QFI, and the figure sweeps.
//!
//! The pre-click Gaussian carries a Bopp factor c = e^{-2γ(t1+t2)}, so the
//! subtracted Wigner function is an ordinary (ħ = 1) state only after the
//! rescaling X = aX̃, P = bP̃ with ab = c and a² = c·sqrt(Vx/Vp). There the
//! state is a photon-subtracted thermal state of variance sqrt(VxVp)/c.
//! QFI and φ-basis CFI are computed in that frame and divided by a². The
//! homodyne CFI does not depend on the frame and uses the lab-frame grid.

mod cfi;
mod phi;
mod scenario;

pub use cfi::{cfi_from_family, cfi_homodyne, cfi_homodyne_with, fisher_terms, DRIFT_TOL, DTHETA, P_FLOOR};
pub use phi::{cfi_phi, phi_density, phi_density_overlap, tail_mass_beyond, PhiFisher, PhiGridOptions};
pub use scenario::{
    fisher_report, run_scenario, scenario_fig4, scenario_fig5, FisherOptions, FisherReport, PostSelection,
    ScenarioSpec, StateKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{grid_for, qfi_displacement, reconstruct, FockDensityMatrix, DEFAULT_N_MAX};
use crate::model::GaussianMoments;
use crate::wigner::{GridSpec, PolyGaussian, WignerGrid};

/// Scales of the canonical frame X = aX̃, P = bP̃.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalFrame {
    pub a: f64,
    pub b: f64,
}

impl CanonicalFrame {
    /// Frame for pre-click moments `m` with Bopp factor `c`.
    pub fn new(m: GaussianMoments, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::Domain(format!("Bopp factor must lie in (0, 1], got {c}")));
        }
        let a = (c * (m.var_x / m.var_p).sqrt()).sqrt();
        Ok(CanonicalFrame { a, b: c / a })
    }

    pub fn map(&self, s: &PolyGaussian) -> PolyGaussian {
        s.rescaled(self.a, self.b)
    }

    /// Converts Fisher information w.r.t. the canonical displacement into
    /// Fisher information w.r.t. the lab displacement.
    pub fn fisher_scale(&self) -> f64 {
        1.0 / (self.a * self.a)
    }
}

/// Largest cutoff tried by [`qfi`].
pub const N_MAX_LIMIT: usize = 900;

/// QFI of a state given in an ħ = 1 frame, with the reconstruction used.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiResult {
    pub qfi: f64,
    pub rho: FockDensityMatrix,
    pub grid: GridSpec,
}

/// Cutoff guess from the mean occupation, treating the state as thermal.
fn n_max_guess(s: &PolyGaussian) -> usize {
    let (x2, p2) = s.second_moments();
    let nbar = (0.5 * (x2 + p2) - 0.5).max(0.0);
    if nbar < 1e-3 {
        return DEFAULT_N_MAX;
    }
    let decay = (1.0 + 1.0 / nbar).ln();
    ((16.0 / decay) as usize + 20).clamp(DEFAULT_N_MAX, N_MAX_LIMIT)
}

/// Samples `s` on a grid sized for the cutoff and reconstructs ρ, raising
/// the cutoff (and regridding) while the tail rule fails.
pub fn reconstruct_state(s: &PolyGaussian) -> Result<(FockDensityMatrix, WignerGrid)> {
    let (x2, p2) = s.second_moments();
    let mut n_max = n_max_guess(s);
    loop {
        let w = s.sample(grid_for(x2, p2, n_max)?)?;
        match reconstruct(&w, n_max) {
            Err(Error::TailMass { tail, .. }) if n_max < N_MAX_LIMIT => {
                log::info!("tail mass {tail:.2e} at n_max = {n_max}; raising cutoff");
                n_max = (n_max + n_max / 2).min(N_MAX_LIMIT);
            }
            other => return other.map(|rho| (rho, w)),
        }
    }
}

/// Displacement QFI of `s`, which must be a physical (ħ = 1) state.
pub fn qfi(s: &PolyGaussian) -> Result<QfiResult> {
    let (rho, w) = reconstruct_state(s)?;
    Ok(QfiResult {
        qfi: qfi_displacement(&rho),
        rho,
        grid: w.spec,
    })
}
