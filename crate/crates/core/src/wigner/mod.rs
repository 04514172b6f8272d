//! Phase-space engine: sampled Wigner functions, photon subtraction,
//! displacement, marginals, the Airy function and φ-basis Wigner functions.

mod airy;
mod grid;
mod phi;
mod state;

pub use airy::airy_ai;
pub use grid::{displace_x, marginal_x, overlap, Axis, GridSpec, Marginal, PhaseGrid, WignerGrid, CLIP_TOL, NORM_TOL};
pub use phi::{phi_wigner, PhiState};
pub use state::{gaussian_wigner, photon_subtract, PolyGaussian, SubtractionContext};
