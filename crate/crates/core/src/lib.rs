//! Two-phase hybrid measurement protocol for an atomic spin ensemble in the
//! Holstein-Primakoff picture: homodyne squeezing, a π/2 rotation, then
//! no-click evolution until a single photon is detected.
//!
//! * [`model`]: parameters, Gaussian moments, stage machine.
//! * [`dynamics`]: moment equations, closed forms, click statistics.
//! * [`wigner`]: phase-space grids, photon subtraction, Airy and φ-basis.
//! * [`fock`]: Fock-basis reconstruction, eigensolver, QFI.
//! * [`metrology`]: classical and quantum Fisher information, figure sweeps.
//! * [`shipped`]: parameter sets and grids of the figure runs.

pub mod dynamics;
pub mod error;
pub mod fock;
pub mod io;
pub mod metrology;
pub mod model;
pub mod quad;
pub mod shipped;
pub mod wigner;

pub use error::{Error, Result};
pub use model::{initial_scs, rotate_half_pi, GaussianMoments, ProtocolParams, ProtocolStage, StageTag};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
