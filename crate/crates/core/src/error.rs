use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite state at t = {time} (last good t = {last_good})")]
    NonFinite { time: f64, last_good: f64 },

    #[error("integrator did not reach relative tolerance {tol} after {halvings} halvings (difference {diff})")]
    StepControl { tol: f64, halvings: u32, diff: f64 },

    #[error("stage transition {from} -> {to} is out of order")]
    StageOrder { from: String, to: String },

    #[error("grid too small: normalization {norm}; suggested bounds x in [{x_min}, {x_max}], p in [{p_min}, {p_max}]")]
    GridTooSmall {
        norm: f64,
        x_min: f64,
        x_max: f64,
        p_min: f64,
        p_max: f64,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("displacement {theta} clips support (lost mass {lost})")]
    SupportClipped { theta: f64, lost: f64 },

    #[error("Fock tail mass {tail} at n_max = {n_max}; increase n_max")]
    TailMass { n_max: usize, tail: f64 },

    #[error("eigenvalue {0} below clamp threshold; state is not positive")]
    Negativity(f64),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("normalization drift {drift} between displaced samples")]
    NormalizationDrift { drift: f64 },

    #[error("phi tail did not converge (outer decade contributes {contribution} of the CFI)")]
    PhiTail { contribution: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams { .. } => "invalid_params",
            Error::Domain(_) => "domain",
            Error::NonFinite { .. } => "non_finite",
            Error::StepControl { .. } => "step_control",
            Error::StageOrder { .. } => "stage_order",
            Error::GridTooSmall { .. } => "grid_too_small",
            Error::GridMismatch(_) => "grid_mismatch",
            Error::SupportClipped { .. } => "support_clipped",
            Error::TailMass { .. } => "tail_mass",
            Error::Negativity(_) => "negativity",
            Error::NoConvergence { .. } => "no_convergence",
            Error::NormalizationDrift { .. } => "normalization_drift",
            Error::PhiTail { .. } => "phi_tail",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
