//! Shared domain types: protocol parameters, Gaussian moments and the
//! protocol stage machine.
//!
//! Quadratures follow [X, P] = i with vacuum variance 1/2. Times are in the
//! same unit as 1/gamma (or 1/kappa when gamma = 0).

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};

/// Physical rates and times of one protocol run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolParams {
    /// Measurement rate.
    pub kappa: f64,
    /// Optical-pumping rate.
    pub gamma: f64,
    pub n_atoms: u64,
    /// Detection efficiency.
    pub eta: f64,
    /// Phase-I (homodyne) duration.
    pub t1: f64,
    /// Phase-II pre-click duration.
    pub t2: f64,
    /// Cumulative click probability target.
    pub p_threshold: f64,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        ProtocolParams {
            kappa: 1.0,
            gamma: 1.0,
            n_atoms: 500,
            eta: 1.0,
            t1: 0.0,
            t2: 0.0,
            p_threshold: 0.2,
        }
    }
}

fn bad(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParams {
        field,
        reason: reason.into(),
    }
}

impl ProtocolParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("eta", self.eta),
            ("t1", self.t1),
            ("t2", self.t2),
            ("p_threshold", self.p_threshold),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(bad(name, format!("must be finite, got {v}")));
            }
        }
        if self.kappa < 0.0 {
            return Err(bad("kappa", "must be >= 0"));
        }
        if self.gamma < 0.0 {
            return Err(bad("gamma", "must be >= 0"));
        }
        if self.kappa == 0.0 && self.gamma == 0.0 {
            return Err(bad("kappa", "kappa and gamma cannot both be zero"));
        }
        if self.n_atoms < 1 {
            return Err(bad("n_atoms", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(bad("eta", "must lie in [0, 1]"));
        }
        if self.t1 < 0.0 {
            return Err(bad("t1", "must be >= 0"));
        }
        if self.t2 < 0.0 {
            return Err(bad("t2", "must be >= 0"));
        }
        if !(0.0..1.0).contains(&self.p_threshold) {
            return Err(bad("p_threshold", "must lie in [0, 1)"));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.n_atoms as f64
    }

    /// Bopp damping factor e^{-2γ(t1+t2)} of the pre-click frame.
    pub fn bopp_damping(&self) -> f64 {
        if self.gamma == 0.0 {
            1.0
        } else {
            (-2.0 * self.gamma * (self.t1 + self.t2)).exp()
        }
    }

    pub fn with_times(mut self, t1: f64, t2: f64) -> Self {
        self.t1 = t1;
        self.t2 = t2;
        self
    }
}

/// Zero-mean Gaussian state, fully described by its two variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMoments {
    pub var_x: f64,
    pub var_p: f64,
}

impl GaussianMoments {
    pub fn new(var_x: f64, var_p: f64) -> Result<Self> {
        if !(var_x.is_finite() && var_x > 0.0) {
            return Err(Error::Domain(format!("var_x must be positive, got {var_x}")));
        }
        if !(var_p.is_finite() && var_p > 0.0) {
            return Err(Error::Domain(format!("var_p must be positive, got {var_p}")));
        }
        Ok(GaussianMoments { var_x, var_p })
    }

    pub fn product(&self) -> f64 {
        self.var_x * self.var_p
    }

    /// Tr ρ² of the Gaussian state (ħ = 1 frame).
    pub fn purity(&self) -> f64 {
        0.5 / self.product().sqrt()
    }
}

/// The spin coherent state, i.e. the HPA vacuum.
pub fn initial_scs() -> GaussianMoments {
    GaussianMoments {
        var_x: 0.5,
        var_p: 0.5,
    }
}

/// π/2 rotation about the mean-spin axis: exchanges the quadratures.
pub fn rotate_half_pi(m: GaussianMoments) -> GaussianMoments {
    GaussianMoments {
        var_x: m.var_p,
        var_p: m.var_x,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StageTag {
    Initial,
    PhaseI,
    Rotated,
    PhaseII,
    PostClick,
}

impl fmt::Display for StageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StageTag::Initial => "initial",
            StageTag::PhaseI => "phase_i",
            StageTag::Rotated => "rotated",
            StageTag::PhaseII => "phase_ii",
            StageTag::PostClick => "post_click",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolStage {
    pub tag: StageTag,
    pub elapsed: f64,
}

impl ProtocolStage {
    pub fn start() -> Self {
        ProtocolStage {
            tag: StageTag::Initial,
            elapsed: 0.0,
        }
    }

    /// Moves to `next` after spending `dt` in the current stage. Stages may
    /// only be entered in protocol order and each at most once.
    pub fn advance(self, next: StageTag, dt: f64) -> Result<Self> {
        if next <= self.tag {
            return Err(Error::StageOrder {
                from: self.tag.to_string(),
                to: next.to_string(),
            });
        }
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::Domain(format!("stage duration must be >= 0, got {dt}")));
        }
        Ok(ProtocolStage {
            tag: next,
            elapsed: self.elapsed + dt,
        })
    }
}
