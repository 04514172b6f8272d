use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::grid::{GridSpec, PhaseGrid, WignerGrid};
use crate::error::{Error, Result};
use crate::model::{GaussianMoments, ProtocolParams};

/// Photon-subtraction data: Bopp damping c and the normalization ⟨P²⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubtractionContext {
    pub bopp_damping: f64,
    pub norm: f64,
}

impl SubtractionContext {
    pub fn new(bopp_damping: f64, norm: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&bopp_damping) {
            return Err(Error::Domain(format!("Bopp damping must lie in [0, 1], got {bopp_damping}")));
        }
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::Domain(format!("normalization must be positive, got {norm}")));
        }
        Ok(SubtractionContext { bopp_damping, norm })
    }

    /// Context for a click after the protocol described by `p`, whose
    /// pre-click moments are `pre`.
    pub fn for_protocol(p: &ProtocolParams, pre: GaussianMoments) -> Self {
        SubtractionContext {
            bopp_damping: p.bopp_damping(),
            norm: pre.var_p,
        }
    }
}

/// W(X, P) = (c0 + cx X² + cp P²)·G(X; Vx)·G(P; Vp), with G a normalized
/// zero-mean normal density. Covers the pre-click Gaussian and the
/// photon-subtracted state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolyGaussian {
    pub var_x: f64,
    pub var_p: f64,
    pub c0: f64,
    pub cx: f64,
    pub cp: f64,
}

fn normal(x: f64, var: f64) -> f64 {
    (-0.5 * x * x / var).exp() / (2.0 * PI * var).sqrt()
}

impl PolyGaussian {
    pub fn gaussian(m: GaussianMoments) -> Self {
        PolyGaussian {
            var_x: m.var_x,
            var_p: m.var_p,
            c0: 1.0,
            cx: 0.0,
            cp: 0.0,
        }
    }

    /// Applies P² + (c²/4)∂²_X to the Gaussian and divides by ⟨P²⟩:
    /// W_post = [P² + (c²/4)(X²/Vx² - 1/Vx)]·W_pre / Vp.
    pub fn photon_subtracted(m: GaussianMoments, ctx: &SubtractionContext) -> Result<Self> {
        check_norm(m, ctx)?;
        let c2 = ctx.bopp_damping * ctx.bopp_damping;
        let (vx, vp) = (m.var_x, m.var_p);
        Ok(PolyGaussian {
            var_x: vx,
            var_p: vp,
            c0: -c2 / (4.0 * vx * vp),
            cx: c2 / (4.0 * vx * vx * vp),
            cp: 1.0 / vp,
        })
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        (self.c0 + self.cx * x * x + self.cp * p * p) * normal(x, self.var_x) * normal(p, self.var_p)
    }

    /// ∫∫ W, exactly.
    pub fn mass(&self) -> f64 {
        self.c0 + self.cx * self.var_x + self.cp * self.var_p
    }

    /// Exact position density ∫ W dP.
    pub fn marginal_x(&self, x: f64) -> f64 {
        (self.c0 + self.cx * x * x + self.cp * self.var_p) * normal(x, self.var_x)
    }

    /// Exact momentum density ∫ W dX.
    pub fn marginal_p(&self, p: f64) -> f64 {
        (self.c0 + self.cx * self.var_x + self.cp * p * p) * normal(p, self.var_p)
    }

    /// Exact (⟨X²⟩, ⟨P²⟩).
    pub fn second_moments(&self) -> (f64, f64) {
        let (vx, vp) = (self.var_x, self.var_p);
        (
            self.c0 * vx + 3.0 * self.cx * vx * vx + self.cp * vp * vx,
            self.c0 * vp + self.cx * vx * vp + 3.0 * self.cp * vp * vp,
        )
    }

    /// The same state in rescaled coordinates X = a X̃, P = b P̃:
    /// W̃(X̃, P̃) = ab·W(a X̃, b P̃).
    pub fn rescaled(&self, a: f64, b: f64) -> Self {
        PolyGaussian {
            var_x: self.var_x / (a * a),
            var_p: self.var_p / (b * b),
            c0: self.c0,
            cx: self.cx * a * a,
            cp: self.cp * b * b,
        }
    }

    /// Default 512 × 512 grid over ±8 standard deviations of this state.
    pub fn default_grid(&self) -> Result<GridSpec> {
        let (x2, p2) = self.second_moments();
        GridSpec::default_for(x2, p2)
    }

    pub fn sample(&self, spec: GridSpec) -> Result<WignerGrid> {
        WignerGrid::new(PhaseGrid::from_fn(spec, |x, p| self.eval(x, p)))
    }
}

fn check_norm(m: GaussianMoments, ctx: &SubtractionContext) -> Result<()> {
    if ((ctx.norm - m.var_p) / m.var_p).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "subtraction norm {} differs from pre-click var_p {}",
            ctx.norm, m.var_p
        )));
    }
    Ok(())
}

/// Pre-click Gaussian W = exp(-X²/2Vx - P²/2Vp)/(2π sqrt(VxVp)) on `spec`.
/// The grid must reach ±6 standard deviations on each axis.
pub fn gaussian_wigner(m: GaussianMoments, spec: GridSpec) -> Result<WignerGrid> {
    let (hx, hp) = (6.0 * m.var_x.sqrt(), 6.0 * m.var_p.sqrt());
    if !spec.covers(hx, hp) {
        let g = PhaseGrid::from_fn(spec, |x, p| normal(x, m.var_x) * normal(p, m.var_p));
        return Err(Error::GridTooSmall {
            norm: g.integral(),
            x_min: -8.0 * m.var_x.sqrt(),
            x_max: 8.0 * m.var_x.sqrt(),
            p_min: -8.0 * m.var_p.sqrt(),
            p_max: 8.0 * m.var_p.sqrt(),
        });
    }
    PolyGaussian::gaussian(m).sample(spec)
}

/// Photon subtraction of the sampled Gaussian `w` (moments `m`): multiplies
/// by the closed-form Bopp polynomial and renormalizes on the grid.
pub fn photon_subtract(w: &WignerGrid, m: GaussianMoments, ctx: &SubtractionContext) -> Result<WignerGrid> {
    let post = PolyGaussian::photon_subtracted(m, ctx)?;
    let spec = w.spec;
    let poly = |x: f64, p: f64| post.c0 + post.cx * x * x + post.cp * p * p;
    let mut values = Vec::with_capacity(w.values.len());
    for i in 0..spec.x.n {
        let x = spec.x.value(i);
        values.extend(w.row(i).iter().enumerate().map(|(j, v)| poly(x, spec.p.value(j)) * v));
    }
    let raw = PhaseGrid::from_values(spec, values)?;
    let norm = raw.integral();
    if (norm - 1.0).abs() > super::grid::NORM_TOL {
        let (x2, p2) = post.second_moments();
        return Err(Error::GridTooSmall {
            norm,
            x_min: -8.0 * x2.sqrt(),
            x_max: 8.0 * x2.sqrt(),
            p_min: -8.0 * p2.sqrt(),
            p_max: 8.0 * p2.sqrt(),
        });
    }
    let values = raw.values.iter().map(|v| v / norm).collect();
    WignerGrid::new(PhaseGrid::from_values(spec, values)?)
}
