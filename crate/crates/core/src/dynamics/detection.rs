use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrate::{solve, StepControl};
use super::{evolve_phase1, phase2_rhs};
use crate::error::{Error, Result};
use crate::model::{initial_scs, rotate_half_pi, GaussianMoments, ProtocolParams};

/// Click rate ηκN⟨P²⟩/8 of the single-photon detector.
pub fn detection_rate(m: GaussianMoments, p: &ProtocolParams) -> f64 {
    p.eta * p.kappa * p.n() * m.var_p / 8.0
}

/// Integrated click rate ∫₀^{t2} rate ds along the no-click trajectory
/// starting from the rotated moments `m0`.
fn integrated_rate(p: &ProtocolParams, m0: GaussianMoments, t2: f64, ctl: &StepControl) -> Result<f64> {
    let f = |t: f64, y: &[f64; 3]| {
        let m = GaussianMoments { var_x: y[0], var_p: y[1] };
        let r = phase2_rhs(m, p, t);
        [r.d_var_x, r.d_var_p, detection_rate(m, p)]
    };
    // Seed the accumulated component so its relative error is meaningful.
    let sol = solve(f, [m0.var_x, m0.var_p, 0.0], 0.0, t2, ctl)?;
    Ok(sol.y[2])
}

/// Cumulative click probability 1 - exp(-∫rate) after phase II of length
/// `p.t2`, following phase I of length `p.t1`.
pub fn detection_probability(p: &ProtocolParams) -> Result<f64> {
    p.validate()?;
    let ctl = StepControl::default();
    let m0 = rotate_half_pi(evolve_phase1(p, initial_scs(), p.t1, &ctl)?.moments);
    Ok(-(-integrated_rate(p, m0, p.t2, &ctl)?).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Reached(f64),
    /// The target was not met before `horizon`; `probability` is the value
    /// reached there.
    Unreachable { horizon: f64, probability: f64 },
}

impl Threshold {
    pub fn t2(&self) -> Option<f64> {
        match self {
            Threshold::Reached(t) => Some(*t),
            Threshold::Unreachable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    /// Longest phase II considered. `None` picks 100/γ, or 1e6/(κN) at γ = 0.
    pub horizon: Option<f64>,
    pub rel_tol: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            horizon: None,
            rel_tol: 1e-6,
        }
    }
}

/// Smallest t2 with cumulative click probability ≥ `p.p_threshold`, for
/// phase I of length `t1` (the `t1` stored in `p` is ignored).
pub fn t2_for_threshold(t1: f64, p: &ProtocolParams) -> Result<Threshold> {
    t2_for_threshold_with(t1, p, &ThresholdOptions::default())
}

pub fn t2_for_threshold_with(t1: f64, p: &ProtocolParams, opts: &ThresholdOptions) -> Result<Threshold> {
    let p = p.with_times(t1, 0.0);
    p.validate()?;
    if p.p_threshold == 0.0 {
        return Ok(Threshold::Reached(0.0));
    }
    let horizon = opts.horizon.unwrap_or(if p.gamma > 0.0 {
        100.0 / p.gamma
    } else {
        1e6 / (p.kappa * p.n())
    });
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let ctl = StepControl::default();
    let m0 = rotate_half_pi(evolve_phase1(&p, initial_scs(), t1, &ctl)?.moments);
    // P ≥ thr  ⇔  ∫rate ≥ -ln(1 - thr).
    let target = -(-p.p_threshold).ln_1p();
    let lambda = |t2: f64| integrated_rate(&p, m0, t2, &ctl);

    let rate0 = detection_rate(m0, &p);
    let mut hi = if rate0 > 0.0 { (target / rate0).min(horizon) } else { horizon };
    let mut lo = 0.0;
    loop {
        let l = lambda(hi)?;
        if l >= target {
            break;
        }
        if hi >= horizon {
            return Ok(Threshold::Unreachable {
                horizon,
                probability: -(-l).exp_m1(),
            });
        }
        lo = hi;
        hi = (2.0 * hi).min(horizon);
    }
    while hi - lo > opts.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if lambda(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold::Reached(hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeBudget {
    pub t1: f64,
    pub t2: f64,
    pub total: f64,
}

impl TimeBudget {
    pub fn new(t1: f64, t2: f64) -> Self {
        TimeBudget { t1, t2, total: t1 + t2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetPoint {
    pub t1: f64,
    pub outcome: Threshold,
}

impl BudgetPoint {
    pub fn budget(&self) -> Option<TimeBudget> {
        self.outcome.t2().map(|t2| TimeBudget::new(self.t1, t2))
    }
}

/// T(t1) = t1 + t2(t1) over an increasing t1 grid, evaluated in parallel.
pub fn total_time_curve(t1_grid: &[f64], p: &ProtocolParams) -> Result<Vec<BudgetPoint>> {
    if t1_grid.is_empty() {
        return Err(Error::Domain("t1 grid is empty".into()));
    }
    if t1_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("t1 grid must be strictly increasing".into()));
    }
    p.validate()?;
    t1_grid
        .par_iter()
        .map(|&t1| Ok(BudgetPoint { t1, outcome: t2_for_threshold(t1, p)? }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        let p = ProtocolParams::default();
        assert_eq!(detection_rate(initial_scs(), &p), 500.0 / 16.0);
        let anti = GaussianMoments::new(0.1, 2.0).unwrap();
        assert_eq!(detection_rate(anti, &p) / detection_rate(initial_scs(), &p), 4.0);
        let dark = ProtocolParams { eta: 0.0, ..p };
        assert_eq!(detection_rate(anti, &dark), 0.0);
    }

    #[test]
    fn zero_threshold() {
        let p = ProtocolParams { p_threshold: 0.0, ..Default::default() };
        assert_eq!(t2_for_threshold(0.3, &p).unwrap(), Threshold::Reached(0.0));
    }

    #[test]
    fn no_detector_is_unreachable() {
        let p = ProtocolParams { eta: 0.0, ..Default::default() };
        let out = t2_for_threshold_with(0.0, &p, &ThresholdOptions { horizon: Some(5.0), ..Default::default() }).unwrap();
        assert!(matches!(out, Threshold::Unreachable { probability, .. } if probability == 0.0));
    }

    #[test]
    fn threshold_hits_target() {
        let p = ProtocolParams::default();
        let t2 = t2_for_threshold(0.05, &p).unwrap().t2().unwrap();
        let prob = detection_probability(&p.with_times(0.05, t2)).unwrap();
        assert!((prob - 0.2).abs() < 1e-5, "{prob}");
    }

    #[test]
    fn curve_rejects_bad_grids() {
        let p = ProtocolParams::default();
        assert!(total_time_curve(&[], &p).is_err());
        assert!(total_time_curve(&[0.1, 0.1], &p).is_err());
        assert_eq!(total_time_curve(&[0.2], &p).unwrap().len(), 1);
    }
}
