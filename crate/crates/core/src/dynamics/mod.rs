//! Moment equations of motion for both protocol phases, closed-form
//! solutions, click statistics and total-time budgets.

mod closed_form;
mod detection;
pub mod integrate;

pub use closed_form::{closed_form_final, linear_relaxation, riccati_squeeze, zeta};
pub use detection::{
    detection_probability, detection_rate, t2_for_threshold, t2_for_threshold_with, total_time_curve,
    BudgetPoint, Threshold, ThresholdOptions, TimeBudget,
};
pub use integrate::StepControl;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{initial_scs, rotate_half_pi, GaussianMoments, ProtocolParams, ProtocolStage, StageTag};

/// Time derivative of the two variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRates {
    pub d_var_x: f64,
    pub d_var_p: f64,
}

/// Optical-pumping contribution to d⟨Q^n⟩/dt given ⟨Q^n⟩ and ⟨Q^{n-2}⟩.
pub fn pumping_moment_rate(n: u32, moment_n: f64, moment_n_minus_2: f64, gamma: f64) -> f64 {
    let n = n as f64;
    -n * gamma * moment_n + 0.5 * gamma * n * (n - 1.0) * moment_n_minus_2
}

fn pumping(v: f64, gamma: f64) -> f64 {
    pumping_moment_rate(2, v, 1.0, gamma)
}

/// Phase-I (homodyne) equations of motion at time t since protocol start.
pub fn phase1_rhs(m: GaussianMoments, p: &ProtocolParams, t: f64) -> MomentRates {
    let n = p.n();
    MomentRates {
        d_var_x: p.kappa * n / 8.0 * (-4.0 * p.gamma * t).exp() + pumping(m.var_x, p.gamma),
        d_var_p: -p.kappa * p.eta * n / 2.0 * m.var_p * m.var_p + pumping(m.var_p, p.gamma),
    }
}

/// Phase-II (no-click) equations of motion at time t since phase II began.
pub fn phase2_rhs(m: GaussianMoments, p: &ProtocolParams, t: f64) -> MomentRates {
    let n = p.n();
    MomentRates {
        d_var_x: p.kappa * (1.0 - p.eta / 2.0) * n / 8.0 * (-4.0 * p.gamma * (t + p.t1)).exp()
            + pumping(m.var_x, p.gamma),
        d_var_p: -p.kappa * p.eta * n / 4.0 * m.var_p * m.var_p + pumping(m.var_p, p.gamma),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub var_x: f64,
    pub var_p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionResult {
    pub moments: GaussianMoments,
    pub trajectory: Option<Vec<TrajectorySample>>,
    pub elapsed: f64,
}

/// Integrates `rhs(t, m)` from `m0` for `duration`, t measured from the
/// start of this integration.
pub fn integrate<F>(rhs: F, m0: GaussianMoments, duration: f64, ctl: &StepControl) -> Result<EvolutionResult>
where
    F: Fn(f64, GaussianMoments) -> MomentRates,
{
    let f = |t: f64, y: &[f64; 2]| {
        let r = rhs(t, GaussianMoments { var_x: y[0], var_p: y[1] });
        [r.d_var_x, r.d_var_p]
    };
    let sol = integrate::solve(f, [m0.var_x, m0.var_p], 0.0, duration, ctl)?;
    let moments = GaussianMoments::new(sol.y[0], sol.y[1])?;
    let trajectory = (ctl.samples > 0).then(|| {
        sol.samples
            .iter()
            .map(|(t, y)| TrajectorySample { t: *t, var_x: y[0], var_p: y[1] })
            .collect()
    });
    Ok(EvolutionResult {
        moments,
        trajectory,
        elapsed: duration,
    })
}

pub fn evolve_phase1(p: &ProtocolParams, m0: GaussianMoments, duration: f64, ctl: &StepControl) -> Result<EvolutionResult> {
    integrate(|t, m| phase1_rhs(m, p, t), m0, duration, ctl)
}

pub fn evolve_phase2(p: &ProtocolParams, m0: GaussianMoments, duration: f64, ctl: &StepControl) -> Result<EvolutionResult> {
    integrate(|t, m| phase2_rhs(m, p, t), m0, duration, ctl)
}

/// Moments at each stage boundary of the protocol, up to the click.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub stages: Vec<(ProtocolStage, GaussianMoments)>,
}

impl ProtocolRun {
    pub fn moments_at(&self, tag: StageTag) -> Option<GaussianMoments> {
        self.stages.iter().find(|(s, _)| s.tag == tag).map(|(_, m)| *m)
    }

    /// Gaussian moments immediately before the click.
    pub fn pre_click(&self) -> GaussianMoments {
        self.moments_at(StageTag::PhaseII).expect("run always contains phase II")
    }
}

/// Runs SCS → phase I (t1) → rotation → phase II (t2) numerically. The
/// stage tags record the state at the end of each stage.
pub fn run_protocol(p: &ProtocolParams, ctl: &StepControl) -> Result<ProtocolRun> {
    p.validate()?;
    let s0 = ProtocolStage::start();
    let m0 = initial_scs();
    let m1 = evolve_phase1(p, m0, p.t1, ctl)?.moments;
    let s1 = s0.advance(StageTag::PhaseI, p.t1)?;
    let mr = rotate_half_pi(m1);
    let sr = s1.advance(StageTag::Rotated, 0.0)?;
    let m2 = evolve_phase2(p, mr, p.t2, ctl)?.moments;
    let s2 = sr.advance(StageTag::PhaseII, p.t2)?;
    Ok(ProtocolRun {
        stages: vec![(s0, m0), (s1, m1), (sr, mr), (s2, m2)],
    })
}

/// Pre-click moments for the given parameters.
pub fn pre_click_moments(p: &ProtocolParams) -> Result<GaussianMoments> {
    Ok(run_protocol(p, &StepControl::default())?.pre_click())
}

/// Phase-I-only moments after duration t1 from the SCS.
pub fn phase1_moments(p: &ProtocolParams, t1: f64) -> Result<GaussianMoments> {
    p.validate()?;
    Ok(evolve_phase1(p, initial_scs(), t1, &StepControl::default())?.moments)
}
