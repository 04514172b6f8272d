use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cfi::{cfi_homodyne_with, DTHETA};
use super::phi::{cfi_phi, PhiGridOptions};
use super::{qfi, CanonicalFrame};
use crate::dynamics::{pre_click_moments, t2_for_threshold, Threshold};
use crate::error::{Error, Result};
use crate::model::ProtocolParams;
use crate::wigner::{GridSpec, PolyGaussian, SubtractionContext};

/// Grid used for homodyne CFI: fine in x for the near-node dip of the
/// subtracted marginal, coarse in p where only the integral matters.
const HOMODYNE_NX: usize = 4096;
const HOMODYNE_NP: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// Phase-I state after the rotation, no click.
    Gaussian,
    /// Photon-subtracted state after phase II.
    NonGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "threshold")]
pub enum PostSelection {
    /// Click right after phase II starts (t2 = 0).
    Immediate,
    /// t2 chosen so the cumulative click probability reaches the value.
    Threshold(f64),
}

/// Which Fisher quantities to compute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FisherOptions {
    pub homodyne: bool,
    pub phi: bool,
    pub qfi: bool,
    pub dtheta: f64,
    pub phi_grid: PhiGridOptions,
}

impl Default for FisherOptions {
    fn default() -> Self {
        FisherOptions {
            homodyne: true,
            phi: true,
            qfi: true,
            dtheta: DTHETA,
            phi_grid: PhiGridOptions::default(),
        }
    }
}

/// Fisher quantities at one parameter point. Values are `None` when not
/// requested or when the point is unreachable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub t1: f64,
    pub t2: Option<f64>,
    pub kind: StateKind,
    pub mode: PostSelection,
    pub unreachable: bool,
    pub cfi_homodyne: Option<f64>,
    pub cfi_phi: Option<f64>,
    pub qfi: Option<f64>,
    /// Fock cutoff used for the QFI.
    pub n_max: Option<usize>,
    /// |φ| range the φ-basis CFI settled on.
    pub phi_range: Option<(f64, f64)>,
    pub phi_tail_fraction: Option<f64>,
}

impl FisherReport {
    fn empty(t1: f64, t2: Option<f64>, kind: StateKind, mode: PostSelection) -> Self {
        FisherReport {
            t1,
            t2,
            kind,
            mode,
            unreachable: false,
            cfi_homodyne: None,
            cfi_phi: None,
            qfi: None,
            n_max: None,
            phi_range: None,
            phi_tail_fraction: None,
        }
    }

    /// Largest CFI / QFI - 1 over the computed CFIs, if QFI is present.
    pub fn qfi_excess(&self) -> Option<f64> {
        let q = self.qfi?;
        [self.cfi_homodyne, self.cfi_phi]
            .into_iter()
            .flatten()
            .map(|c| c / q - 1.0)
            .reduce(f64::max)
    }
}

/// Fisher quantities of the `kind` state for `p` (times taken from `p`).
pub fn fisher_report(p: &ProtocolParams, kind: StateKind, mode: PostSelection, opts: &FisherOptions) -> Result<FisherReport> {
    let pre = pre_click_moments(p)?;
    // Pumping shrinks the effective ħ for both states, so both use the
    // Bopp-scaled frame.
    let c = p.bopp_damping();
    let state = match kind {
        StateKind::Gaussian => PolyGaussian::gaussian(pre),
        StateKind::NonGaussian => PolyGaussian::photon_subtracted(pre, &SubtractionContext::for_protocol(p, pre))?,
    };
    let mut r = FisherReport::empty(p.t1, Some(p.t2), kind, mode);
    if opts.homodyne {
        let (x2, p2) = state.second_moments();
        let spec = GridSpec::symmetric(8.0 * x2.sqrt(), HOMODYNE_NX, 8.0 * p2.sqrt(), HOMODYNE_NP)?;
        r.cfi_homodyne = Some(cfi_homodyne_with(&state.sample(spec)?, opts.dtheta)?);
    }
    if opts.phi || opts.qfi {
        let frame = CanonicalFrame::new(pre, c)?;
        let canon = frame.map(&state);
        if opts.qfi {
            let q = qfi(&canon)?;
            r.qfi = Some(q.qfi * frame.fisher_scale());
            r.n_max = Some(q.rho.n_max());
        }
        if opts.phi {
            let f = cfi_phi(&canon, &PhiGridOptions {
                dtheta: opts.dtheta,
                ..opts.phi_grid
            })?;
            r.cfi_phi = Some(f.cfi * frame.fisher_scale());
            r.phi_range = Some((f.lo, f.hi));
            r.phi_tail_fraction = Some(f.tail_fraction);
        }
    }
    Ok(r)
}

/// A t1 sweep at fixed physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub params: ProtocolParams,
    pub t1_grid: Vec<f64>,
    pub mode: PostSelection,
    pub kinds: Vec<StateKind>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.t1_grid.is_empty() {
            return Err(Error::Domain("t1 grid is empty".into()));
        }
        if self.t1_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::Domain("t1 grid values must be finite and nonnegative".into()));
        }
        if self.t1_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("t1 grid must be strictly increasing".into()));
        }
        if let PostSelection::Threshold(q) = self.mode {
            if !(0.0..1.0).contains(&q) {
                return Err(Error::Domain(format!("threshold must lie in [0, 1), got {q}")));
            }
        }
        if self.kinds.is_empty() {
            return Err(Error::Domain("no state kinds requested".into()));
        }
        Ok(())
    }
}

/// Reports for every (t1, kind), in grid order. The Gaussian comparison is
/// always the phase-I state (t2 = 0); the non-Gaussian state uses the t2 of
/// the post-selection mode, and is flagged unreachable when the threshold
/// cannot be met.
pub fn run_scenario(spec: &ScenarioSpec, opts: &FisherOptions) -> Result<Vec<FisherReport>> {
    spec.validate()?;
    let jobs: Vec<(f64, StateKind)> = spec
        .t1_grid
        .iter()
        .flat_map(|&t1| spec.kinds.iter().map(move |&k| (t1, k)))
        .collect();
    jobs.par_iter()
        .map(|&(t1, kind)| {
            let t2 = match (kind, spec.mode) {
                (StateKind::Gaussian, _) | (_, PostSelection::Immediate) => Some(0.0),
                (StateKind::NonGaussian, PostSelection::Threshold(q)) => {
                    let p = ProtocolParams {
                        p_threshold: q,
                        ..spec.params
                    };
                    match t2_for_threshold(t1, &p)? {
                        Threshold::Reached(t2) => Some(t2),
                        Threshold::Unreachable { .. } => None,
                    }
                }
            };
            match t2 {
                Some(t2) => fisher_report(&spec.params.with_times(t1, t2), kind, spec.mode, opts),
                None => Ok(FisherReport {
                    unreachable: true,
                    ..FisherReport::empty(t1, None, kind, spec.mode)
                }),
            }
        })
        .collect()
}

/// Homodyne CFI of the Gaussian and non-Gaussian states, with QFI for the
/// CFI ≤ QFI check.
pub fn scenario_fig4(spec: &ScenarioSpec) -> Result<Vec<FisherReport>> {
    let opts = FisherOptions {
        phi: false,
        ..Default::default()
    };
    run_scenario(spec, &opts)
}

/// Homodyne CFI, φ-basis CFI and QFI of the photon-subtracted state.
pub fn scenario_fig5(spec: &ScenarioSpec) -> Result<Vec<FisherReport>> {
    let spec = ScenarioSpec {
        kinds: vec![StateKind::NonGaussian],
        ..spec.clone()
    };
    run_scenario(&spec, &FisherOptions::default())
}
