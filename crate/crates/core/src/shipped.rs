//! Parameter sets and grids for the figure runs. Times are in units of 1/γ
//! with γ = 1.

use crate::metrology::{PostSelection, ScenarioSpec, StateKind};
use crate::model::ProtocolParams;

/// γt1 values for the Fisher-information sweeps.
pub const FISHER_T1_GRID: [f64; 18] = [
    0.0, 0.001, 0.002, 0.005, 0.01, 0.02, 0.03, 0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0,
];

/// Click-probability thresholds of the total-time figure.
pub const TOTAL_TIME_THRESHOLDS: [f64; 4] = [0.0, 0.05, 0.1, 0.2];

/// κ = γ, N = 500, η = 1.
pub fn reference_params() -> ProtocolParams {
    ProtocolParams::default()
}

/// γt1 grid for the total-time curves: step 2.5e-4 up to 0.01 (the
/// 20% minimum sits near 4e-4), then coarser out to 0.5.
pub fn total_time_t1_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..40).map(|i| i as f64 * 2.5e-4).collect();
    g.extend((0..18).map(|i| 0.01 + i as f64 * 0.005));
    g.extend((0..8).map(|i| 0.1 + i as f64 * 0.05));
    g.push(0.5);
    g
}

/// Click right away, κ = γ: Gaussian vs. non-Gaussian.
pub fn fisher_immediate() -> ScenarioSpec {
    ScenarioSpec {
        params: reference_params(),
        t1_grid: FISHER_T1_GRID.to_vec(),
        mode: PostSelection::Immediate,
        kinds: vec![StateKind::Gaussian, StateKind::NonGaussian],
    }
}

/// 20% click threshold with weak coupling κ = 0.1γ.
pub fn fisher_threshold() -> ScenarioSpec {
    ScenarioSpec {
        params: ProtocolParams {
            kappa: 0.1,
            ..reference_params()
        },
        t1_grid: FISHER_T1_GRID.to_vec(),
        mode: PostSelection::Threshold(0.2),
        kinds: vec![StateKind::Gaussian, StateKind::NonGaussian],
    }
}

/// Measurement comparison on the non-Gaussian state, κ = γ, t2 = 0.
pub fn measurement_comparison() -> ScenarioSpec {
    ScenarioSpec {
        kinds: vec![StateKind::NonGaussian],
        ..fisher_immediate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_specs_validate() {
        for s in [fisher_immediate(), fisher_threshold(), measurement_comparison()] {
            s.validate().unwrap();
        }
        let g = total_time_t1_grid();
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g[0], 0.0);
        assert!((g.last().unwrap() - 0.5).abs() < 1e-12);
    }
}
