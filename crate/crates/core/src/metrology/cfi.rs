use crate::error::{Error, Result};
use crate::wigner::{displace_x, marginal_x, WignerGrid};

pub const DTHETA: f64 = 1e-4;
/// Densities below this are left out of the score integral.
pub const P_FLOOR: f64 = 1e-12;
/// Largest allowed change of total mass between θ samples.
pub const DRIFT_TOL: f64 = 1e-5;

/// Per-point terms w (∂p)²/p of the Fisher integral from samples at
/// θ = -dθ, 0, +dθ on a fixed measure with weights `w`.
pub fn fisher_terms(minus: &[f64], center: &[f64], plus: &[f64], w: &[f64], dtheta: f64) -> Result<Vec<f64>> {
    let n = w.len();
    if minus.len() != n || center.len() != n || plus.len() != n {
        return Err(Error::GridMismatch("family samples and weights differ in length".into()));
    }
    let mass = |p: &[f64]| p.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
    let m0 = mass(center);
    let drift = (mass(minus) - m0).abs().max((mass(plus) - m0).abs());
    if drift > DRIFT_TOL {
        return Err(Error::NormalizationDrift { drift });
    }
    Ok((0..n)
        .map(|k| {
            let p = center[k];
            if p < P_FLOOR {
                return 0.0;
            }
            let d = (plus[k] - minus[k]) / (2.0 * dtheta);
            w[k] * d * d / p
        })
        .collect())
}

/// CFI = ∫ (∂_θ p)²/p dμ at θ = 0 by central differences. `family(θ)`
/// returns the density on the fixed points whose quadrature weights are
/// `weights`.
pub fn cfi_from_family<F>(family: F, weights: &[f64], dtheta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    if !(dtheta.is_finite() && dtheta > 0.0) {
        return Err(Error::Domain(format!("dθ must be positive, got {dtheta}")));
    }
    let minus = family(-dtheta)?;
    let center = family(0.0)?;
    let plus = family(dtheta)?;
    Ok(fisher_terms(&minus, &center, &plus, weights, dtheta)?.iter().sum())
}

/// Homodyne CFI of the state on `w` for displacements along X.
pub fn cfi_homodyne(w: &WignerGrid) -> Result<f64> {
    cfi_homodyne_with(w, DTHETA)
}

pub fn cfi_homodyne_with(w: &WignerGrid, dtheta: f64) -> Result<f64> {
    let axis = w.spec.x;
    let weights: Vec<f64> = (0..axis.n).map(|i| axis.weight(i)).collect();
    cfi_from_family(|t| Ok(marginal_x(&displace_x(w, t)?).density), &weights, dtheta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wigner::Axis;

    fn normal_family(var: f64, axis: Axis) -> impl Fn(f64) -> Result<Vec<f64>> {
        move |t| {
            Ok(axis
                .points()
                .iter()
                .map(|x| (-(x - t).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
                .collect())
        }
    }

    #[test]
    fn gaussian_shift_family() {
        let axis = Axis::symmetric(12.0, 4000).unwrap();
        let w: Vec<f64> = (0..axis.n).map(|i| axis.weight(i)).collect();
        for var in [0.1, 0.5, 2.0] {
            let f = cfi_from_family(normal_family(var, axis), &w, DTHETA).unwrap();
            assert!((f - 1.0 / var).abs() < 1e-6 / var, "{var}: {f}");
        }
    }

    #[test]
    fn flat_family_has_no_information() {
        let w = vec![0.25; 4];
        let f = cfi_from_family(|_| Ok(vec![1.0; 4]), &w, DTHETA).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn drifting_family_is_rejected() {
        let w = vec![0.5; 2];
        let r = cfi_from_family(|t| Ok(vec![1.0 + t, 1.0]), &w, DTHETA);
        assert!(matches!(r, Err(Error::NormalizationDrift { .. })));
    }

    #[test]
    fn floor_drops_empty_points() {
        let w = vec![1.0; 3];
        let terms = fisher_terms(&[0.0, 0.5, 0.5], &[0.0, 0.5, 0.5], &[1e-13, 0.5, 0.5], &w, 1.0).unwrap();
        assert_eq!(terms, vec![0.0, 0.0, 0.0]);
    }
}
