use crate::error::{Error, Result};
use crate::model::{GaussianMoments, ProtocolParams};

/// Solution of V' = -a V² - 2γV + γ from V(0) = v0, a ≥ 0, γ ≥ 0.
///
/// With s = sqrt(γ(γ + a)) and T = tanh(s t):
/// V = [v0 (s - γT) + γT] / [s + (a v0 + γ) T].
pub fn riccati_squeeze(v0: f64, a: f64, gamma: f64, t: f64) -> f64 {
    let s = (gamma * (gamma + a)).sqrt();
    if s == 0.0 {
        return v0 / (1.0 + a * v0 * t);
    }
    let th = (s * t).tanh();
    (v0 * (s - gamma * th) + gamma * th) / (s + (a * v0 + gamma) * th)
}

/// Solution of V' = D e^{-4γ(t + t0)} - 2γV + γ from V(0) = v0.
pub fn linear_relaxation(v0: f64, d: f64, gamma: f64, t0: f64, t: f64) -> f64 {
    if gamma == 0.0 {
        return v0 + d * t;
    }
    let e2 = (-2.0 * gamma * t).exp();
    // (e^{-2γt} - e^{-4γt}) / (2γ), written without cancellation.
    let window = -e2 * (-2.0 * gamma * t).exp_m1() / (2.0 * gamma);
    0.5 + (v0 - 0.5) * e2 + d * (-4.0 * gamma * t0).exp() * window
}

/// Rate constant of the phase-I squeezing solution, ζ = sqrt(2γ² + γκηN).
///
/// This is √2 times the Riccati rate sqrt(γ(γ + κηN/2)) of the ⟨P²⟩
/// equation in phase I.
pub fn zeta(p: &ProtocolParams) -> f64 {
    (2.0 * p.gamma * p.gamma + p.gamma * p.kappa * p.eta * p.n()).sqrt()
}

/// Variances after phase I, the rotation and phase II, from the closed-form
/// solutions. Requires γ > 0.
pub fn closed_form_final(p: &ProtocolParams) -> Result<GaussianMoments> {
    p.validate()?;
    if p.gamma <= 0.0 {
        return Err(Error::Domain(
            "closed_form_final needs gamma > 0; integrate the equations instead".into(),
        ));
    }
    let (g, k, n, eta, t1, t2) = (p.gamma, p.kappa, p.n(), p.eta, p.t1, p.t2);

    // ⟨X²⟩: phase-II diffusion plus the damped phase-I ⟨P²⟩.
    let z = zeta(p);
    let th1 = (z * t1 / std::f64::consts::SQRT_2).tanh();
    let squeezed = (2.0 * g * g - z * z) * th1
        / (2.0 * (2.0 * g * g + z * z) * th1 + 4.0 * std::f64::consts::SQRT_2 * g * z);
    let e2 = (-2.0 * g * t2).exp();
    let diffusion = (2.0 - eta) * k * n * (-4.0 * g * t1).exp() * (-e2 * (-2.0 * g * t2).exp_m1()) / (32.0 * g);
    let var_x = 0.5 + diffusion + e2 * squeezed;

    // ⟨P²⟩: no-click squeezing of the phase-I ⟨X²⟩.
    let vx1 = 0.5 + k * n * (-(-2.0 * g * t1).exp() * (-2.0 * g * t1).exp_m1()) / (16.0 * g);
    let q = g.sqrt() * (4.0 * g + eta * k * n).sqrt();
    let th2 = (0.5 * q * t2).tanh();
    let var_p = (2.0 * g * (1.0 - vx1) * th2 + q * vx1)
        / (eta * k * n * (vx1 - 0.5) * th2 / 2.0 + (8.0 * g + eta * k * n) * th2 / 4.0 + q);

    GaussianMoments::new(var_x, var_p)
}
