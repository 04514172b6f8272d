//! Independent oracles shared by the integration and acceptance targets.

use hybridspin::quad::gauss_legendre_on;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Ai(z) from the steepest-descent rays of its contour integral.
pub fn airy_oracle(z: f64) -> f64 {
    let w = Complex64::from_polar(1.0, PI / 3.0);
    let mut sum = Complex64::new(0.0, 0.0);
    let panels = 120;
    for k in 0..panels {
        let (a, b) = (12.0 * k as f64 / panels as f64, 12.0 * (k + 1) as f64 / panels as f64);
        let (xs, ws) = gauss_legendre_on(16, a, b);
        for (r, wt) in xs.iter().zip(&ws) {
            sum += wt * (-(r * r * r) / 3.0 - z * r * w).exp();
        }
    }
    (w * sum).im / PI
}

/// C∞ window: 1 on |p| ≤ 15, 0 beyond 22.
fn window(p: f64) -> f64 {
    let f = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
    let u = (22.0 - p.abs()) / 7.0;
    f(u) / (f(u) + f(1.0 - u))
}

/// Direct Wigner transform of ψ(p) = p·e^{-iφp³/3}/sqrt(2π).
pub fn phi_wigner_oracle(phi: f64, x: f64, p: f64) -> f64 {
    let psi = |k: f64| Complex64::from_polar(k * window(k) / (2.0 * PI).sqrt(), -phi * k * k * k / 3.0);
    let h = 0.005;
    let n = (25.0 / h) as i64;
    let mut s = Complex64::new(0.0, 0.0);
    for i in -n..=n {
        let q = i as f64 * h;
        s += psi(p + q) * psi(p - q).conj() * Complex64::from_polar(1.0, 2.0 * x * q);
    }
    (s * h).re / PI
}

