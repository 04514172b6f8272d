//! Outcome density of the φ-basis measurement for polynomial×Gaussian
//! states, and its Fisher information.
//!
//! In the momentum representation, with P̄ = (p + p')/2 and y = p' - p,
//! the P̄ integral is Gaussian and
//!
//! p(φ; θ) = (1/2π) ∫ dy e^{iφy³/12 + iθy} e^{-Vx y²/2} F(y),
//! F = A (J1 - y²J0/4) + cp (J2 - y²J1/4),  A = c0 + cx (Vx - Vx²y²),
//! J0 = z^{-1/2},  J1 = J0 Vp/z,  J2 = 3 J0 Vp²/z²,  z = 1 - 2iφVp y,
//!
//! for a state displaced by θ along X. The y axis is rotated onto two
//! rays (π/6 and 5π/6 for φ > 0, mirrored for φ < 0) on which the cubic
//! phase decays and z stays in the right half plane.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{LN_10, PI};

use super::cfi::{fisher_terms, DTHETA};
use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::wigner::{overlap, phi_wigner, PhiState, PolyGaussian, WignerGrid};

const GL_POINTS: usize = 20;
/// Exponent at which the ray integrands are cut off.
const DECAY: f64 = 36.0;

/// Contour nodes y_k and weights w_k·F(y_k)·(ray direction).
struct Kernel {
    y: Vec<Complex64>,
    fw: Vec<Complex64>,
}

impl Kernel {
    fn new(s: &PolyGaussian, phi: f64, gl: &(Vec<f64>, Vec<f64>)) -> Self {
        let (vx, vp) = (s.var_x, s.var_p);
        let r_max = (12.0 / vx.sqrt()).min((12.0 * DECAY / phi.abs()).cbrt());
        let r_bend = (1.0 / (phi.abs() * vp)).min(r_max);
        let r_min = 1e-4 * r_bend.min(1.0 / vx.sqrt());
        let mut bounds = vec![r_max];
        while *bounds.last().unwrap() > r_min {
            let b = bounds.last().unwrap() * 0.5;
            bounds.push(b);
        }
        bounds.push(0.0);
        bounds.reverse();
        // Split panels further where the Gaussian factor oscillates.
        let mut panels = Vec::new();
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let turn = vx * (hi * hi - lo * lo) * 3f64.sqrt() / 4.0;
            let m = 1 + (turn / 3.0) as usize;
            let h = (hi - lo) / m as f64;
            panels.extend((0..m).map(|k| (lo + k as f64 * h, lo + (k + 1) as f64 * h)));
        }
        let sg = phi.signum();
        let rays = [(sg * PI / 6.0, 1.0), (sg * 5.0 * PI / 6.0, -1.0)];
        let cap = 2 * panels.len() * GL_POINTS;
        let (mut y, mut fw) = (Vec::with_capacity(cap), Vec::with_capacity(cap));
        for (alpha, orient) in rays {
            let dir = Complex64::from_polar(1.0, alpha);
            for &(lo, hi) in &panels {
                let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                for (t, w) in gl.0.iter().zip(&gl.1) {
                    let yy = dir * (c + h * t);
                    y.push(yy);
                    fw.push(integrand(s, phi, yy) * dir * (orient * w * h));
                }
            }
        }
        Kernel { y, fw }
    }

    fn density(&self, theta: f64) -> f64 {
        let i = Complex64::new(0.0, 1.0);
        let s: Complex64 = self.y.iter().zip(&self.fw).map(|(y, f)| f * (i * theta * y).exp()).sum();
        s.re / (2.0 * PI)
    }
}

fn integrand(s: &PolyGaussian, phi: f64, y: Complex64) -> Complex64 {
    let (vx, vp) = (s.var_x, s.var_p);
    let i = Complex64::new(0.0, 1.0);
    let y2 = y * y;
    let z = 1.0 - 2.0 * i * phi * vp * y;
    let j0 = z.sqrt().inv();
    let j1 = j0 * vp / z;
    let j2 = j0 * 3.0 * vp * vp / (z * z);
    let a = s.c0 + s.cx * (vx - vx * vx * y2);
    let f = a * (j1 - y2 * j0 / 4.0) + s.cp * (j2 - y2 * j1 / 4.0);
    (i * phi * y2 * y / 12.0 - vx * y2 / 2.0).exp() * f
}

/// p(φ; θ) for each θ in `thetas`.
pub fn phi_density(s: &PolyGaussian, phi: f64, thetas: &[f64]) -> Result<Vec<f64>> {
    PhiState::new(phi)?;
    let k = Kernel::new(s, phi, &gauss_legendre(GL_POINTS));
    Ok(thetas.iter().map(|&t| k.density(t)).collect())
}

/// p(φ; 0) as the overlap 2π∫∫ W_φ W on the grid of `w`. Only reliable
/// while the Airy fringes of W_φ are resolved over the state's support.
pub fn phi_density_overlap(w: &WignerGrid, phi: f64) -> Result<f64> {
    overlap(&phi_wigner(PhiState::new(phi)?, w.spec), w)
}

/// Mass of p(φ) beyond |φ| > `phi_max` from the large-|φ| tail
/// p ≈ ρ_PP(0)·3^{1/3}Γ(2/3)²/(2π)·|φ|^{-4/3}, both signs.
pub fn tail_mass_beyond(s: &PolyGaussian, phi_max: f64) -> f64 {
    const GAMMA_TWO_THIRDS: f64 = 1.354_117_939_426_400_4;
    3.0 * s.marginal_p(0.0) * 3f64.cbrt() * GAMMA_TWO_THIRDS.powi(2) / PI * phi_max.powf(-1.0 / 3.0)
}

/// φ range and tail control for [`cfi_phi`]. `lo` and `hi` are rounded to
/// whole decades.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhiGridOptions {
    pub lo: f64,
    pub hi: f64,
    pub per_decade: usize,
    /// Extend while an outer decade carries more than this CFI fraction.
    pub tail_tol: f64,
    /// Fail if an outer decade still carries more than this at the limits.
    pub fail_tol: f64,
    pub min_lo: f64,
    pub max_hi: f64,
    pub dtheta: f64,
}

impl Default for PhiGridOptions {
    fn default() -> Self {
        PhiGridOptions {
            lo: 1e-3,
            hi: 10.0,
            per_decade: 100,
            tail_tol: 1e-3,
            fail_tol: 1e-2,
            min_lo: 1e-9,
            max_hi: 1e9,
            dtheta: DTHETA,
        }
    }
}

/// φ-basis CFI with the range it settled on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiFisher {
    pub cfi: f64,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Largest CFI fraction carried by an outer decade.
    pub tail_fraction: f64,
    /// ∫p dφ over the grid plus the analytic tail beyond it.
    pub mass: f64,
}

/// CFI of the φ-basis measurement for displacements along X, on log-spaced
/// |φ| of both signs, extending the range by decades until both outer
/// decades are negligible.
pub fn cfi_phi(s: &PolyGaussian, opts: &PhiGridOptions) -> Result<PhiFisher> {
    let pd = opts.per_decade.max(4) as i64;
    let mut d_lo = opts.lo.log10().round() as i64;
    let mut d_hi = opts.hi.log10().round() as i64;
    let (d_min, d_max) = (opts.min_lo.log10().round() as i64, opts.max_hi.log10().round() as i64);
    if d_hi <= d_lo {
        return Err(Error::Domain("φ range must span at least one decade".into()));
    }
    let gl = gauss_legendre(GL_POINTS);
    let dt = opts.dtheta;
    let thetas = [-dt, 0.0, dt];
    // Global index g ↦ |φ| = 10^{g/pd}; samples for (-φ, +φ) × θ.
    let mut cache: HashMap<i64, [f64; 6]> = HashMap::new();
    loop {
        let missing: Vec<i64> = (d_lo * pd..=d_hi * pd).filter(|g| !cache.contains_key(g)).collect();
        let fresh: Vec<(i64, [f64; 6])> = missing
            .par_iter()
            .map(|&g| {
                let mag = 10f64.powf(g as f64 / pd as f64);
                let mut out = [0.0; 6];
                for (h, sign) in [-1.0, 1.0].into_iter().enumerate() {
                    let k = Kernel::new(s, sign * mag, &gl);
                    for (t, th) in thetas.iter().enumerate() {
                        out[3 * h + t] = k.density(*th);
                    }
                }
                (g, out)
            })
            .collect();
        cache.extend(fresh);

        let idx: Vec<i64> = (d_lo * pd..=d_hi * pd).collect();
        let du = LN_10 / pd as f64;
        let mut w: Vec<f64> = idx
            .iter()
            .map(|&g| {
                let end = g == idx[0] || g == *idx.last().unwrap();
                10f64.powf(g as f64 / pd as f64) * du * if end { 0.5 } else { 1.0 }
            })
            .collect();
        // |φ| below the grid: density taken constant.
        w[0] += 10f64.powf(d_lo as f64);
        let col = |c: usize| -> Vec<f64> { idx.iter().map(|g| cache[g][c]).collect::<Vec<_>>() };
        let both = |a: usize| [col(a), col(3 + a)].concat();
        let ww = [w.clone(), w.clone()].concat();
        let terms = fisher_terms(&both(0), &both(1), &both(2), &ww, dt)?;
        let total: f64 = terms.iter().sum();
        let n = idx.len();
        let decade = |range: std::ops::Range<usize>| -> f64 {
            range.clone().map(|k| terms[k] + terms[n + k]).sum::<f64>()
        };
        let pdu = pd as usize;
        let frac = |v: f64| if total > 0.0 { v / total } else { 0.0 };
        let bottom = frac(decade(0..pdu + 1));
        let top = frac(decade(n - pdu - 1..n));
        let mut extended = false;
        if top > opts.tail_tol && d_hi < d_max {
            d_hi += 1;
            extended = true;
        }
        if bottom > opts.tail_tol && d_lo > d_min {
            d_lo -= 1;
            extended = true;
        }
        if extended {
            continue;
        }
        let tail_fraction = top.max(bottom);
        if tail_fraction > opts.fail_tol {
            return Err(Error::PhiTail {
                contribution: tail_fraction,
            });
        }
        if tail_fraction > opts.tail_tol {
            log::warn!("φ range limit reached with outer-decade CFI fraction {tail_fraction:.2e}");
        }
        let p0 = both(1);
        let hi = 10f64.powf(d_hi as f64);
        let mass = p0.iter().zip(&ww).map(|(p, w)| p * w).sum::<f64>() + tail_mass_beyond(s, hi);
        return Ok(PhiFisher {
            cfi: total,
            lo: 10f64.powf(d_lo as f64),
            hi,
            points: 2 * n,
            tail_fraction,
            mass,
        });
    }
}
