//! Wigner grid → truncated Fock density matrix.
//!
//! Production route: Weyl transform to the position representation,
//! ρ(x1, x2) = ∫ W((x1 + x2)/2, p) e^{ip(x1 - x2)} dp, evaluated on the
//! even-index x subgrid, followed by projection on Hermite functions.
//!
//! Cross-check route: ρ_mn = 2π ∫∫ W · W_{|n⟩⟨m|} with the Laguerre-kernel
//! Wigner functions of Fock dyads. It needs grids resolving the kernels in
//! both directions, so it is only practical for small cutoffs.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::matrix::CMatrix;
use crate::error::{Error, Result};
use crate::wigner::{GridSpec, WignerGrid};

/// ψ_0(x), …, ψ_n(x): normalized Hermite functions.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n_max >= 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for k in 1..n_max {
        let kf = k as f64;
        out[k + 1] = (2.0 / (kf + 1.0)).sqrt() * x * out[k] - (kf / (kf + 1.0)).sqrt() * out[k - 1];
    }
    out
}

/// Highest Fourier frequency carried by ψ_n, with a safety margin.
fn hermite_band(n_max: usize) -> f64 {
    (2.0 * n_max as f64 + 1.0).sqrt() + 4.0
}

/// Checks that the grid can represent Fock states up to `n_max`.
pub fn check_resolution(spec: &GridSpec, n_max: usize) -> Result<()> {
    let dx = spec.x.step();
    let p_half = spec.p.max.abs().max(spec.p.min.abs());
    let band = p_half + hermite_band(n_max);
    // Subgrid spacing 2Δ must put the first alias beyond the band.
    if 2.0 * dx * band >= 2.0 * PI {
        return Err(Error::Domain(format!(
            "x spacing {dx} too coarse for n_max = {n_max}; need < {}",
            PI / band
        )));
    }
    let x_range = spec.x.max - spec.x.min;
    if spec.p.step() * 1.25 * x_range >= 2.0 * PI {
        return Err(Error::Domain(format!(
            "p spacing {} too coarse for x range {x_range}",
            spec.p.step()
        )));
    }
    Ok(())
}

/// Grid suited to reconstructing a state with second moments (x2, p2) up to
/// `n_max`: ±8 standard deviations (at least the Hermite turning region)
/// with spacings from the resolution rules.
pub fn grid_for(x2: f64, p2: f64, n_max: usize) -> Result<GridSpec> {
    let lx = 8.0 * x2.sqrt();
    let lp = 8.0 * p2.sqrt();
    let band = lp + hermite_band(n_max);
    let dx = PI / (1.3 * band);
    let nx = ((2.0 * lx / dx).ceil() as usize + 1).max(64);
    let dp = 2.0 * PI / (1.6 * 2.0 * lx);
    let np = ((2.0 * lp / dp).ceil() as usize + 1).max(64);
    GridSpec::symmetric(lx, nx, lp, np)
}

/// Raw ρ_mn for m, n ≤ n_max by the position route (not renormalized).
pub fn position_route(w: &WignerGrid, n_max: usize) -> Result<CMatrix> {
    check_resolution(&w.spec, n_max)?;
    let s = w.spec;
    let dx = s.x.step();
    let m = s.x.n.div_ceil(2);
    let ps = s.p.points();
    // Phase table E[k][q] = w_q e^{i p_q 2kΔ}.
    let table: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|k| {
            let y = 2.0 * k as f64 * dx;
            ps.iter()
                .enumerate()
                .map(|(q, &p)| Complex64::from_polar(s.p.weight(q), p * y))
                .collect()
        })
        .collect();
    // ρ(x_{2j}, x_{2l}) for j ≥ l, from W at x_{j+l}.
    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            (0..=j)
                .map(|l| {
                    let row = w.row(j + l);
                    let e = &table[j - l];
                    row.iter().zip(e).map(|(v, z)| z * *v).sum()
                })
                .collect()
        })
        .collect();
    let rho_x = |j: usize, l: usize| if j >= l { rows[j][l] } else { rows[l][j].conj() };

    let xs: Vec<f64> = (0..m).map(|j| s.x.value(2 * j)).collect();
    let psi: Vec<Vec<f64>> = xs.par_iter().map(|&x| hermite_functions(n_max, x)).collect();
    let h = 2.0 * dx;
    let dim = n_max + 1;
    // T[j][n] = Σ_l ρ(x_j, x_l) ψ_n(x_l) h
    let t: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut acc = vec![Complex64::new(0.0, 0.0); dim];
            for (l, ps) in psi.iter().enumerate() {
                let r = rho_x(j, l) * h;
                if r.norm_sqr() == 0.0 {
                    continue;
                }
                for (a, &pv) in acc.iter_mut().zip(ps) {
                    *a += r * pv;
                }
            }
            acc
        })
        .collect();
    let mut out = CMatrix::zeros(dim);
    let entries: Vec<(usize, usize, Complex64)> = (0..dim)
        .into_par_iter()
        .flat_map_iter(|a| {
            let t = &t;
            let psi = &psi;
            (0..dim).map(move |b| {
                let v: Complex64 = (0..m).map(|j| t[j][b] * (psi[j][a] * h)).sum();
                (a, b, v)
            })
        })
        .collect();
    for (a, b, v) in entries {
        out[(a, b)] = v;
    }
    Ok(out)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Generalized Laguerre polynomial L_n^α(x).
fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let (mut l0, mut l1) = (1.0, 1.0 + alpha - x);
    if n == 0 {
        return l0;
    }
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + alpha - x) * l1 - (kf + alpha) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

/// Wigner function of the operator |m⟩⟨n|.
pub fn fock_dyad_wigner(m: usize, n: usize, x: f64, p: f64) -> Complex64 {
    if m > n {
        return fock_dyad_wigner(n, m, x, p).conj();
    }
    let r2 = x * x + p * p;
    let k = n - m;
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    let pref = sign / PI * (0.5 * (ln_factorial(m) - ln_factorial(n))).exp();
    let z = Complex64::new(std::f64::consts::SQRT_2 * x, std::f64::consts::SQRT_2 * p).powu(k as u32);
    z * (pref * laguerre(m, k as f64, 2.0 * r2) * (-r2).exp())
}

/// Raw ρ_mn = 2π ∫∫ W · W_{|n⟩⟨m|} by the Laguerre-kernel route.
pub fn laguerre_route(w: &WignerGrid, n_max: usize) -> CMatrix {
    let s = w.spec;
    let dim = n_max + 1;
    let entries: Vec<(usize, usize, Complex64)> = (0..dim)
        .into_par_iter()
        .flat_map_iter(|a| (a..dim).map(move |b| (a, b)))
        .map(|(a, b)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..s.x.n {
                let x = s.x.value(i);
                let row = w.row(i);
                for (j, v) in row.iter().enumerate() {
                    let p = s.p.value(j);
                    acc += fock_dyad_wigner(b, a, x, p) * (v * s.x.weight(i) * s.p.weight(j));
                }
            }
            (a, b, acc * (2.0 * PI))
        })
        .collect();
    let mut out = CMatrix::zeros(dim);
    for (a, b, v) in entries {
        out[(a, b)] = v;
        out[(b, a)] = v.conj();
    }
    out
}
