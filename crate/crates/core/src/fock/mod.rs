//! Truncated Fock-space representation: reconstruction from Wigner grids,
//! quadrature operators, eigendecomposition and the quantum Fisher
//! information for displacements along X.

mod eigh;
mod matrix;
mod reconstruct;

pub use eigh::{eigh_matrix, Eigensystem};
pub use matrix::CMatrix;
pub use reconstruct::{check_resolution, fock_dyad_wigner, grid_for, hermite_functions, laguerre_route, position_route};

use num_complex::Complex64;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::io::DensityDump;
use crate::wigner::WignerGrid;

pub const DEFAULT_N_MAX: usize = 64;
/// Allowed diagonal mass in the top five levels of the cutoff.
pub const TAIL_TOL: f64 = 1e-5;
pub const TRACE_TOL: f64 = 1e-4;
/// Eigenvalues down to this value are clamped to zero; below it is an error.
pub const CLAMP: f64 = -1e-8;

/// Hermitian, unit-trace, positive density matrix with its eigensystem.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    elements: CMatrix,
    trace_deficit: f64,
    eig: Eigensystem,
}

impl FockDensityMatrix {
    /// Symmetrizes, renormalizes and eigendecomposes `raw`, recording
    /// 1 - Tr(raw) as the trace deficit.
    pub fn new(raw: CMatrix) -> Result<Self> {
        let mut elements = raw;
        let herm = elements.hermiticity_error();
        if herm > 1e-8 {
            return Err(Error::Domain(format!("density matrix is not Hermitian (error {herm})")));
        }
        elements.symmetrize();
        let tr = elements.trace().re;
        let trace_deficit = 1.0 - tr;
        if trace_deficit.abs() > TRACE_TOL {
            return Err(Error::TailMass {
                n_max: elements.dim() - 1,
                tail: trace_deficit,
            });
        }
        elements.scale(1.0 / tr);
        let mut eig = eigh_matrix(&elements)?;
        let mut clamped = 0;
        for v in &mut eig.values {
            if *v < 0.0 {
                if *v < CLAMP {
                    return Err(Error::Negativity(*v));
                }
                *v = 0.0;
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::debug!("clamped {clamped} eigenvalues in [{CLAMP}, 0) to zero");
        }
        Ok(FockDensityMatrix {
            elements,
            trace_deficit,
            eig,
        })
    }

    pub fn dim(&self) -> usize {
        self.elements.dim()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elements[(m, n)]
    }

    pub fn trace_deficit(&self) -> f64 {
        self.trace_deficit
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eig
    }

    pub fn purity(&self) -> f64 {
        self.eig.values.iter().map(|l| l * l).sum()
    }

    /// Tr(ρ A).
    pub fn expect(&self, a: &CMatrix) -> f64 {
        let n = self.dim();
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                s += self.elements[(i, j)] * a[(j, i)];
            }
        }
        s.re
    }

    /// Σ_{n > n_max - 5} ρ_nn.
    pub fn tail_mass(&self) -> f64 {
        tail_of(&self.elements)
    }

    pub fn to_dump(&self) -> DensityDump {
        DensityDump {
            dim: self.dim(),
            re: self.elements.data().iter().map(|z| z.re).collect(),
            im: self.elements.data().iter().map(|z| z.im).collect(),
            trace_deficit: self.trace_deficit,
        }
    }
}

fn tail_of(m: &CMatrix) -> f64 {
    let n = m.dim();
    (n.saturating_sub(5)..n).map(|i| m[(i, i)].re).sum()
}

/// Reconstructs ρ up to `n_max` by the position route.
pub fn reconstruct(w: &WignerGrid, n_max: usize) -> Result<FockDensityMatrix> {
    if n_max < 5 {
        return Err(Error::Domain("n_max must be at least 5".into()));
    }
    let raw = position_route(w, n_max)?;
    let tail = tail_of(&raw);
    if tail.abs() >= TAIL_TOL {
        return Err(Error::TailMass { n_max, tail });
    }
    FockDensityMatrix::new(raw)
}

/// As [`reconstruct`], raising the cutoff by half its value on tail-mass
/// violations until `limit`.
pub fn reconstruct_auto(w: &WignerGrid, n_start: usize, limit: usize) -> Result<FockDensityMatrix> {
    let mut n_max = n_start;
    loop {
        match reconstruct(w, n_max) {
            Err(Error::TailMass { tail, .. }) if n_max < limit => {
                log::info!("tail mass {tail} at n_max = {n_max}; raising cutoff");
                n_max = (n_max + n_max / 2).min(limit);
            }
            other => return other,
        }
    }
}

/// P = i(a† - a)/√2 in the Fock basis.
pub fn quadrature_p(n_max: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n_max + 1);
    for n in 0..n_max {
        let v = ((n + 1) as f64).sqrt() / SQRT_2;
        m[(n + 1, n)] = Complex64::new(0.0, v);
        m[(n, n + 1)] = Complex64::new(0.0, -v);
    }
    m
}

/// X = (a + a†)/√2 in the Fock basis.
pub fn quadrature_x(n_max: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n_max + 1);
    for n in 0..n_max {
        let v = ((n + 1) as f64).sqrt() / SQRT_2;
        m[(n + 1, n)] = Complex64::new(v, 0.0);
        m[(n, n + 1)] = Complex64::new(v, 0.0);
    }
    m
}

pub fn eigh(rho: &FockDensityMatrix) -> &Eigensystem {
    rho.eigensystem()
}

/// Pairs with λ + λ' below this are skipped in the QFI sum.
pub const QFI_SKIP: f64 = 1e-12;

/// F_Q = 2 Σ (λ - λ')²/(λ + λ') |⟨λ|P|λ'⟩|² for displacements along X.
pub fn qfi_displacement(rho: &FockDensityMatrix) -> f64 {
    let eig = rho.eigensystem();
    let n = rho.dim();
    let p = quadrature_p(n - 1);
    let pv = p.mul(&eig.vectors);
    let vh = eig.vectors.adjoint();
    let lam = &eig.values;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = lam[i] + lam[j];
            if s < QFI_SKIP || i == j {
                continue;
            }
            let mut el = Complex64::new(0.0, 0.0);
            for k in 0..n {
                el += vh[(i, k)] * pv[(k, j)];
            }
            let d = lam[i] - lam[j];
            total += d * d / s * el.norm_sqr();
        }
    }
    2.0 * total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fock_state(n_max: usize, k: usize) -> CMatrix {
        let mut m = CMatrix::zeros(n_max + 1);
        m[(k, k)] = Complex64::new(1.0, 0.0);
        m
    }

    #[test]
    fn quadrature_elements() {
        let p = quadrature_p(10);
        let x = quadrature_x(10);
        let p2 = p.mul(&p);
        assert!((p2[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!((p2[(1, 1)].re - 1.5).abs() < 1e-15);
        let comm = x.mul(&p).sub(&p.mul(&x));
        for i in 0..10 {
            for j in 0..10 {
                let target = if i == j { Complex64::new(0.0, 1.0) } else { Complex64::new(0.0, 0.0) };
                assert!((comm[(i, j)] - target).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn fock_state_qfi_is_four_var_p() {
        for k in 0..4 {
            let rho = FockDensityMatrix::new(fock_state(20, k)).unwrap();
            assert!((qfi_displacement(&rho) - 4.0 * (k as f64 + 0.5)).abs() < 1e-12);
        }
    }

    #[test]
    fn thermal_qfi() {
        // Thermal state with variance v: QFI = 1/v.
        let nbar: f64 = 0.8;
        let v = nbar + 0.5;
        let n_max = 120;
        let mut m = CMatrix::zeros(n_max + 1);
        for k in 0..=n_max {
            m[(k, k)] = Complex64::new(nbar.powi(k as i32) / (1.0 + nbar).powi(k as i32 + 1), 0.0);
        }
        let rho = FockDensityMatrix::new(m).unwrap();
        assert!((qfi_displacement(&rho) - 1.0 / v).abs() < 1e-9);
    }

    #[test]
    fn negativity_fails_loudly() {
        let mut m = fock_state(6, 0);
        m[(0, 0)] = Complex64::new(1.1, 0.0);
        m[(1, 1)] = Complex64::new(-0.1, 0.0);
        assert!(matches!(FockDensityMatrix::new(m), Err(Error::Negativity(_))));
    }

    #[test]
    fn tiny_negativity_is_clamped() {
        let mut m = fock_state(6, 0);
        m[(1, 1)] = Complex64::new(-1e-10, 0.0);
        let rho = FockDensityMatrix::new(m).unwrap();
        assert!(rho.eigensystem().values.iter().all(|&v| v >= 0.0));
    }
}
