//! Cyclic Jacobi eigensolver for Hermitian matrices.
//!
//! The matrix is first split into connected blocks (entries below a tiny
//! threshold count as zero); purely real blocks use real rotations.

use num_complex::Complex64;

use super::matrix::CMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-12;

/// Eigenvalues in descending order with orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Eigensystem {
    /// Σ λ_k |v_k⟩⟨v_k|.
    pub fn reconstruct(&self) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        CMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| v[(i, k)] * self.values[k] * v[(j, k)].conj()).sum()
        })
    }

    /// Largest |(V†V - 1)_ij|.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.values.len();
        let g = self.vectors.adjoint().mul(&self.vectors);
        g.sub(&CMatrix::identity(n)).max_abs()
    }
}

fn off_norm(a: &[Vec<Complex64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if i != j {
                s += z.norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn off_norm_real(a: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if i != j {
                s += z * z;
            }
        }
    }
    s.sqrt()
}

/// Rotation parameters t = tan θ zeroing the (p, q) entry of
/// [[a, b], [b, d]] with b > 0.
fn rotation(a: f64, d: f64, b: f64) -> (f64, f64) {
    let tau = (d - a) / (2.0 * b);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c)
}

fn jacobi_complex(mut a: Vec<Vec<Complex64>>) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
    let n = a.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { zero }).collect())
        .collect();
    let scale = a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    for _ in 0..MAX_SWEEPS {
        if off_norm(&a) < OFF_TOL * scale {
            let vals = (0..n).map(|i| a[i][i].re).collect();
            return Ok((vals, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = a[p][q];
                let bn = b.norm();
                if bn == 0.0 {
                    continue;
                }
                let ph = b / bn;
                let (c, s) = rotation(a[p][p].re, a[q][q].re, bn);
                // V = [[c, s], [-s·conj(ph), c·conj(ph)]] on columns p, q.
                let vp = [Complex64::new(c, 0.0), -s * ph.conj()];
                let vq = [Complex64::new(s, 0.0), c * ph.conj()];
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * vp[0] + y * vp[1];
                    row[q] = x * vq[0] + y * vq[1];
                }
                for k in 0..n {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = vp[0].conj() * x + vp[1].conj() * y;
                    a[q][k] = vq[0].conj() * x + vq[1].conj() * y;
                }
                a[p][q] = zero;
                a[q][p] = zero;
                a[p][p].im = 0.0;
                a[q][q].im = 0.0;
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * vp[0] + y * vp[1];
                    row[q] = x * vq[0] + y * vq[1];
                }
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off: off_norm(&a),
    })
}

fn jacobi_real(mut a: Vec<Vec<f64>>) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let scale = a.iter().flatten().map(|z| z * z).sum::<f64>().sqrt().max(1.0);
    for _ in 0..MAX_SWEEPS {
        if off_norm_real(&a) < OFF_TOL * scale {
            let vals = (0..n).map(|i| a[i][i]).collect();
            return Ok((vals, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let b = a[p][q];
                if b == 0.0 {
                    continue;
                }
                let (c, s) = rotation(a[p][p], a[q][q], b.abs());
                // Fold the sign of b into the second basis vector.
                let sg = b.signum();
                let (vp, vq) = ([c, -s * sg], [s, c * sg]);
                for row in a.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * vp[0] + y * vp[1];
                    row[q] = x * vq[0] + y * vq[1];
                }
                for k in 0..n {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = vp[0] * x + vp[1] * y;
                    a[q][k] = vq[0] * x + vq[1] * y;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let (x, y) = (row[p], row[q]);
                    row[p] = x * vp[0] + y * vp[1];
                    row[q] = x * vq[0] + y * vq[1];
                }
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off: off_norm_real(&a),
    })
}

/// Index sets of the connected blocks of `h`.
fn blocks(h: &CMatrix, cutoff: f64) -> Vec<Vec<usize>> {
    let n = h.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if h[(i, j)].norm() > cutoff {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Full eigendecomposition of a Hermitian matrix.
pub fn eigh_matrix(h: &CMatrix) -> Result<Eigensystem> {
    let n = h.dim();
    let herm = h.hermiticity_error();
    if herm > 1e-10 * h.max_abs().max(1.0) {
        return Err(Error::Domain(format!("matrix is not Hermitian (error {herm})")));
    }
    let cutoff = 1e-16 * h.max_abs();
    let mut pairs: Vec<(f64, Vec<Complex64>)> = Vec::with_capacity(n);
    for idx in blocks(h, cutoff) {
        let m = idx.len();
        let real = idx
            .iter()
            .all(|&i| idx.iter().all(|&j| h[(i, j)].im.abs() <= cutoff));
        if real {
            let a = idx.iter().map(|&i| idx.iter().map(|&j| h[(i, j)].re).collect()).collect();
            let (vals, vecs) = jacobi_real(a)?;
            for k in 0..m {
                let mut col = vec![Complex64::new(0.0, 0.0); n];
                for (r, &i) in idx.iter().enumerate() {
                    col[i] = Complex64::new(vecs[r][k], 0.0);
                }
                pairs.push((vals[k], col));
            }
        } else {
            let a = idx.iter().map(|&i| idx.iter().map(|&j| h[(i, j)]).collect()).collect();
            let (vals, vecs) = jacobi_complex(a)?;
            for k in 0..m {
                let mut col = vec![Complex64::new(0.0, 0.0); n];
                for (r, &i) in idx.iter().enumerate() {
                    col[i] = vecs[r][k];
                }
                pairs.push((vals[k], col));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let values = pairs.iter().map(|p| p.0).collect();
    let vectors = CMatrix::from_fn(n, |i, k| pairs[k].1[i]);
    Ok(Eigensystem { values, vectors })
}
