use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform axis with `n` points from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && max > min) || n < 2 {
            return Err(Error::Domain(format!("bad axis [{min}, {max}] with {n} points")));
        }
        Ok(Axis { min, max, n })
    }

    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Axis::new(-half_width, half_width, n)
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n - 1) as f64
    }

    pub fn value(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }

    /// Trapezoid weight of point i.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.n {
            0.5 * self.step()
        } else {
            self.step()
        }
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: Axis,
    pub p: Axis,
}

impl GridSpec {
    pub const DEFAULT_POINTS: usize = 512;

    pub fn symmetric(half_x: f64, n_x: usize, half_p: f64, n_p: usize) -> Result<Self> {
        Ok(GridSpec {
            x: Axis::symmetric(half_x, n_x)?,
            p: Axis::symmetric(half_p, n_p)?,
        })
    }

    /// 512 × 512 points over ±8 standard deviations on each axis.
    pub fn default_for(var_x: f64, var_p: f64) -> Result<Self> {
        GridSpec::symmetric(
            8.0 * var_x.sqrt(),
            Self::DEFAULT_POINTS,
            8.0 * var_p.sqrt(),
            Self::DEFAULT_POINTS,
        )
    }

    pub fn covers(&self, half_x: f64, half_p: f64) -> bool {
        self.x.min <= -half_x && self.x.max >= half_x && self.p.min <= -half_p && self.p.max >= half_p
    }
}

/// A real function sampled on a phase-space grid, row-major with x as the
/// slow index: `values[i * n_p + j] = f(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl PhaseGrid {
    pub fn from_fn<F>(spec: GridSpec, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let ps = spec.p.points();
        let values = (0..spec.x.n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let x = spec.x.value(i);
                ps.iter().map(move |&p| (x, p)).collect::<Vec<_>>()
            })
            .map(|(x, p)| f(x, p))
            .collect();
        PhaseGrid { spec, values }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.x.n * spec.p.n {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}×{} grid",
                values.len(),
                spec.x.n,
                spec.p.n
            )));
        }
        Ok(PhaseGrid { spec, values })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.p.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.spec.p.n;
        &self.values[i * n..(i + 1) * n]
    }

    /// Trapezoid integral of g(x, p)·f(x, p).
    pub fn integrate_with<G: Fn(f64, f64) -> f64>(&self, g: G) -> f64 {
        let (xa, pa) = (self.spec.x, self.spec.p);
        let mut total = 0.0;
        for i in 0..xa.n {
            let x = xa.value(i);
            let row = self.row(i);
            let s: f64 = row.iter().enumerate().map(|(j, v)| pa.weight(j) * g(x, pa.value(j)) * v).sum();
            total += xa.weight(i) * s;
        }
        total
    }

    pub fn integral(&self) -> f64 {
        self.integrate_with(|_, _| 1.0)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// A normalized Wigner function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    grid: PhaseGrid,
}

impl std::ops::Deref for WignerGrid {
    type Target = PhaseGrid;
    fn deref(&self) -> &PhaseGrid {
        &self.grid
    }
}

pub const NORM_TOL: f64 = 1e-6;

impl WignerGrid {
    /// Validates finiteness and trapezoid normalization.
    pub fn new(grid: PhaseGrid) -> Result<Self> {
        if grid.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("Wigner grid contains non-finite values".into()));
        }
        let norm = grid.integral();
        if (norm - 1.0).abs() > NORM_TOL {
            let s = grid.spec;
            return Err(Error::GridTooSmall {
                norm,
                x_min: 2.0 * s.x.min,
                x_max: 2.0 * s.x.max,
                p_min: 2.0 * s.p.min,
                p_max: 2.0 * s.p.max,
            });
        }
        Ok(WignerGrid { grid })
    }

    /// Wraps without the normalization check. Used where the caller
    /// renormalizes or knows the mass is exact.
    pub(crate) fn new_unchecked(grid: PhaseGrid) -> Self {
        WignerGrid { grid }
    }

    pub fn into_inner(self) -> PhaseGrid {
        self.grid
    }

    pub fn mean_x(&self) -> f64 {
        self.integrate_with(|x, _| x)
    }

    pub fn mean_p(&self) -> f64 {
        self.integrate_with(|_, p| p)
    }

    /// (⟨X²⟩, ⟨P²⟩).
    pub fn second_moments(&self) -> (f64, f64) {
        (self.integrate_with(|x, _| x * x), self.integrate_with(|_, p| p * p))
    }
}

/// Tr[A B] = 2π ∫∫ W_A W_B for two functions on the same grid.
pub fn overlap(a: &PhaseGrid, b: &PhaseGrid) -> Result<f64> {
    if a.spec != b.spec {
        return Err(Error::GridMismatch("overlap needs identical grids".into()));
    }
    let (xa, pa) = (a.spec.x, a.spec.p);
    let mut total = 0.0;
    for i in 0..xa.n {
        let s: f64 = a.row(i).iter().zip(b.row(i)).enumerate().map(|(j, (u, v))| pa.weight(j) * u * v).sum();
        total += xa.weight(i) * s;
    }
    Ok(2.0 * std::f64::consts::PI * total)
}

/// Mass allowed to fall off the grid edge under displacement.
pub const CLIP_TOL: f64 = 1e-9;

/// W(X, P) → W(X - θ, P) by linear interpolation along x.
pub fn displace_x(w: &WignerGrid, theta: f64) -> Result<WignerGrid> {
    if theta == 0.0 {
        return Ok(w.clone());
    }
    let s = w.spec;
    let (nx, np) = (s.x.n, s.p.n);
    let shift = theta / s.x.step();
    let k = shift.floor();
    let frac = shift - k;
    let k = k as i64;
    let sample = |i: i64, j: usize| -> f64 {
        if i < 0 || i >= nx as i64 {
            0.0
        } else {
            w.at(i as usize, j)
        }
    };
    let mut values = vec![0.0; nx * np];
    values.par_chunks_mut(np).enumerate().for_each(|(i, row)| {
        let src = i as i64 - k;
        for (j, v) in row.iter_mut().enumerate() {
            *v = (1.0 - frac) * sample(src, j) + frac * sample(src - 1, j);
        }
    });
    let out = PhaseGrid { spec: s, values };
    let lost = (w.integral() - out.integral()).abs();
    if lost > CLIP_TOL {
        return Err(Error::SupportClipped { theta, lost });
    }
    Ok(WignerGrid::new_unchecked(out))
}

/// Position density on the x axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub axis: Axis,
    pub density: Vec<f64>,
}

impl Marginal {
    pub fn total(&self) -> f64 {
        self.axis.integrate(&self.density)
    }
}

/// p(x) = ∫ W(x, p) dp with negative round-off clamped to zero.
pub fn marginal_x(w: &WignerGrid) -> Marginal {
    let s = w.spec;
    let density = (0..s.x.n).map(|i| s.p.integrate(w.row(i)).max(0.0)).collect();
    Marginal { axis: s.x, density }
}
