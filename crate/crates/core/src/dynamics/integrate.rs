//! Fixed-step RK4 with successive step halving.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Steps used for the first pass; doubled until converged.
    pub initial_steps: usize,
    /// Relative difference between successive refinements to accept.
    pub rel_tol: f64,
    pub max_halvings: u32,
    /// Number of trajectory samples to keep (0 = none).
    pub samples: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            initial_steps: 32,
            rel_tol: 1e-9,
            max_halvings: 18,
            samples: 0,
        }
    }
}

impl StepControl {
    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }
}

/// A converged solution of y' = f(t, y) on [t0, t0 + duration].
#[derive(Debug, Clone)]
pub struct Solution<const N: usize> {
    pub y: [f64; N],
    /// (t, y) samples at equal spacing, ending at the final time.
    pub samples: Vec<(f64, [f64; N])>,
    pub steps: usize,
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += h * k[i];
    }
    out
}

fn run<const N: usize, F>(
    f: &F,
    y0: [f64; N],
    t0: f64,
    duration: f64,
    steps: usize,
    every: usize,
) -> Result<([f64; N], Vec<(f64, [f64; N])>)>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = duration / steps as f64;
    let mut y = y0;
    let mut samples = Vec::new();
    if every > 0 {
        samples.push((t0, y));
    }
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = f(t, &y);
        let k2 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, &k1));
        let k3 = f(t + 0.5 * h, &axpy(&y, 0.5 * h, &k2));
        let k4 = f(t + h, &axpy(&y, h, &k3));
        let mut next = y;
        for j in 0..N {
            next[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                time: t + h,
                last_good: t,
            });
        }
        y = next;
        if every > 0 && (i + 1) % every == 0 {
            samples.push((t0 + (i + 1) as f64 * h, y));
        }
    }
    Ok((y, samples))
}

fn rel_diff<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-300))
        .fold(0.0, f64::max)
}

/// Integrates with RK4, doubling the step count until two successive
/// passes agree to `ctl.rel_tol` in every component; the returned end
/// point carries the Richardson correction.
pub fn solve<const N: usize, F>(
    f: F,
    y0: [f64; N],
    t0: f64,
    duration: f64,
    ctl: &StepControl,
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(Error::Domain(format!("duration must be >= 0, got {duration}")));
    }
    if ctl.initial_steps == 0 {
        return Err(Error::Domain("step count must be positive".into()));
    }
    if duration == 0.0 {
        let samples = if ctl.samples > 0 { vec![(t0, y0)] } else { Vec::new() };
        return Ok(Solution { y: y0, samples, steps: 0 });
    }
    let mut steps = ctl.initial_steps;
    if ctl.samples > 0 {
        steps = steps.div_ceil(ctl.samples) * ctl.samples;
    }
    let every_for = |steps: usize| if ctl.samples > 0 { steps / ctl.samples } else { 0 };
    // A coarse pass may blow up on a stiff start; that only counts as a
    // failure once the step budget is exhausted.
    let mut prev = match run(&f, y0, t0, duration, steps, 0) {
        Ok((y, _)) => Some(y),
        Err(Error::NonFinite { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut diff = f64::INFINITY;
    for halving in 1..=ctl.max_halvings {
        steps *= 2;
        let (y, samples) = match run(&f, y0, t0, duration, steps, every_for(steps)) {
            Err(Error::NonFinite { .. }) if halving < ctl.max_halvings => {
                prev = None;
                continue;
            }
            other => other?,
        };
        let Some(p) = prev else {
            prev = Some(y);
            continue;
        };
        diff = rel_diff(&p, &y);
        if diff < ctl.rel_tol {
            // Richardson correction for the fourth-order error term.
            let mut y = y;
            for i in 0..N {
                y[i] += (y[i] - p[i]) / 15.0;
            }
            let mut samples = samples;
            if let Some(last) = samples.last_mut() {
                last.1 = y;
            }
            return Ok(Solution { y, samples, steps });
        }
        prev = Some(y);
    }
    Err(Error::StepControl {
        tol: ctl.rel_tol,
        halvings: ctl.max_halvings,
        diff,
    })
}
