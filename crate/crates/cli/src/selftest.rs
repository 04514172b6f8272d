//! Quick invariant suites run by `selftest`.

use std::time::Instant;

use hybridspin::dynamics::{closed_form_final, pre_click_moments, run_protocol, StepControl};
use hybridspin::fock::{qfi_displacement, reconstruct};
use hybridspin::metrology::{fisher_report, reconstruct_state, FisherOptions, PostSelection, StateKind};
use hybridspin::wigner::{airy_ai, PhiState, PolyGaussian, SubtractionContext};
use hybridspin::{GaussianMoments, ProtocolParams};

pub struct SuiteResult {
    pub suite: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Outcome = std::result::Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Uniform(u64);

impl Uniform {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn min_uncertainty() -> Outcome {
    let mut u = Uniform(0x5DEE_CE66_D1CE_4E5B);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let kappa = 0.01 + 3.0 * u.next();
        let n_atoms = 1 + (u.next() * 3000.0) as u64;
        let scale = 40.0 / (kappa * n_atoms as f64);
        let p = ProtocolParams {
            kappa,
            gamma: 0.0,
            n_atoms,
            eta: 1.0,
            ..Default::default()
        }
        .with_times(u.next() * scale, u.next() * scale);
        for (_, m) in run_protocol(&p, &StepControl::default()).map_err(err)?.stages {
            worst = worst.max((m.product() - 0.25).abs());
        }
    }
    verdict(worst < 1e-8, format!("max |VxVp - 1/4| = {worst:.1e}"))
}

fn closed_form() -> Outcome {
    let mut u = Uniform(0x2545_F491_4F6C_DD1D);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p = ProtocolParams {
            kappa: 0.05 + 1.95 * u.next(),
            n_atoms: [100, 500, 2000][(u.next() * 3.0) as usize % 3],
            eta: if u.next() < 0.5 { 0.5 } else { 1.0 },
            ..Default::default()
        }
        .with_times(2.0 * u.next(), 2.0 * u.next());
        let a = closed_form_final(&p).map_err(err)?;
        let b = pre_click_moments(&p).map_err(err)?;
        worst = worst.max((a.var_x / b.var_x - 1.0).abs()).max((a.var_p / b.var_p - 1.0).abs());
    }
    verdict(worst < 1e-5, format!("max relative deviation {worst:.1e}"))
}

fn subtraction() -> Outcome {
    let p = ProtocolParams::default().with_times(0.05, 0.01);
    let pre = pre_click_moments(&p).map_err(err)?;
    let s = PolyGaussian::photon_subtracted(pre, &SubtractionContext::for_protocol(&p, pre)).map_err(err)?;
    let w = s.sample(s.default_grid().map_err(err)?).map_err(err)?;
    let none = PolyGaussian::photon_subtracted(pre, &SubtractionContext::new(0.0, pre.var_p).map_err(err)?)
        .map_err(err)?;
    let w0 = none.sample(none.default_grid().map_err(err)?).map_err(err)?;
    let norm = (w.integral() - 1.0).abs();
    verdict(
        norm < 1e-6 && w.min_value() < 0.0 && w0.min_value() >= 0.0,
        format!("norm error {norm:.1e}, min W = {:.3e}, min W(c=0) = {:.3e}", w.min_value(), w0.min_value()),
    )
}

fn airy_ode() -> Outcome {
    let h = 1e-3;
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let z = -5.0 + 0.1 * i as f64;
        let d2 = (airy_ai(z + h) - 2.0 * airy_ai(z) + airy_ai(z - h)) / (h * h);
        worst = worst.max((d2 - z * airy_ai(z)).abs());
    }
    verdict(worst < 1e-6, format!("max |Ai'' - z Ai| = {worst:.1e} on [-5, 5]"))
}

fn phi_mirror() -> Outcome {
    let mut worst = 0.0f64;
    for phi in [0.125, 0.0625] {
        let (a, b) = (PhiState::new(phi).map_err(err)?, PhiState::new(-phi).map_err(err)?);
        for i in 0..9 {
            for j in 0..9 {
                let (x, p) = (-2.0 + 0.5 * i as f64, -2.0 + 0.5 * j as f64);
                worst = worst.max((a.wigner(x, p) - b.wigner(-x, p)).abs());
            }
        }
    }
    verdict(worst < 1e-14, format!("max |W_φ(x,p) - W_-φ(-x,p)| = {worst:.1e}"))
}

fn fock_anchors() -> Outcome {
    let vac = GaussianMoments::new(0.5, 0.5).map_err(err)?;
    let one = PolyGaussian::photon_subtracted(vac, &SubtractionContext::new(1.0, 0.5).map_err(err)?).map_err(err)?;
    let (rho, _) = reconstruct_state(&one).map_err(err)?;
    let dev = (rho.get(1, 1).re - 1.0).abs();
    let q = qfi_displacement(&rho);
    let sq = PolyGaussian::gaussian(GaussianMoments::new(2.0, 0.125).map_err(err)?);
    let (x2, p2) = sq.second_moments();
    let spec = hybridspin::fock::grid_for(x2, p2, 64).map_err(err)?;
    let rs = reconstruct(&sq.sample(spec).map_err(err)?, 64).map_err(err)?;
    let qs = qfi_displacement(&rs);
    verdict(
        dev < 1e-5 && (q - 6.0).abs() < 1e-3 && (qs - 0.5).abs() < 1e-5,
        format!("ρ11 error {dev:.1e}, QFI(|1⟩) = {q:.6}, QFI(squeezed) = {qs:.6}"),
    )
}

fn gaussian_consistency() -> Outcome {
    let opts = FisherOptions {
        phi: false,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for t1 in [0.0, 0.1, 1.0] {
        let p = ProtocolParams::default().with_times(t1, 0.0);
        let vx = pre_click_moments(&p).map_err(err)?.var_x;
        let r = fisher_report(&p, StateKind::Gaussian, PostSelection::Immediate, &opts).map_err(err)?;
        worst = worst
            .max((r.cfi_homodyne.unwrap_or(f64::NAN) * vx - 1.0).abs())
            .max((r.qfi.unwrap_or(f64::NAN) * vx - 1.0).abs());
    }
    verdict(worst < 5e-3, format!("max |F·Vx - 1| = {worst:.1e}"))
}

fn cfi_bound() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for t1 in [0.0, 0.01, 0.05] {
        let p = ProtocolParams::default().with_times(t1, 0.0);
        let r = fisher_report(&p, StateKind::NonGaussian, PostSelection::Immediate, &FisherOptions::default())
            .map_err(err)?;
        worst = worst.max(r.qfi_excess().unwrap_or(f64::INFINITY));
    }
    verdict(worst <= 1e-3, format!("max CFI/QFI - 1 = {worst:.1e}"))
}

pub fn run_all() -> Vec<SuiteResult> {
    let suites: [(&'static str, fn() -> Outcome); 8] = [
        ("minimum_uncertainty", min_uncertainty),
        ("closed_form", closed_form),
        ("photon_subtraction", subtraction),
        ("airy_ode", airy_ode),
        ("phi_mirror", phi_mirror),
        ("fock_anchors", fock_anchors),
        ("gaussian_consistency", gaussian_consistency),
        ("cfi_le_qfi", cfi_bound),
    ];
    suites
        .iter()
        .map(|(suite, f)| {
            let start = Instant::now();
            let out = f();
            SuiteResult {
                suite,
                passed: out.is_ok(),
                detail: out.unwrap_or_else(|e| e),
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}
