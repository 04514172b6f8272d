//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::time::Instant;

use common::{airy_oracle, phi_wigner_oracle};
use hybridspin::dynamics::{closed_form_final, pre_click_moments, run_protocol, total_time_curve, StepControl};
use hybridspin::metrology::*;
use hybridspin::shipped;
use hybridspin::wigner::{airy_ai, PhiState, PolyGaussian, SubtractionContext};
use hybridspin::ProtocolParams;

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    limit_s: Option<f64>,
    run: Box<dyn FnOnce(&mut Shared) -> Outcome>,
}

/// Sweep results reused by the CFI ≤ QFI criterion.
#[derive(Default)]
struct Shared {
    reports: Vec<(&'static str, Vec<FisherReport>)>,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    format!("error: {e}")
}

/// xorshift64 in [0, 1); fixed seed so runs are reproducible.
struct Uniform(u64);

impl Uniform {
    fn next(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn min_uncertainty(_: &mut Shared) -> Outcome {
    let mut u = Uniform(0x1234_5678_9abc_def1);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let kappa = 10f64.powf(-2.0 + 3.0 * u.next());
        let n = 1 + (u.next() * 5000.0) as u64;
        let scale = 40.0 / (kappa * n as f64);
        let p = ProtocolParams {
            kappa,
            gamma: 0.0,
            n_atoms: n,
            eta: 1.0,
            ..Default::default()
        }
        .with_times(u.next() * scale, u.next() * scale);
        let run = run_protocol(&p, &StepControl::default()).map_err(fail)?;
        for (_, m) in &run.stages {
            worst = worst.max((m.product() - 0.25).abs());
        }
    }
    check(worst < 1e-8, format!("max |VxVp - 1/4| = {worst:.2e} over 50 runs"))
}

fn closed_form_oracle(_: &mut Shared) -> Outcome {
    let mut u = Uniform(0x2545_F491_4F6C_DD1D);
    let ns = [100, 500, 2000];
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let kappa = 0.05 + 1.95 * u.next();
        let n_atoms = ns[(u.next() * 3.0) as usize % 3];
        let eta = if u.next() < 0.5 { 0.5 } else { 1.0 };
        let p = ProtocolParams {
            kappa,
            gamma: 1.0,
            n_atoms,
            eta,
            ..Default::default()
        }
        .with_times(2.0 * u.next(), 2.0 * u.next());
        let cf = closed_form_final(&p).map_err(fail)?;
        let num = pre_click_moments(&p).map_err(fail)?;
        worst = worst
            .max((cf.var_x / num.var_x - 1.0).abs())
            .max((cf.var_p / num.var_p - 1.0).abs());
    }
    check(worst < 1e-5, format!("max relative deviation {worst:.2e} over 20 points"))
}

fn fock_anchors(_: &mut Shared) -> Outcome {
    let p = ProtocolParams {
        gamma: 0.0,
        ..shipped::reference_params()
    };
    let pre = pre_click_moments(&p).map_err(fail)?;
    let s = PolyGaussian::photon_subtracted(pre, &SubtractionContext::for_protocol(&p, pre)).map_err(fail)?;
    let (rho, _) = reconstruct_state(&s).map_err(fail)?;
    let mut dev = 0.0f64;
    for i in 0..rho.dim() {
        for j in 0..rho.dim() {
            let target = if i == 1 && j == 1 { 1.0 } else { 0.0 };
            dev = dev.max((rho.get(i, j).re - target).abs()).max(rho.get(i, j).im.abs());
        }
    }
    let opts = FisherOptions {
        phi: false,
        ..Default::default()
    };
    let one = fisher_report(&p, StateKind::NonGaussian, PostSelection::Immediate, &opts).map_err(fail)?;
    let vac = fisher_report(&p, StateKind::Gaussian, PostSelection::Immediate, &opts).map_err(fail)?;
    let (q1, h1) = (one.qfi.unwrap(), one.cfi_homodyne.unwrap());
    let (q0, h0) = (vac.qfi.unwrap(), vac.cfi_homodyne.unwrap());
    let ok = dev < 1e-5
        && (q1 - 6.0).abs() < 1e-3
        && (h1 / 6.0 - 1.0).abs() < 5e-3
        && (q0 - 2.0).abs() < 1e-3
        && (h0 / 2.0 - 1.0).abs() < 5e-3;
    check(
        ok,
        format!("|ρ - |1⟩⟨1||max = {dev:.1e}, QFI = {q1:.6}, CFI = {h1:.5}; vacuum QFI = {q0:.6}, CFI = {h0:.6}"),
    )
}

fn gaussian_consistency(_: &mut Shared) -> Outcome {
    let opts = FisherOptions {
        phi: false,
        ..Default::default()
    };
    let spec = ScenarioSpec {
        kinds: vec![StateKind::Gaussian],
        ..shipped::fisher_immediate()
    };
    let reports = run_scenario(&spec, &opts).map_err(fail)?;
    let (mut wc, mut wq) = (0.0f64, 0.0f64);
    for r in &reports {
        let vx = pre_click_moments(&spec.params.with_times(r.t1, 0.0)).map_err(fail)?.var_x;
        wc = wc.max((r.cfi_homodyne.unwrap() * vx - 1.0).abs());
        wq = wq.max((r.qfi.unwrap() * vx - 1.0).abs());
    }
    check(
        wc < 5e-3 && wq < 5e-3,
        format!("{} points on γt1 ∈ [0, 2]: max |CFI·Vx - 1| = {wc:.1e}, max |QFI·Vx - 1| = {wq:.1e}", reports.len()),
    )
}

fn total_time(_: &mut Shared) -> Outcome {
    let grid = shipped::total_time_t1_grid();
    let curve = |q: f64| -> Result<Vec<f64>, String> {
        let p = ProtocolParams {
            p_threshold: q,
            ..shipped::reference_params()
        };
        total_time_curve(&grid, &p)
            .map_err(fail)?
            .iter()
            .map(|pt| pt.budget().map(|b| b.total).ok_or_else(|| format!("threshold {q} unreachable at t1 = {}", pt.t1)))
            .collect()
    };
    let t0 = curve(0.0)?;
    let monotone = t0.windows(2).all(|w| w[1] > w[0]);
    let t2 = curve(0.2)?;
    let (imin, tmin) = t2
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (i, &t)| if t < a.1 { (i, t) } else { a });
    let interior = imin > 0 && imin + 1 < t2.len();
    check(
        monotone && interior,
        format!(
            "threshold 0 monotone: {monotone}; threshold 0.2 minimum T = {tmin:.6} at γt1 = {:.2e} (T(0) = {:.6}, interior: {interior})",
            grid[imin], t2[0]
        ),
    )
}

fn pairs(reports: &[FisherReport]) -> Vec<(f64, Option<f64>, Option<f64>)> {
    let mut out = Vec::new();
    for r in reports.iter().filter(|r| r.kind == StateKind::Gaussian) {
        let ng = reports.iter().find(|s| s.kind == StateKind::NonGaussian && s.t1 == r.t1);
        out.push((r.t1, r.cfi_homodyne, ng.and_then(|s| s.cfi_homodyne)));
    }
    out
}

fn fisher_sweeps(sh: &mut Shared) -> Outcome {
    let a = scenario_fig4(&shipped::fisher_immediate()).map_err(fail)?;
    let b = scenario_fig4(&shipped::fisher_threshold()).map_err(fail)?;
    let above: Vec<f64> = pairs(&a)
        .into_iter()
        .filter_map(|(t, g, n)| (n? > g?).then_some(t))
        .collect();
    let b_pairs = pairs(&b);
    let exceed: Vec<f64> = b_pairs
        .iter()
        .filter_map(|&(t, g, n)| (n? > g?).then_some(t))
        .collect();
    let compared = b_pairs.iter().filter(|(_, g, n)| g.is_some() && n.is_some()).count();
    sh.reports.push(("immediate", a));
    sh.reports.push(("threshold", b));
    let span = match (above.first(), above.last()) {
        (Some(lo), Some(hi)) => format!("[{lo}, {hi}]"),
        _ => "none".into(),
    };
    check(
        !above.is_empty() && exceed.is_empty() && compared > 0,
        format!(
            "immediate: non-Gaussian ahead on γt1 ∈ {span}; threshold: non-Gaussian ahead at {} of {compared} points",
            exceed.len()
        ),
    )
}

fn measurement_comparison(sh: &mut Shared) -> Outcome {
    let reports = scenario_fig5(&shipped::measurement_comparison()).map_err(fail)?;
    let mut lines = Vec::new();
    let mut ok = true;
    let early: Vec<&FisherReport> = reports.iter().filter(|r| r.t1 > 0.0 && r.t1 <= 0.1).collect();
    for r in &early {
        let (h, f, q) = (r.cfi_homodyne.unwrap(), r.cfi_phi.unwrap(), r.qfi.unwrap());
        ok &= h < f && f <= q * (1.0 + 1e-3);
        lines.push(format!("{}: {h:.3} < {f:.3} ≤ {q:.3}", r.t1));
    }
    // Earliest three nonzero grid points.
    let mut worst = 0.0f64;
    for r in early.iter().take(3) {
        worst = worst.max(1.0 - r.cfi_phi.unwrap() / r.qfi.unwrap());
    }
    ok &= worst < 0.05 && !early.is_empty();
    sh.reports.push(("comparison", reports));
    check(
        ok,
        format!("{}; earliest φ-CFI shortfall {:.2}%", lines.join(", "), 100.0 * worst),
    )
}

fn phi_basis(_: &mut Shared) -> Outcome {
    let mut u = Uniform(0x9E37_79B9_7F4A_7C15);
    let mut airy = 0.0f64;
    for _ in 0..100 {
        let z = -12.0 + 20.0 * u.next();
        let o = airy_oracle(z);
        airy = airy.max((airy_ai(z) - o).abs() / o.abs().max(1.0));
    }
    let v = [-3.0, -2.0, -1.0, -0.4, 0.0, 0.7, 1.5, 2.2, 3.0];
    let mut phi_dev = 0.0f64;
    for phi in [0.125, 0.0625] {
        let s = PhiState::new(phi).map_err(fail)?;
        for &x in &v {
            for &p in &v {
                phi_dev = phi_dev.max((s.wigner(x, p) - phi_wigner_oracle(phi, x, p)).abs());
            }
        }
    }
    check(
        airy < 1e-9 && phi_dev < 1e-4,
        format!("Ai max deviation {airy:.1e} on 100 points; W_φ max deviation {phi_dev:.1e} on 162 points"),
    )
}

fn cfi_bound(sh: &mut Shared) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for (_, reports) in &sh.reports {
        for r in reports {
            if let Some(e) = r.qfi_excess() {
                worst = worst.max(e);
                count += 1;
            }
        }
    }
    check(
        count > 0 && worst <= 1e-3,
        format!("max CFI/QFI - 1 = {worst:.2e} over {count} points"),
    )
}

fn main() {
    let criteria = vec![
        Criterion { name: "minimum-uncertainty conservation", limit_s: Some(1.0), run: Box::new(min_uncertainty) },
        Criterion { name: "closed-form oracle", limit_s: Some(10.0), run: Box::new(closed_form_oracle) },
        Criterion { name: "Fock anchors", limit_s: Some(30.0), run: Box::new(fock_anchors) },
        Criterion { name: "Gaussian consistency", limit_s: None, run: Box::new(gaussian_consistency) },
        Criterion { name: "total time vs t1", limit_s: Some(60.0), run: Box::new(total_time) },
        Criterion { name: "Gaussian vs non-Gaussian CFI", limit_s: Some(300.0), run: Box::new(fisher_sweeps) },
        Criterion { name: "measurement comparison", limit_s: Some(600.0), run: Box::new(measurement_comparison) },
        Criterion { name: "φ-basis validity", limit_s: None, run: Box::new(phi_basis) },
        Criterion { name: "CFI ≤ QFI", limit_s: None, run: Box::new(cfi_bound) },
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let out = (c.run)(&mut shared);
        let secs = start.elapsed().as_secs_f64();
        let slow = c.limit_s.is_some_and(|l| secs > l);
        let (tag, detail) = match (&out, slow) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over the {:.0} s budget", c.limit_s.unwrap())),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} {} ({detail}) [{secs:.2} s]", c.name);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
