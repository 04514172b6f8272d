use hybridspin::dynamics::*;
use hybridspin::{initial_scs, rotate_half_pi, GaussianMoments, ProtocolParams};
use proptest::prelude::*;

fn params(kappa: f64, gamma: f64, n: u64, eta: f64) -> ProtocolParams {
    ProtocolParams {
        kappa,
        gamma,
        n_atoms: n,
        eta,
        ..Default::default()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Closed-form moments written out independently of the library, with ζ = sqrt(2γ² + γκηN).
fn printed_closed_form(p: &ProtocolParams) -> (f64, f64) {
    let (g, k, n, eta, t1, t2) = (p.gamma, p.kappa, p.n(), p.eta, p.t1, p.t2);
    let z = (2.0 * g * g + g * k * eta * n).sqrt();
    let s2 = 2f64.sqrt();
    let coth = 1.0 / (z * t1 / s2).tanh();
    let x2 = 1.0 / (32.0 * g)
        * ((-4.0 * g * (t2 + t1)).exp()
            * ((eta - 2.0) * k * n - (eta - 2.0) * k * n * (2.0 * g * t2).exp()
                + 16.0 * s2 * g * (2.0 * g * g - z * z) * (2.0 * g * (t2 + 2.0 * t1)).exp()
                    / (s2 * (2.0 * g * g + z * z) + 4.0 * g * z * coth)
                + 16.0 * g * (4.0 * g * (t2 + t1)).exp()));
    let r = g.sqrt() * (4.0 * g + eta * k * n).sqrt();
    let e = (t2 * r).exp();
    let e4 = (4.0 * g * t1).exp();
    let num = 32.0
        * g
        * e4
        * (-0.125 * (-4.0 * g * t1).exp() * (k * n - k * n * (2.0 * g * t1).exp() + 8.0 * g * e4) * (e - 1.0)
            - 1.0 / 16.0 * r * (k * n * (-4.0 * g * t1).exp() * ((2.0 * g * t1).exp() - 1.0) / g + 8.0) * (e + 1.0));
    let kn2 = eta * k * k * n * n;
    let den = -kn2 + kn2 * e - kn2 * e * (2.0 * g * t1).exp() + kn2 * (2.0 * g * t1).exp()
        - 8.0 * g * (8.0 * g + 4.0 * r + eta * k * n) * e * e4
        + 8.0 * g * e4 * (8.0 * g - 4.0 * r + eta * k * n);
    (x2, num / den)
}

/// Phase II with the damping arguments swapped between the two equations.
fn swapped_phase2(p: &ProtocolParams, m0: GaussianMoments) -> Option<GaussianMoments> {
    let n = p.n();
    let rhs = |t: f64, m: GaussianMoments| {
        let d = phase2_rhs(m, p, t);
        MomentRates {
            d_var_x: d.d_var_x + 2.0 * p.gamma * m.var_x - 2.0 * p.gamma * m.var_p,
            d_var_p: -p.kappa * p.eta * n / 4.0 * m.var_p * m.var_p - 2.0 * p.gamma * m.var_x + p.gamma,
        }
    };
    integrate(rhs, m0, p.t2, &StepControl::default()).ok().map(|e| e.moments)
}

#[test]
fn closed_form_matches_printed_expressions() {
    for &(k, n, eta, t1, t2) in &[(1.0, 500, 1.0, 0.3, 0.2), (0.2, 2000, 0.5, 1.1, 0.05), (1.7, 100, 0.8, 0.01, 1.4)] {
        let p = params(k, 1.0, n, eta).with_times(t1, t2);
        let cf = closed_form_final(&p).unwrap();
        let (x2, p2) = printed_closed_form(&p);
        assert!(rel(cf.var_x, x2) < 1e-10, "{x2} vs {:?}", cf);
        assert!(rel(cf.var_p, p2) < 1e-10, "{p2} vs {:?}", cf);
    }
}

#[test]
fn zeta_from_phase_one_integration() {
    // Riccati solution from the vacuum written with s = ζ/√2.
    let p = params(0.7, 1.3, 500, 0.6);
    let z = zeta(&p);
    let a = p.kappa * p.eta * p.n() / 2.0;
    let s = z / 2f64.sqrt();
    for t in [0.01, 0.1, 0.5, 2.0] {
        let num = evolve_phase1(&p, initial_scs(), t, &StepControl::default()).unwrap().moments.var_p;
        let th = (s * t).tanh();
        let v = (0.5 * (s - p.gamma * th) + p.gamma * th) / (s + (0.5 * a + p.gamma) * th);
        assert!(rel(v, num) < 1e-9);
    }
}

#[test]
fn closed_form_on_twenty_point_sample() {
    // Deterministic stand-in for a random sample over the documented box.
    let mut seed = 0x2545F4914F6CDD1Du64;
    let mut u = || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64
    };
    let ns = [100, 500, 2000];
    for _ in 0..20 {
        let k = 0.05 + 1.95 * u();
        let n = ns[(u() * 3.0) as usize % 3];
        let eta = if u() < 0.5 { 0.5 } else { 1.0 };
        let p = params(k, 1.0, n, eta).with_times(2.0 * u(), 2.0 * u());
        let cf = closed_form_final(&p).unwrap();
        let num = pre_click_moments(&p).unwrap();
        assert!(rel(cf.var_x, num.var_x) < 1e-5 && rel(cf.var_p, num.var_p) < 1e-5, "{p:?}: {cf:?} vs {num:?}");
    }
}

#[test]
fn closed_form_spec_examples() {
    let p = params(1.0, 1.0, 500, 1.0);
    let cf = closed_form_final(&p).unwrap();
    assert!((cf.var_x - 0.5).abs() < 1e-15 && (cf.var_p - 0.5).abs() < 1e-15);

    let p = p.with_times(0.5, 0.0);
    let cf = closed_form_final(&p).unwrap();
    let num = pre_click_moments(&p).unwrap();
    assert!(rel(cf.var_x, num.var_x) < 1e-6 && rel(cf.var_p, num.var_p) < 1e-6);

    // Phase II from the SCS for γt = 0.01.
    let p = params(1.0, 1.0, 500, 1.0).with_times(0.0, 0.01);
    let num = evolve_phase2(&p, initial_scs(), 0.01, &StepControl::default()).unwrap().moments;
    let cf = closed_form_final(&p).unwrap();
    assert!(rel(cf.var_x, num.var_x) < 1e-6 && rel(cf.var_p, num.var_p) < 1e-6);

    assert!(closed_form_final(&params(1.0, 0.0, 500, 1.0)).is_err());
}

#[test]
fn pumping_only_relaxes_at_rate_two_gamma() {
    let g = 0.8;
    let p = params(0.0, g, 500, 1.0).with_times(0.0, 0.7);
    let m0 = GaussianMoments::new(3.0, 0.1).unwrap();
    let m = evolve_phase2(&p, m0, p.t2, &StepControl::default()).unwrap().moments;
    let decay = (-2.0 * g * p.t2).exp();
    assert!((m.var_x - (0.5 + 2.5 * decay)).abs() < 1e-10);
    assert!((m.var_p - (0.5 - 0.4 * decay)).abs() < 1e-10);
    let cf = closed_form_final(&params(0.0, g, 500, 1.0).with_times(0.4, 0.7)).unwrap();
    assert!((cf.var_x - 0.5).abs() < 1e-15 && (cf.var_p - 0.5).abs() < 1e-15);
}

#[test]
fn swapped_damping_reading_disagrees_with_closed_form() {
    let p = params(1.0, 1.0, 500, 1.0).with_times(0.2, 0.5);
    let m0 = rotate_half_pi(evolve_phase1(&p, initial_scs(), p.t1, &StepControl::default()).unwrap().moments);
    let cf = closed_form_final(&p).unwrap();
    let consistent = evolve_phase2(&p, m0, p.t2, &StepControl::default()).unwrap().moments;
    assert!(rel(consistent.var_x, cf.var_x) < 1e-9 && rel(consistent.var_p, cf.var_p) < 1e-9);
    // The swapped reading drives ⟨P²⟩ negative; either way it cannot match.
    if let Some(s) = swapped_phase2(&p, m0) {
        assert!(rel(s.var_x, cf.var_x) > 1e-2 || rel(s.var_p, cf.var_p) > 1e-2);
    }
}

#[test]
fn gamma_zero_riccati_over_long_window() {
    let p = params(1.0, 0.0, 500, 1.0);
    let kn = p.kappa * p.n();
    let ev = evolve_phase1(&p, initial_scs(), 40.0 / kn, &StepControl::default().with_samples(200)).unwrap();
    for s in ev.trajectory.unwrap() {
        let x = kn * s.t;
        assert!((s.var_p - 1.0 / (2.0 + x / 2.0)).abs() < 1e-8, "{x}");
        assert!((s.var_x - (0.5 + x / 8.0)).abs() < 1e-8, "{x}");
    }
    // κNt/2 = 2.
    let m = evolve_phase1(&p, initial_scs(), 4.0 / kn, &StepControl::default()).unwrap().moments;
    assert!((m.var_p - 0.25).abs() < 1e-10 && (m.var_x - 1.0).abs() < 1e-10);
}

#[test]
fn survival_matches_no_click_kraus_map() {
    // At γ = 0 the no-click Kraus operator is exp(-ηκN t P²/16); its survival
    // probability on the rotated Gaussian is ∫ e^{-2λp²} G(p; V0) dp.
    for &(eta, t1, t2) in &[(1.0, 0.001, 0.004), (0.5, 0.01, 0.02), (0.8, 0.0, 0.01)] {
        let p = params(1.0, 0.0, 500, eta).with_times(t1, t2);
        let v0 = rotate_half_pi(evolve_phase1(&p, initial_scs(), t1, &StepControl::default()).unwrap().moments).var_p;
        let lambda = eta * p.kappa * p.n() * t2 / 16.0;
        let h = 1e-3 * v0.sqrt();
        let mut survival = 0.0;
        let mut x = -40.0 * v0.sqrt();
        while x <= 40.0 * v0.sqrt() {
            let g = (-x * x / (2.0 * v0)).exp() / (2.0 * std::f64::consts::PI * v0).sqrt();
            survival += h * (-2.0 * lambda * x * x).exp() * g;
            x += h;
        }
        let pd = detection_probability(&p).unwrap();
        assert!((1.0 - pd - survival).abs() < 1e-9, "{eta}: {} vs {survival}", 1.0 - pd);
    }
}

#[test]
fn threshold_time_shrinks_with_t1_at_gamma_zero() {
    let p = ProtocolParams {
        gamma: 0.0,
        ..Default::default()
    };
    let ts: Vec<f64> = [0.0, 0.001, 0.002, 0.005, 0.01, 0.02]
        .iter()
        .map(|&t1| t2_for_threshold(t1, &p).unwrap().t2().unwrap())
        .collect();
    for w in ts.windows(2) {
        assert!(w[1] < w[0], "{ts:?}");
    }
}

fn fig3_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..=20).map(|i| i as f64 * 5e-4).collect();
    g.extend([0.015, 0.02, 0.03, 0.05, 0.1]);
    g
}

#[test]
fn total_time_zero_threshold_is_identity() {
    let p = ProtocolParams {
        p_threshold: 0.0,
        ..Default::default()
    };
    let curve = total_time_curve(&fig3_grid(), &p).unwrap();
    for pt in &curve {
        let b = pt.budget().unwrap();
        assert_eq!(b.total, b.t1);
        assert_eq!(b.t1 + b.t2, b.total);
    }
}

#[test]
fn total_time_has_interior_minimum_at_twenty_percent() {
    let p = ProtocolParams::default();
    let curve = total_time_curve(&fig3_grid(), &p).unwrap();
    let total: Vec<f64> = curve.iter().map(|pt| pt.budget().unwrap().total).collect();
    let (imin, tmin) = total
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &t)| if t < acc.1 { (i, t) } else { acc });
    assert!(imin > 0 && imin < total.len() - 1, "{total:?}");
    assert!(total[0] > tmin && *total.last().unwrap() > tmin);
}

#[test]
fn unreachable_thresholds_are_flagged() {
    let p = ProtocolParams {
        eta: 0.0,
        ..Default::default()
    };
    let curve = total_time_curve(&[0.0, 0.1], &p).unwrap();
    assert!(curve.iter().all(|pt| pt.budget().is_none()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn minimum_uncertainty_without_pumping(k in 0.01f64..5.0, n in 1u64..5000, f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
        let p = params(k, 0.0, n, 1.0);
        let scale = 40.0 / (k * n as f64);
        let run = run_protocol(&p.with_times(f1 * scale, f2 * scale), &StepControl::default()).unwrap();
        for (_, m) in &run.stages {
            prop_assert!((m.product() - 0.25).abs() < 1e-8, "{:?}", m);
        }
    }

    #[test]
    fn phase_one_squeezes_from_vacuum(k in 0.05f64..2.0, g in 0.0f64..2.0, n in 1u64..3000, eta in 0.05f64..1.0) {
        let p = params(k, g, n, eta);
        let ev = evolve_phase1(&p, initial_scs(), 1.0, &StepControl::default().with_samples(50)).unwrap();
        let tr = ev.trajectory.unwrap();
        let floor = tr.last().unwrap().var_p;
        for w in tr.windows(2) {
            // Strict until the fixed point is reached to rounding.
            if w[0].var_p - floor > 1e-9 {
                prop_assert!(w[1].var_p < w[0].var_p);
            } else {
                prop_assert!(w[1].var_p <= w[0].var_p + 1e-12);
            }
        }
        let last = tr.last().unwrap();
        prop_assert_eq!((last.var_x, last.var_p), (ev.moments.var_x, ev.moments.var_p));
    }

    #[test]
    fn pumping_part_of_both_equations(vx in 0.01f64..10.0, vp in 0.01f64..10.0, g in 0.0f64..3.0, t in 0.0f64..2.0) {
        let p = params(0.0, g, 500, 1.0).with_times(0.3, 0.0);
        let m = GaussianMoments::new(vx, vp).unwrap();
        for r in [phase1_rhs(m, &p, t), phase2_rhs(m, &p, t)] {
            prop_assert!((r.d_var_x - (-2.0 * g * vx + g)).abs() < 1e-12);
            prop_assert!((r.d_var_p - (-2.0 * g * vp + g)).abs() < 1e-12);
        }
    }

    #[test]
    fn click_rate_nonnegative_and_smooth(k in 0.05f64..2.0, eta in 0.0f64..1.0, t1 in 0.0f64..1.0) {
        let p = params(k, 1.0, 500, eta).with_times(t1, 0.0);
        let m0 = rotate_half_pi(evolve_phase1(&p, initial_scs(), t1, &StepControl::default()).unwrap().moments);
        // A few decay times of the click rate.
        let window = 4.0 / (eta * k * p.n() * m0.var_p / 4.0 + 1.0);
        let ev = evolve_phase2(&p, m0, window, &StepControl::default().with_samples(400)).unwrap();
        let rates: Vec<f64> = ev
            .trajectory
            .unwrap()
            .iter()
            .map(|s| detection_rate(GaussianMoments::new(s.var_x, s.var_p).unwrap(), &p))
            .collect();
        prop_assert!(rates.iter().all(|&r| r >= 0.0));
        let top = rates.iter().cloned().fold(0.0, f64::max);
        for w in rates.windows(2) {
            prop_assert!((w[1] - w[0]).abs() <= 0.05 * top);
        }
    }

    #[test]
    fn rotation_is_an_involution(vx in 1e-3f64..100.0, vp in 1e-3f64..100.0) {
        let m = GaussianMoments::new(vx, vp).unwrap();
        prop_assert_eq!(rotate_half_pi(rotate_half_pi(m)), m);
    }
}
