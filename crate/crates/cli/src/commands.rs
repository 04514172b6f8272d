use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{Context, Result};
use hybridspin::dynamics::{detection_probability, run_protocol, total_time_curve, StepControl};
use hybridspin::io::save_grid;
use hybridspin::metrology::{
    reconstruct_state, run_scenario, CanonicalFrame, FisherOptions, FisherReport, PostSelection, ScenarioSpec,
};
use hybridspin::wigner::{phi_wigner, GridSpec, PhaseGrid, PhiState, PolyGaussian, SubtractionContext};
use hybridspin::{GaussianMoments, ProtocolParams};
use serde::Serialize;

use crate::config::{Command, Format, RunConfig};
use crate::selftest;
use crate::table::{Cell, Table};

pub const FISHER_HEADER: &[&str] = &[
    "kappa",
    "gamma",
    "n_atoms",
    "eta",
    "mode",
    "threshold",
    "kind",
    "t1",
    "t2",
    "unreachable",
    "cfi_homodyne",
    "cfi_phi",
    "qfi",
    "n_max",
    "phi_lo",
    "phi_hi",
    "phi_tail_fraction",
];
pub const TOTAL_TIME_HEADER: &[&str] = &["threshold", "t1", "t2", "total", "reachable"];
pub const STAGE_HEADER: &[&str] = &["stage", "elapsed", "var_x", "var_p", "min_value"];
pub const PHI_INDEX_HEADER: &[&str] = &["index", "phi", "file"];
pub const SELFTEST_HEADER: &[&str] = &["suite", "passed", "detail", "seconds"];

/// Files written so far and the stage reached, for the manifest.
pub struct Session<'a> {
    pub cfg: &'a RunConfig,
    pub stage: &'static str,
    pub files: Vec<PathBuf>,
}

impl<'a> Session<'a> {
    pub fn new(cfg: &'a RunConfig) -> Self {
        Session {
            cfg,
            stage: "dispatch",
            files: Vec::new(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn table(&mut self, stem: &str, t: &Table) -> Result<()> {
        let ext = match self.cfg.format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = self.path(&format!("{stem}.{ext}"));
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        t.write(self.cfg.format, BufWriter::new(f))?;
        self.files.push(path);
        Ok(())
    }

    fn grid(&mut self, stem: &str, g: &PhaseGrid) -> Result<()> {
        let (csv, bin) = (self.path(&format!("{stem}.csv")), self.path(&format!("{stem}.bin")));
        save_grid(g, &csv, &bin)?;
        self.files.push(csv);
        self.files.push(bin);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let path = self.path(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer_pretty(&mut w, v)?;
        std::io::Write::write_all(&mut w, b"\n")?;
        self.files.push(path);
        Ok(())
    }
}

/// Runs the configured command. Returns whether it succeeded in the
/// command's own sense (selftest can complete and still report failures).
pub fn run(s: &mut Session) -> Result<bool> {
    match s.cfg.command {
        Command::State => state(s).map(|_| true),
        Command::Fig2 => stages(s).map(|_| true),
        Command::Fig3 => total_time(s).map(|_| true),
        Command::Fig4 | Command::Fig5 | Command::Sweep => fisher(s).map(|_| true),
        Command::Fig6 => phi_states(s).map(|_| true),
        Command::Selftest => self_test(s),
    }
}

fn lab_grid(s: &PolyGaussian, points: usize) -> Result<GridSpec> {
    let (x2, p2) = s.second_moments();
    Ok(GridSpec::symmetric(8.0 * x2.sqrt(), points, 8.0 * p2.sqrt(), points)?)
}

fn subtracted(p: &ProtocolParams, pre: GaussianMoments) -> Result<PolyGaussian> {
    Ok(PolyGaussian::photon_subtracted(pre, &SubtractionContext::for_protocol(p, pre))?)
}

#[derive(Serialize)]
struct StateSummary {
    params: ProtocolParams,
    pre_click: GaussianMoments,
    post_click_second_moments: (f64, f64),
    bopp_damping: f64,
    frame: CanonicalFrame,
    detection_probability: f64,
    n_max: usize,
    purity: f64,
    trace_deficit: f64,
    qfi: f64,
}

fn state(s: &mut Session) -> Result<()> {
    let p = s.cfg.params;
    s.stage = "dynamics";
    let run = run_protocol(&p, &StepControl::default())?;
    let pre = run.pre_click();
    let post = subtracted(&p, pre)?;
    s.stage = "wigner";
    let w_pre = PolyGaussian::gaussian(pre).sample(lab_grid(&PolyGaussian::gaussian(pre), s.cfg.points)?)?;
    let w_post = post.sample(lab_grid(&post, s.cfg.points)?)?;
    s.stage = "fock";
    let frame = CanonicalFrame::new(pre, p.bopp_damping())?;
    let (rho, _) = reconstruct_state(&frame.map(&post))?;
    let summary = StateSummary {
        params: p,
        pre_click: pre,
        post_click_second_moments: post.second_moments(),
        bopp_damping: p.bopp_damping(),
        frame,
        detection_probability: detection_probability(&p)?,
        n_max: rho.n_max(),
        purity: rho.purity(),
        trace_deficit: rho.trace_deficit(),
        qfi: hybridspin::fock::qfi_displacement(&rho) * frame.fisher_scale(),
    };
    s.stage = "write";
    let mut t = Table::new(STAGE_HEADER);
    for (st, m) in &run.stages {
        t.push(vec![st.tag.to_string().as_str().into(), st.elapsed.into(), m.var_x.into(), m.var_p.into(), Cell::Empty]);
    }
    let (x2, p2) = post.second_moments();
    t.push(vec!["post_click".into(), (p.t1 + p.t2).into(), x2.into(), p2.into(), w_post.min_value().into()]);
    s.table("state_moments", &t)?;
    s.grid("state_pre_click", &w_pre)?;
    s.grid("state_post_click", &w_post)?;
    s.json("state_fock.json", &rho.to_dump())?;
    s.json("state_summary.json", &summary)?;
    Ok(())
}

fn stages(s: &mut Session) -> Result<()> {
    let p = s.cfg.params;
    s.stage = "dynamics";
    let run = run_protocol(&p, &StepControl::default())?;
    let mut states: Vec<(String, f64, PolyGaussian)> = run
        .stages
        .iter()
        .map(|(st, m)| (st.tag.to_string(), st.elapsed, PolyGaussian::gaussian(*m)))
        .collect();
    states.push(("post_click".into(), p.t1 + p.t2, subtracted(&p, run.pre_click())?));
    s.stage = "wigner";
    let grids = states
        .iter()
        .map(|(_, _, st)| Ok(st.sample(lab_grid(st, s.cfg.points)?)?))
        .collect::<Result<Vec<_>>>()?;
    s.stage = "write";
    let mut t = Table::new(STAGE_HEADER);
    for ((name, elapsed, st), g) in states.iter().zip(&grids) {
        let (x2, p2) = st.second_moments();
        t.push(vec![name.as_str().into(), (*elapsed).into(), x2.into(), p2.into(), g.min_value().into()]);
        s.grid(&format!("fig2_{name}"), g)?;
    }
    s.table("fig2_stages", &t)?;
    Ok(())
}

fn total_time(s: &mut Session) -> Result<()> {
    let mut t = Table::new(TOTAL_TIME_HEADER);
    s.stage = "dynamics";
    for &q in &s.cfg.thresholds {
        let p = ProtocolParams {
            p_threshold: q,
            ..s.cfg.params
        };
        for pt in total_time_curve(&s.cfg.t1_grid, &p)? {
            let b = pt.budget();
            t.push(vec![
                q.into(),
                pt.t1.into(),
                b.map(|b| b.t2).into(),
                b.map(|b| b.total).into(),
                b.is_some().into(),
            ]);
        }
    }
    s.stage = "write";
    s.table("fig3", &t)
}

fn fisher_rows(t: &mut Table, p: &ProtocolParams, reports: &[FisherReport]) {
    for r in reports {
        let (mode, threshold) = match r.mode {
            PostSelection::Immediate => ("immediate", None),
            PostSelection::Threshold(q) => ("threshold", Some(q)),
        };
        let kind = match r.kind {
            hybridspin::metrology::StateKind::Gaussian => "gaussian",
            hybridspin::metrology::StateKind::NonGaussian => "non_gaussian",
        };
        t.push(vec![
            p.kappa.into(),
            p.gamma.into(),
            Cell::Int(p.n_atoms),
            p.eta.into(),
            mode.into(),
            threshold.into(),
            kind.into(),
            r.t1.into(),
            r.t2.into(),
            r.unreachable.into(),
            r.cfi_homodyne.into(),
            r.cfi_phi.into(),
            r.qfi.into(),
            r.n_max.map_or(Cell::Empty, |n| Cell::Int(n as u64)),
            r.phi_range.map(|r| r.0).into(),
            r.phi_range.map(|r| r.1).into(),
            r.phi_tail_fraction.into(),
        ]);
    }
}

fn fisher(s: &mut Session) -> Result<()> {
    let cfg = s.cfg;
    let params: Vec<ProtocolParams> = match cfg.command {
        Command::Fig4 => cfg
            .kappas_over_gamma
            .iter()
            .map(|k| ProtocolParams {
                kappa: k * cfg.params.gamma,
                ..cfg.params
            })
            .collect(),
        _ => vec![cfg.params],
    };
    let opts: FisherOptions = cfg.fisher;
    let mut t = Table::new(FISHER_HEADER);
    s.stage = "metrology";
    for p in &params {
        for &mode in &cfg.modes {
            let spec = ScenarioSpec {
                params: *p,
                t1_grid: cfg.t1_grid.clone(),
                mode,
                kinds: cfg.kinds.clone(),
            };
            let reports = run_scenario(&spec, &opts)?;
            fisher_rows(&mut t, p, &reports);
        }
    }
    s.stage = "write";
    s.table(cfg.command.name(), &t)
}

/// Half-width of the fig6 grids.
const PHI_GRID_HALF: f64 = 4.0;

fn phi_states(s: &mut Session) -> Result<()> {
    let n = s.cfg.points;
    let spec = GridSpec::symmetric(PHI_GRID_HALF, n, PHI_GRID_HALF, n)?;
    let mut t = Table::new(PHI_INDEX_HEADER);
    for (i, &phi) in s.cfg.phis.clone().iter().enumerate() {
        s.stage = "wigner";
        let g = phi_wigner(PhiState::new(phi)?, spec);
        s.stage = "write";
        let stem = format!("fig6_phi_{i}");
        s.grid(&stem, &g)?;
        t.push(vec![Cell::Int(i as u64), phi.into(), format!("{stem}.csv").as_str().into()]);
    }
    s.table("fig6_index", &t)
}

fn self_test(s: &mut Session) -> Result<bool> {
    s.stage = "selftest";
    let results = selftest::run_all();
    let mut t = Table::new(SELFTEST_HEADER);
    let mut ok = true;
    for r in &results {
        ok &= r.passed;
        println!("{} {} ({}) [{:.2} s]", if r.passed { "PASS" } else { "FAIL" }, r.suite, r.detail, r.seconds);
        t.push(vec![r.suite.into(), r.passed.into(), r.detail.as_str().into(), r.seconds.into()]);
    }
    s.stage = "write";
    s.table("selftest", &t)?;
    Ok(ok)
}
