//! Run configuration: JSON file, then command-line overrides, then
//! per-command defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use hybridspin::metrology::{FisherOptions, PostSelection, StateKind};
use hybridspin::{shipped, ProtocolParams};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "HYBRIDSPIN_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    State,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Sweep,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::State => "state",
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Fig5 => "fig5",
            Command::Fig6 => "fig6",
            Command::Sweep => "sweep",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Parameter fields a config file may set; missing ones keep defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    pub kappa: Option<f64>,
    pub kappa_over_gamma: Option<f64>,
    pub gamma: Option<f64>,
    pub n_atoms: Option<u64>,
    pub eta: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub p_threshold: Option<f64>,
}

/// Config file schema. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub params: Option<ParamsPatch>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub jobs: Option<usize>,
    pub thresholds: Option<Vec<f64>>,
    pub t1_grid: Option<Vec<f64>>,
    pub kappas_over_gamma: Option<Vec<f64>>,
    pub modes: Option<Vec<PostSelection>>,
    pub kinds: Option<Vec<StateKind>>,
    pub fisher: Option<FisherOptions>,
    pub points: Option<usize>,
    pub phis: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flags shared by all commands. They override config-file values.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// JSON config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $HYBRIDSPIN_OUT, else ./out).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Measurement rate κ.
    #[arg(long, global = true, conflicts_with = "kappa_over_gamma")]
    pub kappa: Option<f64>,
    /// Measurement rate as a multiple of γ.
    #[arg(long, global = true)]
    pub kappa_over_gamma: Option<f64>,
    /// Optical-pumping rate γ.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true)]
    pub n_atoms: Option<u64>,
    /// Detection efficiency η.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    #[arg(long, global = true)]
    pub t1: Option<f64>,
    #[arg(long, global = true)]
    pub t2: Option<f64>,
    /// Click-probability target for threshold post-selection.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Comma-separated thresholds for fig3.
    #[arg(long, global = true, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Comma-separated t1 values.
    #[arg(long, global = true, value_delimiter = ',')]
    pub t1_grid: Option<Vec<f64>>,
    /// Comma-separated κ/γ values for fig4.
    #[arg(long, global = true, value_delimiter = ',')]
    pub kappas_over_gamma: Option<Vec<f64>>,
    /// Points per axis of Wigner grid dumps.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Comma-separated φ values for fig6.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub phis: Option<Vec<f64>>,
}

/// Fully resolved configuration, recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub params: ProtocolParams,
    pub out_dir: PathBuf,
    pub format: Format,
    pub jobs: Option<usize>,
    pub thresholds: Vec<f64>,
    pub t1_grid: Vec<f64>,
    pub kappas_over_gamma: Vec<f64>,
    pub modes: Vec<PostSelection>,
    pub kinds: Vec<StateKind>,
    pub fisher: FisherOptions,
    pub points: usize,
    pub phis: Vec<f64>,
}

/// Default phase times for the protocol-stage snapshots.
const STAGE_T1: f64 = 0.02;
const STAGE_T2: f64 = 0.002;

fn or<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

impl RunConfig {
    pub fn resolve(command: Command, file: FileConfig, o: &Overrides) -> Result<Self> {
        let patch = file.params.unwrap_or_default();
        let mut p = ProtocolParams::default();
        if command == Command::Fig2 {
            p.t1 = STAGE_T1;
            p.t2 = STAGE_T2;
        }
        if let Some(g) = or(o.gamma, patch.gamma) {
            p.gamma = g;
        }
        if patch.kappa.is_some() && patch.kappa_over_gamma.is_some() {
            bail!("config sets both params.kappa and params.kappa_over_gamma");
        }
        match (o.kappa, o.kappa_over_gamma) {
            (Some(k), _) => p.kappa = k,
            (None, Some(r)) => p.kappa = r * p.gamma,
            (None, None) => {
                if let Some(k) = patch.kappa {
                    p.kappa = k;
                } else if let Some(r) = patch.kappa_over_gamma {
                    p.kappa = r * p.gamma;
                }
            }
        }
        if let Some(n) = or(o.n_atoms, patch.n_atoms) {
            p.n_atoms = n;
        }
        if let Some(e) = or(o.eta, patch.eta) {
            p.eta = e;
        }
        if let Some(t) = or(o.t1, patch.t1) {
            p.t1 = t;
        }
        if let Some(t) = or(o.t2, patch.t2) {
            p.t2 = t;
        }
        if let Some(q) = or(o.threshold, patch.p_threshold) {
            p.p_threshold = q;
        }
        p.validate()?;

        let out_dir = o
            .out
            .clone()
            .or(file.out_dir)
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let t1_grid = or(o.t1_grid.clone(), file.t1_grid).unwrap_or_else(|| match command {
            Command::Fig3 => shipped::total_time_t1_grid(),
            _ => shipped::FISHER_T1_GRID.to_vec(),
        });
        let modes = file.modes.unwrap_or_else(|| match command {
            Command::Fig4 => vec![PostSelection::Immediate, PostSelection::Threshold(p.p_threshold)],
            _ => vec![PostSelection::Immediate],
        });
        let kinds = file.kinds.unwrap_or_else(|| match command {
            Command::Fig5 => vec![StateKind::NonGaussian],
            _ => vec![StateKind::Gaussian, StateKind::NonGaussian],
        });
        let mut fisher = file.fisher.unwrap_or_default();
        if command == Command::Fig4 {
            fisher.phi = false;
        }
        let cfg = RunConfig {
            command,
            params: p,
            out_dir,
            format: or(o.format, file.format).unwrap_or_default(),
            jobs: or(o.jobs, file.jobs),
            thresholds: or(o.thresholds.clone(), file.thresholds)
                .unwrap_or_else(|| shipped::TOTAL_TIME_THRESHOLDS.to_vec()),
            t1_grid,
            kappas_over_gamma: or(o.kappas_over_gamma.clone(), file.kappas_over_gamma).unwrap_or_else(|| vec![1.0, 0.1]),
            modes,
            kinds,
            fisher,
            points: or(o.points, file.points).unwrap_or(512),
            phis: or(o.phis.clone(), file.phis).unwrap_or_else(|| vec![0.125, 0.0625, -0.0625, -0.125]),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.jobs == Some(0) {
            bail!("--jobs must be at least 1");
        }
        if self.t1_grid.is_empty() || self.t1_grid.windows(2).any(|w| w[1] <= w[0]) {
            bail!("t1 grid must be nonempty and strictly increasing");
        }
        if self.t1_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            bail!("t1 grid values must be finite and nonnegative");
        }
        if self.thresholds.iter().any(|q| !(0.0..1.0).contains(q)) {
            bail!("thresholds must lie in [0, 1)");
        }
        if self.kappas_over_gamma.iter().any(|k| !(k.is_finite() && *k >= 0.0)) {
            bail!("κ/γ values must be finite and nonnegative");
        }
        if self.points < 16 {
            bail!("at least 16 grid points per axis are needed");
        }
        if self.phis.iter().any(|f| !f.is_finite() || *f == 0.0) {
            bail!("φ values must be finite and nonzero");
        }
        if self.modes.is_empty() || self.kinds.is_empty() {
            bail!("modes and kinds must be nonempty");
        }
        Ok(())
    }
}
