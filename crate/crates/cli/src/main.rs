//! `hybridspin` command-line driver: computes the figure datasets and
//! writes CSV/JSON tables, grid dumps and a run manifest.

mod commands;
mod config;
mod selftest;
mod table;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};

use commands::Session;
use config::{Command, FileConfig, Overrides, RunConfig, OUT_ENV};

pub const CSV_SCHEMA: &str = include_str!("../schema/csv_schema.json");
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "hybridspin", version, about = "Hybrid spin-squeezing protocol: figure datasets and self-test")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Serialize)]
struct ErrorInfo {
    kind: String,
    stage: String,
    message: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'static str,
    status: &'static str,
    failure_stage: Option<&'a str>,
    error: Option<&'a ErrorInfo>,
    config: Option<&'a RunConfig>,
    versions: Value,
    tolerances: Value,
    threads: usize,
    wall_time_s: f64,
    outputs: Vec<String>,
}

fn tolerances() -> Value {
    use hybridspin::{fock, metrology, wigner};
    let step = hybridspin::dynamics::StepControl::default();
    let phi = metrology::PhiGridOptions::default();
    json!({
        "grid_norm": wigner::NORM_TOL,
        "grid_clip": wigner::CLIP_TOL,
        "fock_tail": fock::TAIL_TOL,
        "fock_trace": fock::TRACE_TOL,
        "fock_clamp": fock::CLAMP,
        "dtheta": metrology::DTHETA,
        "probability_floor": metrology::P_FLOOR,
        "normalization_drift": metrology::DRIFT_TOL,
        "ode_rel_tol": step.rel_tol,
        "ode_max_halvings": step.max_halvings,
        "phi_tail_tol": phi.tail_tol,
        "phi_fail_tol": phi.fail_tol,
    })
}

fn classify(e: &anyhow::Error, stage: &str) -> String {
    if let Some(k) = e.chain().find_map(|c| c.downcast_ref::<hybridspin::Error>()) {
        return k.kind().to_string();
    }
    if e.chain().any(|c| c.is::<std::io::Error>()) {
        return "io".into();
    }
    if stage == "config" {
        "config".into()
    } else {
        "runtime".into()
    }
}

fn fallback_out(o: &Overrides) -> PathBuf {
    o.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(m)? + "\n";
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let info = ErrorInfo {
                kind: "usage".into(),
                stage: "arguments".into(),
                message: e.to_string().trim().to_string(),
            };
            eprintln!("{}", json!({ "error": info }));
            return ExitCode::from(2);
        }
    };
    let start = Instant::now();
    let mut stage: &'static str = "config";
    let cfg = cli
        .overrides
        .config
        .as_deref()
        .map(FileConfig::load)
        .unwrap_or_else(|| Ok(FileConfig::default()))
        .and_then(|file| RunConfig::resolve(cli.command, file, &cli.overrides));

    let mut outputs = Vec::new();
    let result: Result<bool> = match &cfg {
        Err(_) => Err(anyhow::anyhow!("configuration rejected")),
        Ok(cfg) => {
            if let Some(n) = cfg.jobs {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    log::warn!("thread pool already initialized: {e}");
                }
            }
            stage = "prepare_output";
            let prepared = std::fs::create_dir_all(&cfg.out_dir)
                .and_then(|_| std::fs::write(cfg.out_dir.join("csv_schema.json"), CSV_SCHEMA))
                .with_context(|| format!("preparing output directory {}", cfg.out_dir.display()));
            match prepared {
                Err(e) => Err(e),
                Ok(()) => {
                    outputs.push(cfg.out_dir.join("csv_schema.json"));
                    log::info!("running {} into {}", cfg.command.name(), cfg.out_dir.display());
                    let mut s = Session::new(cfg);
                    let r = commands::run(&mut s);
                    stage = s.stage;
                    outputs.extend(s.files);
                    r
                }
            }
        }
    };

    let (error, code) = match (&cfg, result) {
        (Err(e), _) => (
            Some(ErrorInfo {
                kind: classify(e, "config"),
                stage: "config".into(),
                message: format!("{e:#}"),
            }),
            2,
        ),
        (Ok(_), Err(e)) => (
            Some(ErrorInfo {
                kind: classify(&e, stage),
                stage: stage.into(),
                message: format!("{e:#}"),
            }),
            1,
        ),
        (Ok(_), Ok(false)) => (
            Some(ErrorInfo {
                kind: "selftest_failed".into(),
                stage: stage.into(),
                message: "one or more self-test suites failed".into(),
            }),
            1,
        ),
        (Ok(_), Ok(true)) => (None, 0),
    };

    let out_dir = cfg.as_ref().map(|c| c.out_dir.clone()).unwrap_or_else(|_| fallback_out(&cli.overrides));
    let manifest = Manifest {
        schema_version: MANIFEST_VERSION,
        command: cli.command.name(),
        status: if error.is_none() { "ok" } else { "failed" },
        failure_stage: error.as_ref().map(|e| e.stage.as_str()),
        error: error.as_ref(),
        config: cfg.as_ref().ok(),
        versions: json!({ "cli": env!("CARGO_PKG_VERSION"), "core": hybridspin::VERSION }),
        tolerances: tolerances(),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    if let Err(e) = write_manifest(&out_dir, &manifest) {
        log::error!("could not write manifest: {e:#}");
    }
    match error {
        None => ExitCode::SUCCESS,
        Some(info) => {
            eprintln!("{}", json!({ "error": info }));
            ExitCode::from(code)
        }
    }
}
