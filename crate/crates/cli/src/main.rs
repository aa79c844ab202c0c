//! `logfield`: batch experiments on log-correlated Gaussian fields.

mod args;
mod manifest;
mod run;

use std::fs;
use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use logfield_core::Error;

use args::{Cli, Command};
use manifest::{RunManifest, MANIFEST_FILE};
use run::ConfigError;

fn execute(cli: Cli) -> Result<()> {
    if let Some(w) = cli.run.workers {
        if w == 0 {
            return Err(ConfigError("--workers must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let config = match cli.command {
        Command::Replay(r) => RunManifest::load(&r.manifest)?.config,
        c => c,
    };
    if let Command::Replay(_) = config {
        return Err(ConfigError("a manifest cannot replay another manifest".into()).into());
    }
    let start = Instant::now();
    let artifacts = run::run(&config)?;
    let elapsed = start.elapsed().as_secs_f64();
    match &cli.run.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for a in &artifacts {
                fs::write(dir.join(&a.name), &a.bytes).with_context(|| format!("writing {}", a.name))?;
            }
            let m = RunManifest::new(&config, &artifacts, elapsed, rayon::current_num_threads());
            let mut text = serde_json::to_vec_pretty(&m)?;
            text.push(b'\n');
            fs::write(dir.join(MANIFEST_FILE), text).context("writing the manifest")?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&artifacts[0].bytes)?;
        }
    }
    Ok(())
}

/// Exit code and short category of an error.
fn classify(e: &anyhow::Error) -> (u8, &'static str) {
    if e.downcast_ref::<ConfigError>().is_some() {
        return (2, "config");
    }
    match e.downcast_ref::<Error>() {
        Some(Error::ResourceCap { .. }) => (3, "resource-cap"),
        Some(
            Error::InvalidParameter(_)
            | Error::ScaleOutOfRange { .. }
            | Error::BoundaryTarget(..)
            | Error::DegenerateDesign(_),
        ) => (2, "config"),
        _ => (1, "internal"),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("logfield: error=config code=2 message=\"{}\"", one_line(first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, kind) = classify(&e);
            eprintln!("logfield: error={kind} code={code} message=\"{}\"", one_line(&format!("{e:#}")));
            ExitCode::from(code)
        }
    }
}
