//! Command-line surface: attention dump format, run configuration, manifests
//! and the `generate`, `batch` and `sweep` commands.

mod args;
pub mod commands;
pub mod config;
pub mod dump;
pub mod manifest;

use std::path::PathBuf;

pub use args::{BatchArgs, Cli, Command, GenerateArgs, RunArgs, SweepArgs};
pub use commands::{
    cmd_batch, cmd_generate, cmd_sweep, compute_portfolio, BatchSummary, EXIT_FAILURE, EXIT_OK,
    EXIT_PARTIAL,
};
pub use config::{Mode, RunConfig};
pub use dump::AttentionDump;
pub use manifest::Manifest;

use crate::error::{Error, Result};

impl RunArgs {
    /// Config file (if any) with command-line overrides applied.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.resolution {
            cfg.resolution = s;
        }
        if let Some(k) = self.levels {
            cfg.levels = k;
        }
        for b in &self.beta {
            let (k, v) = config::parse_level_value(b)?;
            cfg.beta.insert(k, v);
        }
        for g in &self.gamma {
            let (k, v) = config::parse_level_value(g)?;
            cfg.gamma.insert(k, v);
        }
        if let Some(mode) = &self.mode {
            cfg.mode = mode.parse()?;
        }
        if self.overlay {
            cfg.overlay = true;
        }
        if let Some(p) = self.precision {
            cfg.precision = p;
        }
        cfg.scale_config()?;
        Ok(cfg)
    }
}

fn output_dir(flag: &Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    flag.clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::invalid("no output directory; pass --out or set output_dir"))
}

/// Run a parsed command and return the process exit code.
pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Generate(a) => {
            let cfg = a.run.resolve()?;
            let out = output_dir(&a.out, &cfg)?;
            cmd_generate(&a.image, &a.attn, &out, &cfg)?;
            Ok(EXIT_OK)
        }
        Command::Batch(a) => {
            let cfg = a.run.resolve()?;
            let out = output_dir(&a.out, &cfg)?;
            let summary = cmd_batch(&a.listing, &out, &cfg)?;
            for pair in summary.pairs.iter().filter(|p| p.error.is_some()) {
                let err = pair.error.as_ref().expect("filtered");
                eprintln!(
                    "{}",
                    serde_json::json!({
                        "error": err.kind,
                        "pair": pair.name,
                        "message": err.message,
                    })
                );
            }
            Ok(summary.exit_code())
        }
        Command::Sweep(a) => {
            let csv = cmd_sweep(
                a.image.as_deref(),
                &a.attn,
                &a.configs,
                a.resolution,
                a.precision,
            )?;
            match &a.out {
                Some(path) => std::fs::write(path, csv).map_err(|e| Error::io(path, e))?,
                None => print!("{csv}"),
            }
            Ok(EXIT_OK)
        }
    }
}

/// Single-line machine-readable error report.
pub fn error_line(err: &Error) -> String {
    serde_json::json!({ "error": err.kind(), "message": err.to_string() }).to_string()
}
