//! Command-line front end.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::Parser;
use serde_json::Value;

pub use config::{parse_config, Command, RunConfig};
pub use run::{execute, run_to_directory, Artifact, Outcome};

use crate::error::Error;

#[derive(Debug, Parser)]
#[command(name = "semidirac", about = "Emitters in anisotropic photonic lattices and dipole arrays")]
pub struct Args {
    /// bands | dos | selfenergy | boundstate | dynamics | radiation | array-bands | classify
    pub command: String,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Reads a config file, inserting `command` when absent.
pub fn load(command: &str, text: &str) -> Result<RunConfig, Error> {
    if Command::parse(command).is_none() {
        return Err(Error::Schema { path: "command".into(), message: format!("unknown command {command:?}") });
    }
    let mut value: Value = serde_json::from_str(text)
        .map_err(|e| Error::Schema { path: String::new(), message: e.to_string() })?;
    if let Value::Object(map) = &mut value {
        match map.get("command") {
            None => {
                map.insert("command".into(), Value::String(command.into()));
            }
            Some(Value::String(c)) if c != command => {
                return Err(Error::Schema {
                    path: "command".into(),
                    message: format!("config is for {c:?} but {command:?} was requested"),
                });
            }
            _ => {}
        }
    }
    parse_config(&value.to_string())
}

/// Full command-line run; returns the exit status.
pub fn main_with(args: Args) -> i32 {
    let fallback = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    if args.threads == Some(0) {
        let e = Error::Range { path: "--threads".into(), message: "must be at least 1".into() };
        return run::write_failure(&fallback, &args.command, &e);
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            let e = Error::Schema { path: "--config".into(), message: format!("{}: {e}", args.config.display()) };
            return run::write_failure(&fallback, &args.command, &e);
        }
    };
    let mut cfg = match load(&args.command, &text) {
        Ok(c) => c,
        Err(e) => {
            let dir = args.out.clone().unwrap_or_else(|| directory_hint(&text).unwrap_or(fallback));
            return run::write_failure(&dir, &args.command, &e);
        }
    };
    if let Some(out) = &args.out {
        cfg.output.directory = out.display().to_string();
    }
    let dir = PathBuf::from(&cfg.output.directory);
    match run_to_directory(&cfg, &dir, args.threads) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn directory_hint(text: &str) -> Option<PathBuf> {
    let v: Value = serde_json::from_str(text).ok()?;
    v.get("output")?.get("directory")?.as_str().map(PathBuf::from)
}
