//! Library side of the `decor` command: config loading, flag overrides and
//! the `ingest` / `index` / `run` / `eval` commands.
//!
//! Paths given on the command line resolve against the current directory;
//! paths inside a config file resolve against that file's directory.

pub mod args;
pub mod commands;
pub mod config;
mod error;
pub mod layout;

use std::io::Write;

pub use args::{Cli, Command};
pub use commands::{cmd_eval, cmd_index, cmd_ingest, cmd_run, open_engine};
pub use config::AppConfig;
pub use error::{CliError, CliResult};

/// Loads the config named by `--config` (or the defaults) and applies the
/// command's flags.
pub fn effective_config(cli: &Cli) -> CliResult<AppConfig> {
    let mut cfg = match &cli.global.config {
        Some(path) => AppConfig::load(path)?,
        None => AppConfig::default(),
    };
    cli.global.apply(&mut cfg);
    match &cli.command {
        Command::Ingest(a) => a.apply(&mut cfg),
        Command::Index(a) => a.apply(&mut cfg),
        Command::Run(a) => a.apply(&mut cfg),
        Command::Eval(a) => a.apply(&mut cfg),
    }
    Ok(cfg)
}

/// Executes a parsed command line, printing a short summary to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let cfg = effective_config(cli)?;
    let lines = match &cli.command {
        Command::Ingest(_) => {
            let s = cmd_ingest(&cfg)?;
            vec![
                format!("documents  {}", s.num_docs),
                format!("passages   {}", s.num_passages),
                format!("queries    {}", s.num_queries),
                format!("gold pairs {}", s.num_gold),
                format!("unmatched  {} of {} evidence facts", s.unmatched_facts, s.total_facts),
            ]
        }
        Command::Index(_) => {
            let s = cmd_index(&cfg)?;
            vec![
                format!("passages {}", s.num_passages),
                format!("terms    {}", s.num_terms),
                format!("vectors  {} x {} ({})", s.num_passages, s.dim, s.model),
            ]
        }
        Command::Run(_) => {
            let s = cmd_run(&cfg)?;
            let mut lines = vec![
                format!("run {}: {} queries", s.result.run_tag, s.result.results.len()),
                format!("wrote {}", s.run_path.display()),
                format!("wrote {}", s.trace_path.display()),
            ];
            for f in &s.result.failures {
                lines.push(format!("failed {} at {}: {}", f.query_id, f.stage.name(), f.error));
            }
            lines
        }
        Command::Eval(_) => {
            let s = cmd_eval(&cfg)?;
            let mut lines: Vec<String> = s
                .reports
                .iter()
                .flat_map(|r| r.to_text().lines().map(str::to_owned).collect::<Vec<_>>())
                .collect();
            if let Some(table) = &s.comparison {
                lines.push(String::new());
                lines.extend(table.to_text().lines().map(str::to_owned));
            }
            lines
        }
    };
    commands::print_lines(out, &lines)?;
    Ok(())
}
