use std::ffi::OsString;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};

mod commands;
mod config;

use commands::Cli;

fn run(args: Vec<OsString>) -> anyhow::Result<String> {
    let args = config::expand_args(args, &Cli::command())?;
    let cli = Cli::try_parse_from(args).map_err(|e| {
        // Let clap print help and version itself.
        if !e.use_stderr() {
            let _ = e.print();
            std::process::exit(0);
        }
        anyhow::anyhow!(e.render().to_string().trim_end().to_string())
    })?;
    commands::dispatch(cli)
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("antscape: {e:#}");
            ExitCode::from(2)
        }
    }
}
