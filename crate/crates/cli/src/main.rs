//! `backcompat`: command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::UsageError;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Train(c) => commands::train_cmd(c),
        Command::Compat(c) => commands::compat_cmd(c),
        Command::UpdateExp(c) => commands::update_exp_cmd(c),
        Command::Sweep(c) => commands::sweep_cmd(c),
        Command::Simulate(c) => commands::simulate_cmd(c),
        Command::Serve(c) => commands::serve_cmd(c),
        Command::GenData(c) => commands::gen_data_cmd(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}

/// The error chain joined by `: `, skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut message = String::new();
    for cause in e.chain() {
        let text = cause.to_string();
        if message.ends_with(&text) {
            continue;
        }
        if !message.is_empty() {
            message.push_str(": ");
        }
        message.push_str(&text);
    }
    message
}
