//! The `permqkd` command-line front end, callable in-process through
//! [`run_cli`].

pub mod args;
mod commands;
pub mod error;
mod output;

#[cfg(test)]
mod tests;

use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use args::{expand_config, Cli, Command};
use commands::Ctx;
pub use error::CliError;

fn dispatch(ctx: &mut Ctx, command: Command) -> Result<(), CliError> {
    log::debug!("running {}", command.name());
    match command {
        Command::Run(a) => commands::run(ctx, a),
        Command::AttackSweep(a) => commands::attack_sweep(ctx, a),
        Command::TimingDemo(a) => commands::timing_demo(ctx, a),
        Command::Feasibility(a) => commands::feasibility(ctx, a),
        Command::ValidateTiming(a) => commands::validate_timing_cmd(ctx, a),
    }
}

/// Parse `argv` (program name first) and run it. Returns the exit code:
/// 2 bad arguments, 3 bad protocol configuration, 4 delay bank too small,
/// 5 unwritable output, 6 abort under `--expect-accept`.
///
/// `ci` makes `--seed` mandatory.
pub fn run_cli(argv: Vec<String>, ci: bool, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = expand_config(argv).and_then(|argv| {
        Cli::try_parse_from(argv).map_err(|e| {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let sink: &mut dyn Write = if code == 0 { &mut *out } else { &mut *err };
            let _ = write!(sink, "{e}");
            CliError::Clap(code)
        })
    });
    let outcome = result.and_then(|cli| dispatch(&mut Ctx { out, ci }, cli.command));
    match outcome {
        Ok(()) => 0,
        Err(CliError::Clap(code)) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
