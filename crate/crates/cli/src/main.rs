use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let ci = std::env::var_os("CI").is_some_and(|v| !v.is_empty());
    let code = permqkd_cli::run_cli(
        std::env::args().collect(),
        ci,
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    );
    ExitCode::from(code as u8)
}
