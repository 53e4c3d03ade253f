//! Command-line driver: argument and config handling, stage execution and
//! atomic output.

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;

use config::CliParseError;

pub const EXIT_STAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Runs the tool on `args` (program name first) and returns the exit code.
/// Summary lines go to `out`, diagnostics to `err`.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match config::parse_args(args) {
        Ok(cfg) => cfg,
        Err(CliParseError::Clap(e)) => {
            let code = e.exit_code();
            let _ = if e.use_stderr() { write!(err, "{}", e.render()) } else { write!(out, "{}", e.render()) };
            return code;
        }
        Err(CliParseError::Config(e)) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    match commands::execute(&cfg.command, out) {
        Ok(()) => 0,
        Err(e @ commands::RunError::Config(_)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_STAGE
        }
    }
}
