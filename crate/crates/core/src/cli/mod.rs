//! Command-line front end. Every command reads its inputs from flags and a
//! JSON config, writes artifacts atomically and maps failures onto exit
//! codes: 0 success, 1 usage or config, 2 data, 3 numeric.

mod commands;
mod config;

pub use commands::{run, Cli, Command, SweepArg};
pub use config::{
    AdjacencyMode, AdjacencySection, DataSection, EvalSection, ModelSection, OutputSection, RunConfig,
};

use clap::Parser;

/// Parse `args` (program name first), run, report errors on stderr and
/// return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
