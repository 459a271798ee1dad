//! Command-line front end for the `gmwb` pricing library.

pub mod args;
pub mod error;
pub mod report;
pub mod run;
pub mod spec;
pub mod tables;
pub mod units;

use std::fs::File;
use std::io::{self, BufWriter, Write};

pub use error::CliError;
pub use spec::{Command, RunSpec};

/// Runs `spec` and writes its report to the configured destination.
pub fn run(spec: &RunSpec) -> Result<(), CliError> {
    let report = run::execute(spec)?;
    match &spec.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
            let mut out = BufWriter::new(file);
            report.write(spec.format, &mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            report.write(spec.format, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}
