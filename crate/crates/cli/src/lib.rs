//! Batch front-end for `qsep`: state files in, JSON reports and sweep CSVs
//! out, with exit codes suited to scripted runs.

pub mod error;
pub mod job;
pub mod report;
pub mod runner;
pub mod state_io;

use std::ffi::OsString;

use clap::Parser;

pub use error::CliError;
pub use job::{Args, JobSpec};

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))
}

fn execute(job: &JobSpec) -> Result<(), CliError> {
    let outcome = runner::run(job)?;
    let report = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Output(e.to_string()))?;
    if let Some(csv) = &outcome.csv {
        let path = runner::csv_path(job).expect("validated: sweeps name an output");
        write_file(&path, csv)?;
    }
    match &job.out {
        Some(path) => write_file(path, &(report + "\n")),
        None => {
            println!("{report}");
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), runs the job and returns the
/// process exit code. Diagnostics go to stderr.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = JobSpec::from_args(args).and_then(|job| execute(&job));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
