//! Command-line front end of the `polaron` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::experiments::{run_experiment, ExperimentOutput};

/// Run a polaron experiment from a JSON configuration.
#[derive(Parser, Debug)]
#[command(name = "polaron", version)]
pub struct Args {
    /// Experiment kind.
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    /// Configuration document (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`, then `./out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Recorded in the report; the experiments are deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Loads the config, runs the experiment and prints one line per check.
pub fn run(args: &Args, out: &mut dyn Write) -> Result<ExperimentOutput, CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let cfg = ExperimentConfig::load(&args.config)?;
    let kind = cfg.resolve_kind(Some(args.kind))?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let res = run_experiment(&cfg, kind, &dir, args.seed)?;
    for c in &res.checks {
        let value = c.value.map(|v| format!("{v:.6e}")).unwrap_or_else(|| "-".into());
        writeln!(
            out,
            "{} {:<44} {:>14}  {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            value,
            c.threshold
        )?;
    }
    writeln!(out, "report: {}", dir.join("report.ndjson").display())?;
    Ok(res)
}

/// Parses `argv` and runs; returns the process exit code. Failed checks
/// still exit with 0; errors map through [`CliError::exit_code`].
pub fn main_with_args<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&args, out) {
        Ok(_) => 0,
        Err(e) => {
            let _ = writeln!(err, "polaron: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut argv = vec!["polaron"];
        argv.extend_from_slice(args);
        let code = main_with_args(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(call(&[]).0, 2);
        assert_eq!(call(&["bogus", "--config", "x.json"]).0, 2);
        let (code, _, err) = call(&["simulate", "--config", "/nonexistent/config.json"]);
        assert_eq!(code, 2);
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn invalid_document_exits_with_two() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"kind": "travel", "grid": {"n": 16, "l": 8}}"#).unwrap();
        let cfg = p.to_str().unwrap();
        let (code, _, err) = call(&["simulate", "--config", cfg]);
        assert_eq!(code, 2);
        assert!(err.contains("disagrees"));
        std::fs::write(&p, r#"{"grid": {"n": 16, "l": 8}, "integrator": {"dt": 0.3}}"#).unwrap();
        assert_eq!(call(&["simulate", "--config", cfg]).0, 2);
    }

    #[test]
    fn successful_run_prints_checks() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(
            &p,
            r#"{"grid": {"n": 16, "l": 12}, "integrator": {"t_end": 0.5}, "velocity": [0, 0, 0.3]}"#,
        )
        .unwrap();
        let out = dir.path().join("run");
        let (code, stdout, _) = call(&[
            "simulate",
            "--config",
            p.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        assert!(stdout.lines().any(|l| l.starts_with("PASS energy_drift")));
        assert!(out.join("report.ndjson").exists());
        assert!(out.join("trajectory.csv").exists());
    }
}
