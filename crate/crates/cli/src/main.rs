use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{json, Value};

use lindstab_cli::{parse_config, presets, run, write_artifacts, CliError, Format, Report};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Runs one experiment on dense Lindbladian lattice models and writes CSV/JSON results.
#[derive(Debug, Parser)]
#[command(name = "lindstab", version)]
struct Args {
    /// JSON experiment configuration.
    #[arg(long, value_name = "PATH", conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Named preset to run instead of a configuration file.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Root seed; overrides the configuration's seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Worker-pool cap for the dense kernels.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Directory for artifacts; without it the table goes to stdout.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

fn execute(args: &Args) -> Result<Report, CliError> {
    let (mut cfg, inputs) = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let bytes = std::fs::read(path).map_err(|e| CliError::Field {
                field: "--config".into(),
                message: format!("{}: {e}", path.display()),
            })?;
            let cfg = parse_config(&bytes)?;
            let inputs: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
            (cfg, inputs)
        }
        (None, Some(name)) => {
            if !presets::PRESETS.contains(&name.as_str()) {
                return Err(CliError::UnknownPreset(name.clone()));
            }
            let cfg = parse_config(json!({"experiment": "preset", "preset": name}).to_string().as_bytes())?;
            let inputs = json!({"preset": name});
            (cfg, inputs)
        }
        (None, None) => unreachable!("clap requires --config or --preset"),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = run(&cfg)?;
    let mut inputs = inputs;
    if let Value::Object(m) = &mut inputs {
        m.insert("seed".into(), json!(cfg.seed));
    }
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    let out = args.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
    match out {
        Some(dir) => write_artifacts(&report, &inputs, &dir, format)?,
        None => {
            let body = match format {
                Format::Csv => report.to_csv().map_err(|e| CliError::Output(e.to_string()))?,
                Format::Json => serde_json::to_vec_pretty(&report.summary_json(&inputs)).map_err(|e| CliError::Output(e.to_string()))?,
            };
            std::io::stdout().write_all(&body).map_err(|e| CliError::Output(e.to_string()))?;
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        lindstab_core::set_threads(n);
    }
    match execute(&args) {
        Ok(report) => {
            for a in &report.assertions {
                eprintln!("{} {}: {}", if a.passed { "ok  " } else { "FAIL" }, a.name, a.detail);
            }
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
