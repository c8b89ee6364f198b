use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use circslice::report::{emit_report, parse_body_spec, run_command, Command, Format, RunConfig};
use circslice::sampling::{DEFAULT_CHUNK_SIZE, DEFAULT_CIRCLE_NODES, DEFAULT_PHASE_SAMPLES, DEFAULT_SPHERE_SAMPLES};
use circslice::{Error, QuadratureSpec};

const EXIT_USAGE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_SELFCHECK: u8 = 3;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CommandArg {
    Volume,
    Slice,
    Functional,
    Defect,
    Circularity,
    Compare,
    DemoNecessity,
    Selfcheck,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Volume => Command::Volume,
            CommandArg::Slice => Command::Slice,
            CommandArg::Functional => Command::Functional,
            CommandArg::Defect => Command::Defect,
            CommandArg::Circularity => Command::Circularity,
            CommandArg::Compare => Command::Compare,
            CommandArg::DemoNecessity => Command::DemoNecessity,
            CommandArg::Selfcheck => Command::Selfcheck,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

/// Volumes, line cross-sections and circularity defects of star bodies.
#[derive(Debug, Parser)]
#[command(name = "circslice", version)]
struct Cli {
    command: CommandArg,

    /// Body-spec file (JSON). Repeat for commands taking several bodies.
    #[arg(long = "spec", value_name = "PATH")]
    specs: Vec<PathBuf>,

    /// Uniform sphere samples N.
    #[arg(long, default_value_t = DEFAULT_SPHERE_SAMPLES)]
    samples: usize,

    /// Circle-rule nodes K (even, >= 4).
    #[arg(long = "circle-nodes", default_value_t = DEFAULT_CIRCLE_NODES)]
    circle_nodes: usize,

    /// Sampled unit quaternions Q.
    #[arg(long = "phase-samples", default_value_t = DEFAULT_PHASE_SAMPLES)]
    phase_samples: usize,

    /// Master seed. Required: results are a function of the seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Relative tolerance for slice domination and circularity.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,

    #[arg(long, value_enum, default_value = "table")]
    format: FormatArg,

    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Line direction for `slice`, comma separated; defaults to the first axis.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Option<Vec<f64>>,

    /// Reduction chunk length.
    #[arg(long = "chunk-size", default_value_t = DEFAULT_CHUNK_SIZE)]
    chunk_size: usize,
}

fn fail(code: u8, err: &Error) -> ExitCode {
    eprintln!("circslice: error [{}]: {err}", err.module());
    ExitCode::from(code)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Validation(_)
        | Error::InvalidField { .. }
        | Error::InvalidBody { .. }
        | Error::Precondition(_)
        | Error::Oracle(_) => EXIT_VALIDATION,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Some(seed) = cli.seed else {
        eprintln!("circslice: error [input]: --seed is required");
        return ExitCode::from(EXIT_USAGE);
    };

    let mut bodies = Vec::with_capacity(cli.specs.len());
    for path in &cli.specs {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("circslice: error [report]: cannot read {}: {e}", path.display());
                return ExitCode::from(EXIT_USAGE);
            }
        };
        match parse_body_spec(&text) {
            Ok(body) => bodies.push(body),
            Err(err) => {
                eprintln!("circslice: in {}:", path.display());
                let code = if matches!(err, Error::Validation(_) | Error::InvalidField { .. }) {
                    EXIT_VALIDATION
                } else {
                    EXIT_USAGE
                };
                return fail(code, &err);
            }
        }
    }

    let config = RunConfig {
        command: cli.command.into(),
        quadrature: QuadratureSpec {
            sphere_samples: cli.samples,
            circle_nodes: cli.circle_nodes,
            phase_samples: cli.phase_samples,
            seed,
            chunk_size: cli.chunk_size,
        },
        tol: cli.tol,
        format: match cli.format {
            FormatArg::Table => Format::Table,
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        direction: cli.direction,
    };
    if let Err(err) = config.validate() {
        return fail(EXIT_USAGE, &err);
    }
    if !config.command.arity().contains(&bodies.len()) {
        eprintln!(
            "circslice: error [input]: {} takes {} --spec file(s), got {}",
            config.command.name(),
            match config.command {
                Command::Compare => "2",
                Command::Selfcheck => "no",
                _ => "one or more",
            },
            bodies.len()
        );
        return ExitCode::from(EXIT_USAGE);
    }

    let report = match run_command(&config, &bodies) {
        Ok(r) => r,
        Err(err) => return fail(exit_code_for(&err), &err),
    };
    let bytes = emit_report(&report, config.format);
    let written = match &cli.out {
        Some(path) => fs::write(path, &bytes).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes).map_err(|e| e.to_string())
        }
    };
    if let Err(msg) = written {
        eprintln!("circslice: error [report]: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    if config.command == Command::Selfcheck && !report.passed {
        return ExitCode::from(EXIT_SELFCHECK);
    }
    ExitCode::SUCCESS
}
