use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use hominduce_cli::commands::{self, default_arity, parse_k, CliError};
use hominduce_cli::io::{self, GeneratorSpec};
use hominduce_cli::report::Report;

#[derive(Parser)]
#[command(name = "hominduce", version, about = "Exact A∞ towers from homotopy transfer and module-induction")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Add wall-clock timing to reports (makes them nondeterministic).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(clap::Args)]
struct Coeffs {
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    k1: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    k2: String,
    #[arg(short = 'N', long = "max-arity", default_value_t = default_arity())]
    n: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance file.
    Gen {
        /// trivial | interval | grassmann | perturbed | twisted
        kind: Option<String>,
        /// Generator spec as JSON, instead of flags.
        #[arg(long, conflicts_with = "kind")]
        spec: Option<PathBuf>,
        #[arg(long)]
        dga: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        keep: Vec<String>,
        #[arg(long = "break", value_delimiter = ',')]
        brk: Vec<String>,
        #[arg(long)]
        side: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Build and certify an A∞ tower.
    Tower {
        file: PathBuf,
        /// ht | hmi-sc | hmi-general | hmi | dga
        #[arg(long, default_value = "hmi-sc")]
        method: String,
        #[command(flatten)]
        coeffs: Coeffs,
        /// Where to write the tower file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Re-check instance and tower files.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Obstruction classes of the homotopy data.
    Obstruction {
        file: PathBuf,
        /// Apply the h_A modification first and check its primitive.
        #[arg(long)]
        markl: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Massey products on H(B).
    Massey {
        file: PathBuf,
        #[command(flatten)]
        coeffs: Coeffs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Hochschild differential of the difference of the two towers.
    Hochschild {
        file: PathBuf,
        #[command(flatten)]
        coeffs: Coeffs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Condition flags with witnesses.
    Conditions {
        file: PathBuf,
        #[arg(long, value_delimiter = ',')]
        require: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        forbid: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => io::to_json(report),
        Format::Text => report.to_text(),
    }
}

fn emit(report: Report, format: Format, output: Option<&PathBuf>, start: Option<Instant>) -> Result<bool, CliError> {
    let mut report = report;
    if let Some(t) = start {
        report.find("elapsed_ms", t.elapsed().as_millis() as u64);
    }
    let text = render(&report, format);
    match output {
        Some(p) => commands::write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(report.passed())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let start = cli.timing.then(Instant::now);
    let format = cli.format;
    match cli.cmd {
        Cmd::Gen { kind, spec, dga, n, cutoff, base, seed, keep, brk, side, output } => {
            let spec = match spec {
                Some(p) => serde_json::from_str::<GeneratorSpec>(&commands::read(&p)?).map_err(|e| CliError::Input(format!("generator spec: {e}")))?,
                None => GeneratorSpec {
                    kind: kind.ok_or_else(|| CliError::Input("gen needs a kind or --spec".into()))?,
                    dga,
                    n,
                    cutoff,
                    base,
                    seed,
                    keep,
                    brk,
                    side,
                },
            };
            let file = commands::cmd_gen(&spec)?;
            let text = io::to_json(&file);
            match output {
                Some(p) => commands::write(&p, &text)?,
                None => print!("{text}"),
            }
            Ok(true)
        }
        Cmd::Tower { file, method, coeffs, output } => {
            let args = commands::TowerArgs { file, method, k1: parse_k(&coeffs.k1)?, k2: parse_k(&coeffs.k2)?, n: coeffs.n };
            let out = commands::cmd_tower(&args)?;
            if let (Some(p), Some(t)) = (&output, &out.tower) {
                commands::write(p, &io::to_json(t))?;
            }
            emit(out.report, format, None, start)
        }
        Cmd::Verify { files, output } => emit(commands::cmd_verify(&files)?, format, output.as_ref(), start),
        Cmd::Obstruction { file, markl, output } => emit(commands::cmd_obstruction(&file, markl)?, format, output.as_ref(), start),
        Cmd::Massey { file, coeffs, output } => {
            let r = commands::cmd_massey(&file, &parse_k(&coeffs.k1)?, &parse_k(&coeffs.k2)?, coeffs.n)?;
            emit(r, format, output.as_ref(), start)
        }
        Cmd::Hochschild { file, coeffs, output } => {
            let r = commands::cmd_hochschild(&file, &parse_k(&coeffs.k1)?, &parse_k(&coeffs.k2)?, coeffs.n)?;
            emit(r, format, output.as_ref(), start)
        }
        Cmd::Conditions { file, require, forbid, output } => emit(commands::cmd_conditions(&file, &require, &forbid)?, format, output.as_ref(), start),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
