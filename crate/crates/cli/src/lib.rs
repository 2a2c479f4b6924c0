//! The `toda` command line: transforms, evolution, bracket evaluation and verification suites.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

pub mod commands;
pub mod config;
pub mod verify;

pub use config::Config;
pub use verify::{PropertyResult, VerifyOptions, VerifyReport};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PROPERTY: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_BLOWUP: u8 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }

    pub fn property(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PROPERTY,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<toda_core::Error> for CliError {
    fn from(e: toda_core::Error) -> Self {
        use toda_core::Error as E;
        let code = match e {
            E::NonFiniteState(_) | E::OverflowGuard(_) | E::ConvergenceFailure(_) | E::StructureViolation(..) => {
                EXIT_BLOWUP
            }
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Phase,
    Jacobi,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[value(alias = "EXACT_SPECTRAL", alias = "exact")]
    #[serde(alias = "EXACT_SPECTRAL", alias = "exact")]
    ExactSpectral,
    #[value(alias = "RK4_LAX")]
    #[serde(alias = "RK4_LAX")]
    Rk4Lax,
    #[value(alias = "RK4_HAMILTONIAN")]
    #[serde(alias = "RK4_HAMILTONIAN")]
    Rk4Hamiltonian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Roundtrip,
    Jacobi,
    Hierarchy,
    Darboux,
    Casimirs,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Roundtrip => "roundtrip",
            Suite::Jacobi => "jacobi",
            Suite::Hierarchy => "hierarchy",
            Suite::Darboux => "darboux",
            Suite::Casimirs => "casimirs",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "toda", version, about = "Open Toda lattice: spectral transforms, brackets and flows")]
pub struct Cli {
    /// JSON file whose keys mirror the flags; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a state envelope between phase, Jacobi and spectral form.
    Transform(TransformArgs),
    /// Integrate the k-th flow and write the trajectory.
    Evolve(EvolveArgs),
    /// Evaluate {chi(p), chi(q)} for f = z^n.
    Bracket(BracketArgs),
    /// Run the invariant suites on random states.
    Verify(VerifyArgs),
    /// Walk through the N = 2 example.
    Demo,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Input envelope (stdin when absent or `-`).
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub direction: Option<Direction>,
    /// Stop at this kind (forward: jacobi or spectral; inverse: jacobi or phase).
    #[arg(long, value_enum)]
    pub to: Option<TargetKind>,
    /// Gauge for the inverse map to phase space: the value of q_0.
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Bracket index p for `rk4-hamiltonian` (p <= min(k, 2)).
    #[arg(long)]
    pub p_index: Option<u32>,
    #[arg(long, value_enum)]
    pub out: Option<OutFormat>,
}

#[derive(Debug, Args)]
pub struct BracketArgs {
    #[arg(long, short)]
    pub input: Option<PathBuf>,
    /// Exponent n in f = z^n.
    #[arg(long)]
    pub f: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub p: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<f64>,
    #[arg(long)]
    pub restricted: bool,
    /// Print JSON instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Option<Suite>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here as well as printing the table.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Print the JSON report on stdout instead of the table.
    #[arg(long)]
    pub json: bool,
    #[arg(long, hide = true)]
    pub negative_control: bool,
}

pub(crate) fn read_input(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            std::fs::read_to_string(p).map_err(|e| CliError::validation(format!("cannot read {}: {e}", p.display())))
        }
        _ => std::io::read_to_string(std::io::stdin()).map_err(|e| CliError::validation(format!("cannot read stdin: {e}"))),
    }
}

pub(crate) fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    let fail = |e: std::io::Error| CliError::validation(format!("cannot write output: {e}"));
    let piped = |r: std::io::Result<()>| match r {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(fail),
    };
    match path {
        Some(p) if p != Path::new("-") => std::fs::write(p, text).map_err(fail),
        _ => {
            let mut out = std::io::stdout().lock();
            piped(out.write_all(text.as_bytes()))?;
            if !text.ends_with('\n') {
                piped(out.write_all(b"\n"))?;
            }
            piped(out.flush())
        }
    }
}

/// Runs one parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = Config::load(cli.config.as_deref()).and_then(|cfg| match cli.command {
        Command::Transform(a) => commands::transform(a, &cfg),
        Command::Evolve(a) => commands::evolve(a, &cfg),
        Command::Bracket(a) => commands::bracket(a, &cfg),
        Command::Verify(a) => commands::verify(a, &cfg),
        Command::Demo => commands::demo(),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
