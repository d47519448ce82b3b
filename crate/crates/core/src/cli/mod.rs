//! The `worldline` command-line front end.
//!
//! Exit codes: 0 success, 1 input error, 2 numerical failure. Failures print a
//! single `code=<n> reason=<text>` line on stderr; data goes to stdout or `--out`.

mod commands;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::quadrature::QuadratureSpec;
use crate::quantities::{Particle, UnitSystem};

pub use commands::{cmd_eval, cmd_nambu_goto, cmd_optimize, cmd_sweep, cmd_verify};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NUMERICAL: u8 = 2;

/// A failed invocation: exit code plus a one-line reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub reason: String,
}

impl CliError {
    pub fn input(reason: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            reason: reason.into(),
        }
    }

    pub fn numerical(reason: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            reason: reason.into(),
        }
    }

    /// `code=<n> reason=<text>` on one line.
    pub fn line(&self) -> String {
        format!(
            "code={} reason={}",
            self.code,
            self.reason.replace(['\n', '\r'], " ")
        )
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFiniteIntegrand { .. }
            | Error::NonFiniteIntegrand2d { .. }
            | Error::NegativeRadicand { .. } => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            reason: e.to_string(),
        }
    }
}

impl From<crate::expr::ParseError> for CliError {
    fn from(e: crate::expr::ParseError) -> Self {
        Error::from(e).into()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "worldline",
    version,
    about = "Relativistic action, De Broglie swept area and Nambu-Goto area calculator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate S, A, L, k and the De Broglie radius for one trajectory.
    Eval(EvalArgs),
    /// Check |S| = (m0^2 c^2 / h) A across a family of trajectories.
    Verify(VerifyArgs),
    /// Tabulate De Broglie radius, Lorentz factor and integrand rates against speed.
    Sweep(SweepArgs),
    /// Optimize a fixed-endpoint path for the action or the swept area.
    Optimize(OptimizeArgs),
    /// Nambu-Goto area and action of a worldsheet.
    NambuGoto(NambuGotoArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UnitsArg {
    Si,
    Natural,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Unit system; speeds are fractions of c in natural units, m/s in SI.
    #[arg(long, value_enum, default_value = "natural")]
    pub units: UnitsArg,
    /// Override the Planck constant (SI mode only).
    #[arg(long = "h")]
    pub planck: Option<f64>,
    /// Override the speed of light (SI mode only).
    #[arg(long = "c")]
    pub light: Option<f64>,
    /// Rest mass m0 (comma-separated list accepted by `verify`).
    #[arg(long, default_value = "1")]
    pub mass: String,
    /// Quadrature rule: `simpson:N` or `adaptive:abs,rel[,max_depth]`.
    #[arg(long, default_value = "adaptive")]
    pub quad: String,
    /// Write the data table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn units(&self) -> CliResult<UnitSystem> {
        match self.units {
            UnitsArg::Natural => {
                if self.planck.is_some() || self.light.is_some() {
                    return Err(CliError::input("--h and --c overrides require --units si"));
                }
                Ok(UnitSystem::natural())
            }
            UnitsArg::Si => {
                let d = UnitSystem::si();
                Ok(UnitSystem::si_with(
                    self.planck.unwrap_or(d.h()),
                    self.light.unwrap_or(d.c()),
                )?)
            }
        }
    }

    pub fn masses(&self) -> CliResult<Vec<Particle>> {
        self.mass
            .split(',')
            .map(|s| {
                let m: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| CliError::input(format!("bad mass {s:?}")))?;
                Ok(Particle::new(m)?)
            })
            .collect()
    }

    pub fn particle(&self) -> CliResult<Particle> {
        let masses = self.masses()?;
        match masses.as_slice() {
            [p] => Ok(*p),
            _ => Err(CliError::input("expected a single --mass value")),
        }
    }

    pub fn quadrature(&self) -> CliResult<QuadratureSpec> {
        Ok(self.quad.parse()?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    /// Analytic trajectory x(t), e.g. "0.6*c*t".
    #[arg(long, conflicts_with = "csv")]
    pub expr: Option<String>,
    /// Sampled trajectory as `t,x` CSV (for `verify`: a file or a directory of files).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Start time of an analytic trajectory.
    #[arg(long, default_value = "0")]
    pub t0: f64,
    /// End time of an analytic trajectory.
    #[arg(long, default_value = "1")]
    pub t1: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
    /// Number of sample times in the De Broglie table.
    #[arg(long, default_value = "11")]
    pub samples: usize,
    /// Speed floor of the spatial swept-area form, as a fraction of c.
    #[arg(long = "v-floor", default_value = "1e-3")]
    pub v_floor: f64,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub trajectory: TrajectoryArgs,
    /// Family parameter `name=start:stop:steps` substituted into --expr.
    #[arg(long)]
    pub param: Option<String>,
    /// Largest accepted identity residual.
    #[arg(long, default_value = "1e-6")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Speed range `v=start:stop:steps`, strictly inside (0, c).
    #[arg(long, default_value = "v=0.1:0.9:9")]
    pub param: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Zigzag,
    Line,
}

#[derive(Debug, Clone, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "0")]
    pub t0: f64,
    #[arg(long, default_value = "10")]
    pub t1: f64,
    #[arg(long, default_value = "0")]
    pub x0: f64,
    #[arg(long, default_value = "6")]
    pub x1: f64,
    /// Number of time intervals N.
    #[arg(long, default_value = "32")]
    pub nodes: usize,
    /// `action` (minimize S) or `area` (maximize A).
    #[arg(long, default_value = "action")]
    pub objective: String,
    #[arg(long, value_enum, default_value = "zigzag")]
    pub init: InitArg,
    /// Zig-zag amplitude; defaults to a quarter of the speed headroom times dt.
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Per-segment speed bound as a fraction of c.
    #[arg(long = "v-max", default_value = "0.99")]
    pub v_max: f64,
    #[arg(long = "grad-tol", default_value = "1e-10")]
    pub grad_tol: f64,
    #[arg(long = "max-iter", default_value = "100000")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct NambuGotoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Worldsheet preset: static-string, collapsed-string or reparam-string.
    #[arg(long, conflicts_with = "csv")]
    pub preset: Option<String>,
    /// Worldsheet grid CSV with header `tau,sigma,x0,x1,x2,x3`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value = "1")]
    pub length: f64,
    #[arg(long, default_value = "1")]
    pub duration: f64,
    /// String tension T.
    #[arg(long, default_value = "1")]
    pub tension: f64,
}

/// Parses `name=start:stop:steps` into the name and `steps` evenly spaced values.
pub fn parse_range(spec: &str) -> CliResult<(String, Vec<f64>)> {
    let bad = || {
        CliError::input(format!(
            "bad range {spec:?}, expected name=start:stop:steps"
        ))
    };
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    let values = (0..n)
        .map(|i| match i {
            0 => a,
            i if i == n - 1 => b,
            i => a + (b - a) * (i as f64 / (n - 1) as f64),
        })
        .collect();
    Ok((name.trim().to_string(), values))
}

/// Runs one invocation, writing data to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{e}")?;
                return Ok(());
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::input(
                first.trim_start_matches("error: ").to_string(),
            ));
        }
    };
    match &cli.command {
        Command::Eval(a) => cmd_eval(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Optimize(a) => cmd_optimize(a, out),
        Command::NambuGoto(a) => cmd_nambu_goto(a, out),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let result = run(args, &mut lock).and_then(|()| lock.flush().map_err(CliError::from));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.line());
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let (name, v) = parse_range("a=0.1:0.9:9").unwrap();
        assert_eq!(name, "a");
        assert_eq!(v.len(), 9);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[8], 0.9);
        assert!((v[5] - 0.6).abs() < 1e-15);
        assert_eq!(parse_range("m=2:3:1").unwrap().1, vec![2.0]);
        assert!(parse_range("a=1:2").is_err());
        assert!(parse_range("a=1:2:0").is_err());
        assert!(parse_range("1:2:3").is_err());
    }

    #[test]
    fn error_lines_are_single_line() {
        let e = CliError::input("two\nlines");
        assert_eq!(e.line(), "code=1 reason=two lines");
    }

    #[test]
    fn clap_errors_map_to_input_code() {
        let mut out = Vec::new();
        let e = run(["worldline", "eval", "--bogus"], &mut out).unwrap_err();
        assert_eq!(e.code, EXIT_INPUT);
        let e = run(["worldline"], &mut out).unwrap_err();
        assert_eq!(e.code, EXIT_INPUT);
        assert!(run(["worldline", "--help"], &mut out).is_ok());
    }
}
