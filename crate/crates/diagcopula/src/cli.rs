//! Command line interface.
//!
//! ```text
//! diagcopula inspect        --family power --alpha 1.2599 --d 2
//! diagcopula grid           --family plinear --alpha 0.2 --n 201 --out grid.csv
//! diagcopula diagonal-cross --family gaussian --rho -0.95 --out phi.csv
//! diagcopula sample         --family fgm --theta 0.5 --n 10000 --seed 7
//! diagcopula verify         --family fgm --theta 0.5 --tol 1e-6
//! ```
//!
//! Exit status is 0 on success, 1 when `verify` finds a failing check, 2 on
//! usage or input errors and 3 on numerical failures. Errors print a single
//! line `error[<kind>]: <reason>` on standard error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use diagcopula_core::entropy::{entropy_of, feasibility};
use diagcopula_core::verify::VerifyConfig;
use diagcopula_core::{make_family, CopulaModel, DiagonalSection, Error, FamilySpec};

use crate::io::{self, EntropyJson, IoError, SampleJson, VerifyJson};
use crate::par;

/// Default values shared by all subcommands.
pub mod defaults {
    pub const GRID_N: usize = 201;
    pub const SAMPLE_N: usize = 10_000;
    pub const TOL: f64 = 1e-6;
    pub const SEED: u64 = 0;
    pub const D: usize = 2;
    /// Interior grid points per check in `verify`.
    pub const VERIFY_GRID: usize = 21;
    pub const PROBES: usize = 1000;
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "diagcopula",
    version,
    about = "Maximum-entropy copulas with a prescribed diagonal section"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print J, G, the entropy and the feasibility verdict.
    Inspect {
        #[command(flatten)]
        family: FamilyArgs,
        /// Add a Monte Carlo estimate of the entropy from this many samples.
        #[arg(long)]
        mc: Option<usize>,
        #[arg(long, default_value_t = defaults::SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write the density on an n×n grid (bivariate models).
    Grid {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = defaults::GRID_N)]
        n: usize,
        /// Also write the diagonal cross-section to this file.
        #[arg(long)]
        cross: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write t and the density φ(t) = c(t, …, t) along the diagonal.
    DiagonalCross {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = defaults::GRID_N)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw samples.
    Sample {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = defaults::SAMPLE_N)]
        n: usize,
        #[arg(long, default_value_t = defaults::SEED)]
        seed: u64,
        /// Write seed and model fingerprint as JSON to this file.
        #[arg(long)]
        sidecar: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check marginals, diagonal, forced zeros and entropy aggregation.
    Verify {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = defaults::TOL)]
        tol: f64,
        /// Interior grid points per check.
        #[arg(long, default_value_t = defaults::VERIFY_GRID)]
        n: usize,
        #[arg(long, default_value_t = defaults::PROBES)]
        probes: usize,
        #[arg(long, default_value_t = defaults::SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    Plinear,
    Power,
    Fgm,
    Gaussian,
    Tabulated,
}

impl FamilyName {
    pub fn name(self) -> &'static str {
        match self {
            FamilyName::Plinear => "plinear",
            FamilyName::Power => "power",
            FamilyName::Fgm => "fgm",
            FamilyName::Gaussian => "gaussian",
            FamilyName::Tabulated => "tabulated",
        }
    }
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyName,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    /// CSV with header `t,delta` (tabulated family).
    #[arg(long)]
    pub file: Option<PathBuf>,
    #[arg(long, default_value_t = defaults::D)]
    pub d: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    fn line(&self) -> String {
        let (kind, msg) = match self {
            CliError::Usage(m) => ("usage", m),
            CliError::Numeric(m) => ("numeric", m),
        };
        format!(
            "error[{kind}]: {}",
            msg.split_whitespace().collect::<Vec<_>>().join(" ")
        )
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::InvalidTable(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

impl FamilyArgs {
    pub fn spec(&self) -> CliResult<FamilySpec> {
        let given = [
            ("alpha", self.alpha.is_some()),
            ("theta", self.theta.is_some()),
            ("rho", self.rho.is_some()),
            ("file", self.file.is_some()),
        ];
        let (needed, spec) = match self.family {
            FamilyName::Plinear => (
                "alpha",
                self.alpha
                    .map(|alpha| FamilySpec::PiecewiseLinear { alpha }),
            ),
            FamilyName::Power => ("alpha", self.alpha.map(|alpha| FamilySpec::Power { alpha })),
            FamilyName::Fgm => ("theta", self.theta.map(|theta| FamilySpec::Fgm { theta })),
            FamilyName::Gaussian => ("rho", self.rho.map(|rho| FamilySpec::Gaussian { rho })),
            FamilyName::Tabulated => (
                "file",
                match &self.file {
                    Some(p) => Some(FamilySpec::Tabulated {
                        knots: io::read_tabulated_file(p)
                            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
                    }),
                    None => None,
                },
            ),
        };
        if let Some((extra, _)) = given.iter().find(|(name, set)| *set && *name != needed) {
            return Err(CliError::Usage(format!(
                "--{extra} does not apply to family {}",
                self.family.name()
            )));
        }
        spec.ok_or_else(|| {
            CliError::Usage(format!("family {} requires --{needed}", self.family.name()))
        })
    }

    pub fn section(&self) -> CliResult<DiagonalSection> {
        if self.d < 2 {
            return Err(CliError::Usage(format!(
                "--d must be at least 2, got {}",
                self.d
            )));
        }
        Ok(make_family(&self.spec()?, self.d)?)
    }

    /// Builds the model, refusing diagonals with divergent `J`.
    pub fn model(&self) -> CliResult<CopulaModel> {
        let delta = self.section()?;
        let f = feasibility(&delta);
        if !f.feasible {
            return Err(Error::Infeasible(f.reason.unwrap_or_default()).into());
        }
        Ok(CopulaModel::build(delta)?)
    }
}

impl OutputArgs {
    fn writer<'a>(&self, stdout: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?,
            )),
            None => Box::new(stdout),
        })
    }
}

fn create(path: &PathBuf) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| {
        CliError::Usage(format!("{}: {e}", path.display()))
    })?))
}

/// Runs one command; returns the process exit code.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    match cli.command {
        Command::Inspect {
            family,
            mc,
            seed,
            output,
        } => {
            let delta = family.section()?;
            let mut report = entropy_of(&delta)?;
            if let Some(n) = mc {
                if report.feasible {
                    let model = CopulaModel::build(delta.clone())?;
                    report.mc = Some(par::entropy_mc(&model, n, seed)?);
                }
            }
            let json = EntropyJson::new(&report, &delta);
            let mut w = output.writer(stdout)?;
            match output.format.unwrap_or(Format::Json) {
                Format::Json => io::write_json(&mut w, &json)?,
                Format::Csv => io::write_entropy_csv(&mut w, &json)?,
            }
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::Grid {
            family,
            n,
            cross,
            output,
        } => {
            if family.d != 2 {
                return Err(CliError::Usage(
                    "grid export is bivariate; use --d 2 or `sample`".into(),
                ));
            }
            if output.format == Some(Format::Json) {
                return Err(CliError::Usage("grid output is CSV only".into()));
            }
            let model = family.model()?;
            let nodes = io::grid_nodes(n);
            let values = par::density_grid(&model, &nodes);
            let mut w = output.writer(stdout)?;
            io::write_grid(&mut w, &nodes, &values)?;
            w.flush()?;
            if let Some(path) = cross {
                io::write_cross(create(&path)?, &model, &nodes)?;
            }
            Ok(EXIT_OK)
        }
        Command::DiagonalCross { family, n, output } => {
            if output.format == Some(Format::Json) {
                return Err(CliError::Usage("diagonal-cross output is CSV only".into()));
            }
            let model = family.model()?;
            let mut w = output.writer(stdout)?;
            io::write_cross(&mut w, &model, &io::grid_nodes(n))?;
            w.flush()?;
            Ok(EXIT_OK)
        }
        Command::Sample {
            family,
            n,
            seed,
            sidecar,
            output,
        } => {
            let model = family.model()?;
            let batch = par::sample(&model, n, seed)?;
            let meta = io::sidecar(&batch, model.delta());
            let mut w = output.writer(stdout)?;
            match output.format.unwrap_or(Format::Csv) {
                Format::Csv => io::write_samples(&mut w, &batch)?,
                Format::Json => io::write_json(
                    &mut w,
                    &SampleJson {
                        meta,
                        points: batch.rows().collect(),
                    },
                )?,
            }
            w.flush()?;
            if let Some(path) = sidecar {
                io::write_json(create(&path)?, &io::sidecar(&batch, model.delta()))?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            family,
            tol,
            n,
            probes,
            seed,
            output,
        } => {
            if !(tol > 0.0) {
                return Err(CliError::Usage(format!(
                    "--tol must be positive, got {tol}"
                )));
            }
            let model = family.model()?;
            let cfg = VerifyConfig {
                grid_size: n,
                tol,
                probes,
                seed,
                ..VerifyConfig::default()
            };
            let report = par::verify(&model, &cfg);
            let json = VerifyJson::new(&report, model.delta());
            let mut w = output.writer(stdout)?;
            match output.format.unwrap_or(Format::Json) {
                Format::Json => io::write_json(&mut w, &json)?,
                Format::Csv => io::write_verify_csv(&mut w, &json)?,
            }
            w.flush()?;
            Ok(if report.passed() {
                EXIT_OK
            } else {
                EXIT_VERIFY_FAILED
            })
        }
    }
}

/// Parses `argv` (including the program name) and runs it.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let reason = first.strip_prefix("error: ").unwrap_or(first);
            let _ = writeln!(stderr, "{}", CliError::Usage(reason.to_string()).line());
            return EXIT_USAGE;
        }
    };
    match execute(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.line());
            e.exit_code()
        }
    }
}
