use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qclock_core::Units;

mod commands;
mod config;
mod error;
mod output;
mod verify;

use config::{RunConfig, SweepScale, SweepVariable};
use error::CliError;
use output::{render, Format, Output};

/// Quantum time-of-arrival calculator.
#[derive(Parser, Debug)]
#[command(name = "qclock", version, about)]
struct Cli {
    /// Unit system of dimensional inputs (SI: m, J, kg, J·s).
    #[arg(long, global = true, value_enum)]
    units: Option<UnitsArg>,
    /// JSON run configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Residual threshold for solve-phase and imprint-demo checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum UnitsArg {
    Si,
    Natural,
}

impl From<UnitsArg> for Units {
    fn from(u: UnitsArg) -> Self {
        match u {
            UnitsArg::Si => Units::Si,
            UnitsArg::Natural => Units::Natural,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for phase coefficients cancelling the leading corrections.
    SolvePhase(SolvePhaseArgs),
    /// Leading correction factors over a sweep in kσ or energy.
    Qfactor(QfactorArgs),
    /// Expected arrival time, exact and/or by the truncated ℏ-series.
    Toa(ToaArgs),
    /// Arrival-time distribution on a τ grid.
    Dist(DistArgs),
    /// Imprint a phase with an impulsive kick and compare with the phased packet.
    ImprintDemo(ImprintArgs),
    /// Run the invariant suite and print a pass/fail report.
    Verify,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PacketArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<f64>,
    /// Kinetic energy of the carrier.
    #[arg(long, allow_hyphen_values = true)]
    pub e0: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Dimensionless carrier kσ (natural units with σ = 1); needs --q0-over-sigma.
    #[arg(long, conflicts_with_all = ["sigma", "q0", "e0", "mu", "hbar"], requires = "q0_over_sigma")]
    pub k_sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q0_over_sigma: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PhaseArgs {
    /// Phase term PARITY:L:M:COEF, e.g. odd:0:1:0.16; repeatable.
    #[arg(long = "phase", value_name = "PARITY:L:M:COEF", allow_hyphen_values = true)]
    pub terms: Vec<String>,
    /// Coefficient of the odd (0,1) term.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "terms")]
    pub a: Option<f64>,
    /// Coefficient of the even (0,1) term.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "terms")]
    pub b: Option<f64>,
    /// Solve the phase for this cancellation order over --basis.
    #[arg(long, conflicts_with_all = ["terms", "a", "b"])]
    pub cancel_order: Option<usize>,
    /// Basis term PARITY:L:M; repeatable.
    #[arg(long, value_name = "PARITY:L:M")]
    pub basis: Vec<String>,
    /// Fix a basis coefficient, INDEX=VALUE; repeatable.
    #[arg(long, value_name = "INDEX=VALUE", allow_hyphen_values = true)]
    pub pin: Vec<String>,
}

#[derive(Args, Debug)]
pub struct SolvePhaseArgs {
    /// Even-term coefficient b (the two-term problem).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q0_over_sigma: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<f64>,
    #[arg(long, value_enum, default_value = "closed-form")]
    pub method: MethodArg,
    /// Cancellation order for the general solver (1 to 3).
    #[arg(long)]
    pub order: Option<usize>,
    /// Basis term PARITY:L:M for the general solver; repeatable.
    #[arg(long, value_name = "PARITY:L:M")]
    pub basis: Vec<String>,
    /// Fix a basis coefficient, INDEX=VALUE; repeatable.
    #[arg(long, value_name = "INDEX=VALUE", allow_hyphen_values = true)]
    pub pin: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    ClosedForm,
    Numeric,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub variable: Option<SweepVariable>,
    #[arg(long)]
    pub min: Option<f64>,
    #[arg(long)]
    pub max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, value_enum)]
    pub scale: Option<SweepScale>,
}

#[derive(Args, Debug)]
pub struct QfactorArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub q0_over_sigma: Option<f64>,
    /// Packet width, needed for energy sweeps and to form q0/σ from --q0.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub hbar: Option<f64>,
    #[command(flatten)]
    pub phase: PhaseArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToaMethod {
    Exact,
    Asymptotic,
    Both,
}

#[derive(Args, Debug)]
pub struct ToaArgs {
    #[command(flatten)]
    pub packet: PacketArgs,
    #[command(flatten)]
    pub phase: PhaseArgs,
    #[arg(long, value_enum, default_value = "both")]
    pub method: ToaMethod,
    /// Highest ℏ order scanned for the smallest term.
    #[arg(long, default_value_t = qclock_core::corrections::DEFAULT_MAX_ORDER)]
    pub max_order: usize,
    /// Sum exactly through this ℏ order instead of truncating at the smallest term.
    #[arg(long)]
    pub fixed_order: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DistArgs {
    #[command(flatten)]
    pub packet: PacketArgs,
    #[command(flatten)]
    pub phase: PhaseArgs,
    /// Arrival point X.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub arrival: f64,
    /// Grid points (default 2001).
    #[arg(long)]
    pub grid_points: Option<usize>,
    /// Grid half-width in units of σ/v0 around the classical arrival (default 5, widened once if needed).
    #[arg(long)]
    pub half_width: Option<f64>,
    /// Also write fwhm, first_moment, grid_mass and fluctuation_ratio as JSON,
    /// next to --out with a .fwhm.json extension unless --fwhm-out is given.
    #[arg(long)]
    pub fwhm: bool,
    #[arg(long, value_name = "PATH")]
    pub fwhm_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImprintArgs {
    #[command(flatten)]
    pub packet: PacketArgs,
    #[command(flatten)]
    pub phase: PhaseArgs,
    /// Kick strength γ.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub gamma: f64,
    /// Sample count of the position grid.
    #[arg(long, default_value_t = 1601)]
    pub samples: usize,
    /// Grid half-extent in units of σ.
    #[arg(long, default_value_t = 10.0)]
    pub extent: f64,
}

/// Global settings after merging flags with the config file.
pub struct Context {
    pub units: Units,
    pub config: RunConfig,
    pub tol: Option<f64>,
}

struct Invocation {
    format: Format,
    path: Option<PathBuf>,
    result: Result<Output, CliError>,
}

fn run(cli: &Cli) -> Invocation {
    let config = match &cli.config {
        Some(p) => match RunConfig::load(p) {
            Ok(c) => c,
            Err(e) => return Invocation { format: Format::Json, path: cli.out.clone(), result: Err(e) },
        },
        None => RunConfig::default(),
    };
    let output = config.output.clone();
    let path = cli.out.clone().or_else(|| output.as_ref().and_then(|o| o.path.clone()).map(PathBuf::from));
    let default_format = match cli.command {
        Command::Qfactor(_) | Command::Dist(_) => Format::Csv,
        _ => Format::Json,
    };
    let format = cli.format.or(output.and_then(|o| o.format)).unwrap_or(default_format);
    let units = cli.units.map(Units::from).or(config.units).unwrap_or_default();
    let ctx = Context { units, config, tol: cli.tol };
    let result = match &cli.command {
        Command::SolvePhase(a) => commands::solve_phase(&ctx, a),
        Command::Qfactor(a) => commands::qfactor(&ctx, a),
        Command::Toa(a) => commands::toa(&ctx, a),
        Command::Dist(a) => commands::dist(&ctx, a, path.as_deref()),
        Command::ImprintDemo(a) => commands::imprint_demo(&ctx, a),
        Command::Verify => verify::run(),
    };
    Invocation { format, path, result }
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Numerical(e.to_string()))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Invocation { format, path, result } = run(&cli);
    let (report, failure) = match result {
        Ok(o) => (Some(o), None),
        Err(e) => {
            let code = e.exit_code();
            let message = e.message().to_owned();
            (e.into_report(), Some((code, message)))
        }
    };
    if let Some(o) = report {
        if let Err(e) = emit(&render(&o, format), path.as_deref()) {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.exit_code());
        }
    }
    match failure {
        None => ExitCode::SUCCESS,
        Some((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
