//! Argument handling for the `grassdyn` binary, kept in the library so it can be driven in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use grassdyn::construction::IndexScheme;
use serde::de::DeserializeOwned;

use crate::config::ScShiftCase;
use crate::{
    configure_threads, load_config, run, CliError, ClaimCheckConfig, Experiment, OrbitDensityConfig, PhiTableConfig,
    SpectrumCirclesConfig, SummabilityConfig, VerifyConstructionConfig, WitnessConfig,
};

#[derive(Parser)]
#[command(name = "grassdyn", version, about = "Orbit experiments and exact construction checks")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON config for the subcommand; flags given alongside override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomised experiments.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Default)]
struct InstanceArgs {
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    scheme: Option<IndexScheme>,
}

#[derive(Subcommand)]
enum Command {
    /// Orbit density probe (graph subspace, given subspace, or projective line).
    OrbitDensity,
    /// Control sequence, f_n bounds and defining-relation closure.
    VerifyConstruction {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        max_n: Option<u64>,
    },
    /// The vanishing prefix of the admissible sequences for p = 2..=max_p.
    ClaimCheck {
        #[arg(long)]
        max_p: Option<u32>,
    },
    /// Exact values of one Φ_δ on T^i e_0.
    PhiTable {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        delta: Option<u64>,
        #[arg(long)]
        max_i: Option<u64>,
    },
    /// Partial sums of |Φ_δ(e_r · e_q)|.
    Summability {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<u64>>,
        /// Also run the criterion report for h = 2..=p.
        #[arg(long)]
        criterion: bool,
    },
    /// Deterministic witnesses: identity-block or sc-shift.
    Witness {
        #[arg(long)]
        case: Option<WitnessCase>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k_sub: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Radii whose circle meets every spectral component.
    SpectrumCircles,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WitnessCase {
    IdentityBlock,
    ScShift,
}

fn base<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, CliError> {
    path.map_or_else(|| Ok(T::default()), load_config)
}

fn apply_instance(p: &mut u32, scheme: &mut IndexScheme, args: &InstanceArgs) {
    *p = args.p.unwrap_or(*p);
    *scheme = args.scheme.unwrap_or(*scheme);
}

fn resolve(cli: &Cli) -> Result<Experiment, CliError> {
    let path = cli.global.config.as_deref();
    let mut exp = match &cli.command {
        Command::OrbitDensity => Experiment::OrbitDensity(base::<OrbitDensityConfig>(path)?),
        Command::VerifyConstruction { instance, max_n } => {
            let mut c: VerifyConstructionConfig = base(path)?;
            apply_instance(&mut c.p, &mut c.scheme, instance);
            c.max_n = max_n.unwrap_or(c.max_n);
            Experiment::VerifyConstruction(c)
        }
        Command::ClaimCheck { max_p } => {
            let mut c: ClaimCheckConfig = base(path)?;
            c.max_p = max_p.unwrap_or(c.max_p);
            Experiment::ClaimCheck(c)
        }
        Command::PhiTable { instance, delta, max_i } => {
            let mut c: PhiTableConfig = base(path)?;
            apply_instance(&mut c.p, &mut c.scheme, instance);
            c.delta = delta.unwrap_or(c.delta);
            c.max_i = max_i.unwrap_or(c.max_i);
            Experiment::PhiTable(c)
        }
        Command::Summability { instance, deltas, radii, criterion } => {
            let mut c: SummabilityConfig = base(path)?;
            apply_instance(&mut c.p, &mut c.scheme, instance);
            if deltas.is_some() {
                c.deltas = deltas.clone();
            }
            if let Some(r) = radii {
                c.radii = r.clone();
            }
            c.criterion |= criterion;
            Experiment::Summability(c)
        }
        Command::Witness { case, n: n_arg, k_sub: k_arg, lambda: l_arg, horizon: h_arg } => {
            let mut c: WitnessConfig = base(path)?;
            match case {
                Some(WitnessCase::ScShift) if !matches!(c, WitnessConfig::ScShift(_)) => {
                    c = WitnessConfig::ScShift(ScShiftCase::default());
                }
                Some(WitnessCase::IdentityBlock) if !matches!(c, WitnessConfig::IdentityBlock(_)) => {
                    c = WitnessConfig::default();
                }
                _ => {}
            }
            match &mut c {
                WitnessConfig::IdentityBlock(w) => {
                    w.n = n_arg.unwrap_or(w.n);
                    w.k_sub = k_arg.unwrap_or(w.k_sub);
                    w.horizon = h_arg.unwrap_or(w.horizon);
                }
                WitnessConfig::ScShift(w) => {
                    w.lambda = l_arg.unwrap_or(w.lambda);
                    w.horizon = h_arg.unwrap_or(w.horizon);
                }
            }
            Experiment::Witness(c)
        }
        Command::SpectrumCircles => Experiment::SpectrumCircles(base::<SpectrumCirclesConfig>(path)?),
    };
    if let Some(s) = cli.global.seed {
        exp.set_seed(s);
    }
    Ok(exp)
}

fn emit(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => writeln!(stdout, "{}", text.trim_end())?,
    }
    Ok(())
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<bool, CliError> {
    configure_threads()?;
    let exp = resolve(cli)?;
    let (report, csv) = run(&exp)?;
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    match cli.global.format {
        Format::Json => emit(cli.global.out.as_deref(), &json, stdout)?,
        Format::Csv => {
            let csv = csv.ok_or_else(|| CliError::Config(format!("{} has no CSV output", exp.name())))?;
            emit(cli.global.out.as_deref(), &csv, stdout)?;
            // The report travels next to the CSV file.
            if let Some(p) = &cli.global.out {
                let mut side = p.clone().into_os_string();
                side.push(".json");
                std::fs::write(side, &json)?;
            }
        }
    }
    Ok(report.pass)
}

/// Parses `args` (program name first) and runs the subcommand. Returns the exit
/// status: 0 when the run passes, 1 when it fails, 2 on a usage or config error.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return 2;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    match execute(&cli, stdout) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(stderr, "grassdyn: {e}");
            2
        }
    }
}
