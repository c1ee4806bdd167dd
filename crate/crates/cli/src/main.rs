//! qmoddev: exact finite-blocklength hypothesis-testing and channel-coding
//! computations with moderate-deviation predictions.

mod commands;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit codes: 0 success, 2 validation failure, 3 infeasible mode or cap
/// exceeded, 4 numerical non-convergence.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: msg.into(),
        }
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: msg.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        CliError {
            code: 4,
            message: msg.into(),
        }
    }
}

impl From<qmoddev_core::qstate::QStateError> for CliError {
    fn from(e: qmoddev_core::qstate::QStateError) -> Self {
        use qmoddev_core::qstate::QStateError::*;
        match e {
            DimensionCapExceeded { .. } => CliError::infeasible(e.to_string()),
            NumericalFailure { .. } => CliError::numerical(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<qmoddev_core::nsdist::NsDistError> for CliError {
    fn from(e: qmoddev_core::nsdist::NsDistError) -> Self {
        use qmoddev_core::nsdist::NsDistError::*;
        match e {
            State(inner) => inner.into(),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<qmoddev_core::tails::TailsError> for CliError {
    fn from(e: qmoddev_core::tails::TailsError) -> Self {
        use qmoddev_core::tails::TailsError::*;
        match e {
            SupportCapExceeded { .. } => CliError::infeasible(e.to_string()),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<qmoddev_core::htd::HtdError> for CliError {
    fn from(e: qmoddev_core::htd::HtdError) -> Self {
        use qmoddev_core::htd::HtdError::*;
        match e {
            BisectionFailure { .. } => CliError::numerical(e.to_string()),
            State(inner) => inner.into(),
            Pair(inner) => inner.into(),
            Tails(inner) => inner.into(),
            EpsilonOutOfRange(_) => CliError::validation(e.to_string()),
            ModeInfeasible(_) => CliError::infeasible(e.to_string()),
        }
    }
}

impl From<qmoddev_core::channel::ChannelError> for CliError {
    fn from(e: qmoddev_core::channel::ChannelError) -> Self {
        use qmoddev_core::channel::ChannelError::*;
        match e {
            NonConvergence { .. } | LPInfeasible { .. } => CliError::numerical(e.to_string()),
            ModeInfeasible(_) => CliError::infeasible(e.to_string()),
            State(inner) => inner.into(),
            Pair(inner) => inner.into(),
            Htd(inner) => inner.into(),
            Tails(inner) => inner.into(),
            _ => CliError::validation(e.to_string()),
        }
    }
}

impl From<qmoddev_core::moddev::ModDevError> for CliError {
    fn from(e: qmoddev_core::moddev::ModDevError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::validation(format!("io: {e}"))
    }
}

#[derive(Parser)]
#[command(
    name = "qmoddev",
    about = "Finite-blocklength hypothesis testing and c-q channel coding in the moderate deviations regime",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Log base for information quantities (rates, divergences)
    #[arg(long, global = true, default_value = "2", value_parser = ["2", "e"])]
    log_base: String,

    /// Output path (stdout when omitted)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format
    #[arg(long, global = true, default_value = "csv", value_parser = ["csv", "json"])]
    format: String,

    /// Worker threads for sweeps (results are thread-count invariant)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Tolerance overrides, e.g. --tol psd_tol=1e-8 (repeatable)
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol_overrides: Vec<String>,

    /// Bridge constant between hypothesis-testing and information-spectrum
    /// divergences (calibrated default)
    #[arg(long = "K", global = true)]
    bridge_k: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Divergence statistics, cumulant bounds and exact hypothesis-testing
    /// divergences for a pair of states
    States {
        rho: PathBuf,
        sigma: PathBuf,
        /// Error levels, e.g. 0.1,0.01
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
        /// Block lengths: "1..8", "2^4..2^12" or a comma list
        #[arg(long)]
        n: Option<String>,
        /// Moderate sequence c,t for the rate predictions
        #[arg(long)]
        seq: Option<String>,
        /// Accept pairs with rho not dominated by sigma
        #[arg(long)]
        allow_infinite_llr: bool,
    },
    /// Capacity, dispersions and finite-n achievability/converse sweep
    Channel {
        channel: PathBuf,
        /// Moderate sequence c,t driving eps_n = exp(-n a_n^2)
        #[arg(long)]
        seq: Option<String>,
        /// Block lengths for the sweep
        #[arg(long)]
        n: Option<String>,
        /// Write the full analysis JSON here as well
        #[arg(long)]
        analysis_out: Option<PathBuf>,
        /// Converse type search: auto, full or restricted
        #[arg(long, default_value = "auto", value_parser = ["auto", "full", "restricted"])]
        converse_search: String,
    },
    /// Exact tails against Chernoff/Berry-Esseen-type bounds and the
    /// moderate-deviation reference
    Tails {
        pair: PathBuf,
        /// Moderate sequence c,t giving the deviation t_n = c n^{-t}
        #[arg(long)]
        seq: String,
        /// Block lengths
        #[arg(long)]
        n: String,
        #[arg(long, default_value_t = 1.0)]
        kappa1: f64,
        #[arg(long, default_value_t = 1.0)]
        kappa2: f64,
        /// Variance-slack parameter of the Chernoff bound
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
    },
    /// Regime classification and prediction tables
    Regimes {
        /// Classify a rate offset: const-below | power-below:T | sqrt |
        /// power-above:T | const-above
        #[arg(long)]
        classify: Option<String>,
        /// Declared error behaviour to cross-check against the table
        #[arg(long)]
        error_behavior: Option<String>,
        /// Moderate sequence c,t for the prediction table
        #[arg(long)]
        seq: Option<String>,
        #[arg(long)]
        n: Option<String>,
        /// Channel file for exact achievability/converse columns
        #[arg(long)]
        channel: Option<PathBuf>,
        /// Capacity in the chosen base (alternative to --channel)
        #[arg(long)]
        capacity: Option<f64>,
        /// Min-dispersion in the chosen base squared
        #[arg(long)]
        vmin: Option<f64>,
        /// Max-dispersion in the chosen base squared
        #[arg(long)]
        vmax: Option<f64>,
    },
    /// Reversing-transform checks on tabulated function pairs
    ReverseCheck {
        /// JSON file {"domain": [...], "a": [...], "b": [...]}
        #[arg(long)]
        pair_file: Option<PathBuf>,
        /// Level a for the check
        #[arg(long)]
        a: Option<f64>,
        /// Offset delta > 0
        #[arg(long)]
        delta: Option<f64>,
        /// Run this many random tabulated pairs instead
        #[arg(long)]
        random: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut tol = qmoddev_core::Tolerances::default();
    for ov in &cli.tol_overrides {
        let (name, value) = ov
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("bad --tol override: {ov}")))?;
        let value: f64 = value
            .parse()
            .map_err(|_| CliError::validation(format!("bad --tol value: {ov}")))?;
        if !tol.set_by_name(name, value) {
            return Err(CliError::validation(format!("unknown tolerance: {name}")));
        }
    }
    if let Some(k) = cli.bridge_k {
        if !(k >= 1.0) {
            return Err(CliError::validation(format!("--K must be >= 1, got {k}")));
        }
        tol.bridge_k = k;
    }
    let ctx = commands::Ctx {
        base: if cli.log_base == "2" {
            qmoddev_core::nsdist::LogBase::Two
        } else {
            qmoddev_core::nsdist::LogBase::E
        },
        format: if cli.format == "json" {
            output::Format::Json
        } else {
            output::Format::Csv
        },
        out: cli.out.clone(),
        threads: cli.threads,
        tol,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::validation(format!("thread pool: {e}")))?;

    pool.install(|| match cli.command {
        Command::States {
            rho,
            sigma,
            eps,
            n,
            seq,
            allow_infinite_llr,
        } => commands::cmd_states(&ctx, &rho, &sigma, &eps, n.as_deref(), seq.as_deref(), allow_infinite_llr),
        Command::Channel {
            channel,
            seq,
            n,
            analysis_out,
            converse_search,
        } => commands::cmd_channel(
            &ctx,
            &channel,
            seq.as_deref(),
            n.as_deref(),
            analysis_out.as_deref(),
            &converse_search,
        ),
        Command::Tails {
            pair,
            seq,
            n,
            kappa1,
            kappa2,
            eta,
        } => commands::cmd_tails(&ctx, &pair, &seq, &n, kappa1, kappa2, eta),
        Command::Regimes {
            classify,
            error_behavior,
            seq,
            n,
            channel,
            capacity,
            vmin,
            vmax,
        } => commands::cmd_regimes(
            &ctx,
            classify.as_deref(),
            error_behavior.as_deref(),
            seq.as_deref(),
            n.as_deref(),
            channel.as_deref(),
            capacity,
            vmin,
            vmax,
        ),
        Command::ReverseCheck {
            pair_file,
            a,
            delta,
            random,
            seed,
        } => commands::cmd_reverse_check(&ctx, pair_file.as_deref(), a, delta, random, seed),
    })
}
