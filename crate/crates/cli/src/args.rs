//! Command-line flags. Every value flag is also a config-file key, and
//! flags override values read from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::spec::{parse_config_text, Command, Pairs, RunSpec};

#[derive(Debug, Parser)]
#[command(name = "gmwb", version, about = "Prices GMWB variable annuities and solves for fair fees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Contract value at a given fee.
    Price(RunArgs),
    /// Fee at which the contract is worth its premium.
    Fee(RunArgs),
    /// Reproduce a built-in fee table.
    Table(RunArgs),
    /// Static fair fee by Monte Carlo next to the quadrature fee.
    McValidate(RunArgs),
}

impl CliCommand {
    pub fn split(&self) -> (Command, &RunArgs) {
        match self {
            CliCommand::Price(a) => (Command::Price, a),
            CliCommand::Fee(a) => (Command::Fee, a),
            CliCommand::Table(a) => (Command::Table, a),
            CliCommand::McValidate(a) => (Command::McValidate, a),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// key=value file; flags given here take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// static | dynamic
    #[arg(long)]
    pub mode: Option<String>,
    /// density | moment-matched
    #[arg(long)]
    pub variant: Option<String>,
    /// Annual contractual withdrawal rate, e.g. 10%.
    #[arg(long = "g", allow_hyphen_values = true)]
    pub g: Option<String>,
    /// Maturity in years (1/g), e.g. 10 or 10y.
    #[arg(long = "T", allow_hyphen_values = true)]
    pub maturity: Option<String>,
    /// Withdrawals per year.
    #[arg(long = "Nw")]
    pub nw: Option<String>,
    /// Penalty on excess withdrawals, e.g. 10%.
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Risk-free rate, e.g. 5%.
    #[arg(long = "r", allow_hyphen_values = true)]
    pub r: Option<String>,
    /// Volatility, e.g. 20%.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    /// Annual fee on the wealth account, e.g. 136bp.
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Premium W(0); fees do not depend on it.
    #[arg(long = "W0", allow_hyphen_values = true)]
    pub premium: Option<String>,
    /// Log-wealth grid segments.
    #[arg(long = "M")]
    pub m: Option<String>,
    /// Guarantee levels (dynamic mode).
    #[arg(long = "J")]
    pub j: Option<String>,
    /// Quadrature order.
    #[arg(long = "q")]
    pub q: Option<String>,
    /// Monte Carlo paths, antithetic pairs included.
    #[arg(long)]
    pub paths: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// csv | json | text
    #[arg(long)]
    pub format: Option<String>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<String>,
    /// Built-in table identifier.
    #[arg(long)]
    pub id: Option<String>,
    /// Comma-separated 1-based table rows to run.
    #[arg(long)]
    pub rows: Option<String>,
    /// on | off; off leaves runtime columns blank for byte-stable output.
    #[arg(long)]
    pub timing: Option<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    pub dry_run: bool,
}

impl RunArgs {
    /// Flags that were given, as config keys.
    pub fn pairs(&self) -> Pairs {
        [
            ("mode", &self.mode),
            ("variant", &self.variant),
            ("g", &self.g),
            ("T", &self.maturity),
            ("Nw", &self.nw),
            ("beta", &self.beta),
            ("r", &self.r),
            ("sigma", &self.sigma),
            ("alpha", &self.alpha),
            ("W0", &self.premium),
            ("M", &self.m),
            ("J", &self.j),
            ("q", &self.q),
            ("paths", &self.paths),
            ("seed", &self.seed),
            ("format", &self.format),
            ("output", &self.output),
            ("id", &self.id),
            ("rows", &self.rows),
            ("timing", &self.timing),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
        .collect()
    }

    /// Config file values overlaid with the flags, resolved for `command`.
    pub fn resolve(&self, command: Command) -> Result<RunSpec, CliError> {
        let mut pairs = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::usage("config", format!("{}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => Pairs::new(),
        };
        pairs.extend(self.pairs());
        RunSpec::resolve(Some(command), &pairs)
    }
}
