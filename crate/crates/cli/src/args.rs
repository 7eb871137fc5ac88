use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use grs_core::Formulation;

#[derive(Parser, Debug)]
#[command(
    name = "grs",
    version,
    about = "Plan the repair order of a damaged power network and check it in AC",
    after_help = "Exit codes: 0 success, 1 infeasible, 2 input error, 3 solver limit.\n\
                  Set GRS_LOG (error, warn, info, debug, trace) for diagnostics on stderr.\n\
                  File formats are described in docs/schemas.md."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Read a Matpower case and write the per-unit network as JSON.
    Parse {
        #[arg(long)]
        case: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Smallest set of repairs that restores full demand.
    Mrsp {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Write the optimisation model in LP format before solving.
        #[arg(long, value_name = "FILE")]
        dump_lp: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Repair order that minimises energy not served; writes the plan.
    Rop {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        horizon: HorizonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Write the optimisation model in LP format before solving.
        #[arg(long, value_name = "FILE")]
        dump_lp: Option<PathBuf>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Replay a plan in AC and report true against estimated ENS.
    Redispatch {
        #[command(flatten)]
        input: InputArgs,
        /// Plan written by `rop`, or a `pipeline` / `heuristic` result.
        #[arg(long)]
        plan: PathBuf,
        /// Period length in hours.
        #[arg(long, default_value_t = 1.0)]
        period_hours: f64,
        /// Count the post-event period in ENS totals.
        #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
        count_initial_period: bool,
        /// Report format.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// ROP (optionally after MRSP) followed by AC replay.
    Pipeline {
        #[command(flatten)]
        input: BatchInputArgs,
        #[command(flatten)]
        horizon: HorizonArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Restrict repairs to a minimum restoration set first.
        #[arg(long)]
        mrsp: bool,
        #[command(flatten)]
        out: ResultOutputArgs,
    },
    /// Largest-capability-first repair order evaluated in AC.
    Heuristic {
        #[command(flatten)]
        input: BatchInputArgs,
        #[command(flatten)]
        horizon: HorizonArgs,
        #[command(flatten)]
        out: ResultOutputArgs,
    },
    /// Seeded random damage scenario, optionally confined to an area.
    GenDamage {
        #[arg(long)]
        case: PathBuf,
        /// Comma-separated bus ids and ranges (e.g. `1-30,113,115`).
        #[arg(long, value_name = "BUS-LIST", conflicts_with = "area_id")]
        area: Option<String>,
        /// Matpower area number (bus column 7); needs a `.m` case.
        #[arg(long, value_name = "N")]
        area_id: Option<usize>,
        /// Share of eligible components damaged per class.
        #[arg(long)]
        fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Component classes to damage.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Kind::Branch, Kind::Gen])]
        kinds: Vec<Kind>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Matpower `.m` case or network JSON from `parse`.
    #[arg(long)]
    pub case: PathBuf,
    /// Damage scenario JSON: {"bus":[..],"branch":[..],"gen":[..]}.
    #[arg(long)]
    pub damage: PathBuf,
}

#[derive(Args, Debug)]
pub struct BatchInputArgs {
    /// Matpower `.m` case or network JSON from `parse`.
    #[arg(long)]
    pub case: PathBuf,
    /// Damage scenario JSON.
    #[arg(
        long,
        required_unless_present = "scenarios",
        conflicts_with = "scenarios"
    )]
    pub damage: Option<PathBuf>,
    /// Directory of damage scenarios (`*.json`), run concurrently; results go
    /// to `--out-dir` as `<scenario>.json`.
    #[arg(long, value_name = "DIR", requires = "out_dir")]
    pub scenarios: Option<PathBuf>,
    /// Maximum concurrent scenario runs (default: available cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct HorizonArgs {
    /// Restoration periods K after the post-event period.
    #[arg(long, default_value_t = 3)]
    pub periods: usize,
    /// Period length in hours.
    #[arg(long, default_value_t = 1.0)]
    pub period_hours: f64,
    /// Count the post-event period in ENS totals.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    pub count_initial_period: bool,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = FormulationArg::Dc)]
    pub formulation: FormulationArg,
    /// Relative optimality gap at which branch and bound stops.
    #[arg(long)]
    pub gap: Option<f64>,
    /// Wall-clock limit for each solve, in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub time_limit: Option<f64>,
    /// Branch-and-bound node limit for each solve.
    #[arg(long)]
    pub node_limit: Option<usize>,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ResultOutputArgs {
    /// Result JSON file (default: stdout).
    #[arg(long, conflicts_with = "out_dir")]
    pub out: Option<PathBuf>,
    /// Per-period ENS CSV file.
    #[arg(long, value_name = "FILE", conflicts_with = "out_dir")]
    pub csv: Option<PathBuf>,
    /// Output directory for batch mode.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Print stage wall-clock times to stderr.
    #[arg(long)]
    pub timings: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormulationArg {
    Dc,
    Soc,
}

impl From<FormulationArg> for Formulation {
    fn from(f: FormulationArg) -> Self {
        match f {
            FormulationArg::Dc => Formulation::Dc,
            FormulationArg::Soc => Formulation::Soc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Bus,
    Branch,
    Gen,
}
