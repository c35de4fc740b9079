//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qac_core::analysis::EnergyParams;

#[derive(Parser, Debug)]
#[command(
    name = "qac",
    version,
    about = "Event-triggered exact quantized average consensus: simulator, verifier, and bound analyzer"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Replay the built-in four-node reference network and verify every
    /// per-round variable against the embedded table
    ReplayExample(ReplayArgs),
    /// One seeded run on a random or file-provided digraph
    Single(SingleArgs),
    /// Many independent seeded runs with aggregate statistics
    Batch(BatchArgs),
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Priority file overriding the embedded transmission order
    #[arg(long, value_name = "PATH")]
    pub priorities_file: Option<PathBuf>,
    /// Write the run report as JSON
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write the message trace as JSON Lines
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Digraph file: line 1 holds n, then one "u v" edge per line (1-based)
    #[arg(long, value_name = "PATH", conflicts_with_all = ["nodes", "edge_prob"])]
    pub graph_file: Option<PathBuf>,
    /// Node count for random digraphs
    #[arg(long, default_value_t = 20)]
    pub nodes: usize,
    /// Edge probability for random digraphs, in (0, 1]
    #[arg(long, default_value_t = 0.3)]
    pub edge_prob: f64,
}

#[derive(Args, Debug)]
pub struct ValueArgs {
    /// Comma-separated initial values, one per node
    #[arg(long, value_name = "V,V,...", allow_hyphen_values = true,
          conflicts_with_all = ["values_file", "value_range"])]
    pub values: Option<String>,
    /// File with whitespace-separated initial values
    #[arg(long, value_name = "PATH", conflicts_with = "value_range")]
    pub values_file: Option<PathBuf>,
    /// Draw values uniformly from [LO, HI] (default 0 20)
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true)]
    pub value_range: Option<Vec<i64>>,
    /// Pin the network sum: n-1 values are drawn and the last is solved,
    /// redrawing while it falls outside the range
    #[arg(long, value_name = "SUM", allow_hyphen_values = true)]
    pub value_sum: Option<i64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorityStrategyArg {
    ByNodeIndex,
    SeededShuffle,
}

#[derive(Args, Debug)]
pub struct PriorityArgs {
    /// Strategy for assigning out-edge priorities
    #[arg(long, value_enum, default_value_t = PriorityStrategyArg::SeededShuffle)]
    pub priorities: PriorityStrategyArg,
    /// Explicit priority file: "j neighbor priority" lines, 1-based node
    /// ids, 0-based priority ranks (requires --graph-file)
    #[arg(long, value_name = "PATH")]
    pub priorities_file: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunControlArgs {
    /// Round cap; exceeding it fails the run (default: the worst-case
    /// convergence bound plus 2n)
    #[arg(long)]
    pub max_rounds: Option<u64>,
    /// Silent rounds to execute after quiescence (default 2n)
    #[arg(long)]
    pub confirm_rounds: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EnergyArgs {
    /// Sensing constant, nJ/bit
    #[arg(long, default_value_t = 50.0)]
    pub alpha3: f64,
    /// Processing constant, nJ/bit
    #[arg(long, default_value_t = 5.0)]
    pub alpha4: f64,
    /// Transmit electronics constant, nJ/bit
    #[arg(long, default_value_t = 45.0)]
    pub alpha11: f64,
    /// Transmit amplifier constant, nJ/bit
    #[arg(long, default_value_t = 135.0)]
    pub alpha2: f64,
    /// Uniform transmit distance, meters
    #[arg(long, default_value_t = 1.0)]
    pub distance: f64,
    /// Exponent of the distance term in the amplifier cost
    #[arg(long, default_value_t = 2.0)]
    pub path_loss_exponent: f64,
}

impl EnergyArgs {
    pub fn to_params(&self) -> EnergyParams {
        EnergyParams {
            alpha3: self.alpha3,
            alpha4: self.alpha4,
            alpha11: self.alpha11,
            alpha2: self.alpha2,
            distance: self.distance,
            path_loss_exponent: self.path_loss_exponent,
        }
    }
}

#[derive(Args, Debug)]
pub struct SingleArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Master seed; identical seeds give byte-identical reports
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub values: ValueArgs,
    #[command(flatten)]
    pub priorities: PriorityArgs,
    #[command(flatten)]
    pub control: RunControlArgs,
    #[command(flatten)]
    pub energy: EnergyArgs,
    /// Write the message trace as JSON Lines
    #[arg(long, value_name = "PATH")]
    pub trace: Option<PathBuf>,
    /// Write the run report as JSON
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write the per-round series as CSV
    #[arg(long, value_name = "PATH")]
    pub series_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BatchArgs {
    /// Number of independent seeded runs
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[command(flatten)]
    pub graph: GraphArgs,
    /// Master seed; run r uses seed + r
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub values: ValueArgs,
    #[command(flatten)]
    pub priorities: PriorityArgs,
    #[command(flatten)]
    pub control: RunControlArgs,
    #[command(flatten)]
    pub energy: EnergyArgs,
    /// Write the batch report as JSON
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Write the cross-run mean series as CSV
    #[arg(long, value_name = "PATH")]
    pub series_out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verify_cli() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn parses_a_full_single_invocation() {
        let cli = Cli::try_parse_from([
            "qac",
            "single",
            "--nodes",
            "5",
            "--edge-prob",
            "0.5",
            "--seed",
            "3",
            "--values",
            "1,-2,3,4,5",
            "--priorities",
            "by-node-index",
            "--alpha3",
            "25",
        ])
        .unwrap();
        match cli.command {
            Command::Single(args) => {
                assert_eq!(args.graph.nodes, 5);
                assert_eq!(args.values.values.as_deref(), Some("1,-2,3,4,5"));
                assert_eq!(args.priorities.priorities, PriorityStrategyArg::ByNodeIndex);
                assert_eq!(args.energy.alpha3, 25.0);
            }
            other => panic!("unexpected command {other:?}"),
        }
    }

    #[test]
    fn conflicting_value_sources_are_rejected() {
        assert!(Cli::try_parse_from([
            "qac",
            "single",
            "--values",
            "1,2",
            "--value-range",
            "0",
            "9"
        ])
        .is_err());
        assert!(
            Cli::try_parse_from(["qac", "single", "--graph-file", "g.txt", "--nodes", "5"])
                .is_err()
        );
    }
}
