use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;

use qac_cli::batch::{run_batch, BatchError, BatchSettings};
use qac_cli::config::{
    BatchArgs, Cli, Command, GraphArgs, PriorityArgs, PriorityStrategyArg, ReplayArgs, SingleArgs,
    ValueArgs,
};
use qac_cli::demo;
use qac_cli::output;
use qac_cli::runner::{resolve_inputs, GraphSource, PrioritySource};
use qac_cli::values::ValueSpec;
use qac_core::digraph::{Digraph, PriorityMap};
use qac_core::engine::{trace_to_jsonl, SimError, SimOptions, Simulation};

/// Exit code 2: the invocation or its input files are unusable.
/// Exit code 1: the run executed but failed verification.
enum AppError {
    Config(anyhow::Error),
    Verification(anyhow::Error),
}

type AppResult<T> = Result<T, AppError>;

fn config_err(e: impl Into<anyhow::Error>) -> AppError {
    AppError::Config(e.into())
}

fn verification_err(e: impl Into<anyhow::Error>) -> AppError {
    AppError::Verification(e.into())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Verification(e)) => {
            eprintln!("verification failure: {e:#}");
            ExitCode::from(1)
        }
        Err(AppError::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::ReplayExample(args) => cmd_replay(args),
        Command::Single(args) => cmd_single(args),
        Command::Batch(args) => cmd_batch(args),
    }
}

fn read_file(path: &Path) -> AppResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(AppError::Config)
}

fn write_file(path: &Path, contents: &str) -> AppResult<()> {
    fs::write(path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(AppError::Config)
}

fn cmd_replay(args: ReplayArgs) -> AppResult<()> {
    let priorities_override = match &args.priorities_file {
        Some(path) => {
            let g = demo::demo_digraph();
            let text = read_file(path)?;
            Some(PriorityMap::parse(&text, &g).map_err(config_err)?)
        }
        None => None,
    };
    let outcome =
        demo::run_replay(priorities_override, args.trace.is_some()).map_err(verification_err)?;

    if let Some(path) = &args.out {
        write_file(path, &outcome.report.to_json_string())?;
    }
    if let Some(path) = &args.trace {
        write_file(path, &trace_to_jsonl(&outcome.trace))?;
    }

    print!("{}", output::render_run_summary(&outcome.report));
    if outcome.passed() {
        println!("replay: PASS");
        Ok(())
    } else {
        for diff in &outcome.cell_diffs {
            eprintln!("cell mismatch: {diff}");
        }
        for problem in &outcome.problems {
            eprintln!("{problem}");
        }
        println!("replay: FAIL");
        Err(verification_err(anyhow!(
            "{} cell mismatches, {} other problems",
            outcome.cell_diffs.len(),
            outcome.problems.len()
        )))
    }
}

fn build_graph_source(args: &GraphArgs) -> AppResult<GraphSource> {
    match &args.graph_file {
        Some(path) => {
            let text = read_file(path)?;
            let g = Digraph::parse(&text).map_err(config_err)?;
            Ok(GraphSource::Fixed(g))
        }
        None => Ok(GraphSource::Random {
            nodes: args.nodes,
            edge_probability: args.edge_prob,
        }),
    }
}

fn build_value_spec(args: &ValueArgs) -> AppResult<ValueSpec> {
    if args.value_sum.is_some() && (args.values.is_some() || args.values_file.is_some()) {
        return Err(config_err(anyhow!(
            "--value-sum only applies to --value-range"
        )));
    }
    if let Some(list) = &args.values {
        let values = list
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<i64>()
                    .with_context(|| format!("invalid value '{tok}'"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(AppError::Config)?;
        return Ok(ValueSpec::Explicit(values));
    }
    if let Some(path) = &args.values_file {
        let text = read_file(path)?;
        let values = text
            .split_whitespace()
            .map(|tok| {
                tok.parse::<i64>()
                    .with_context(|| format!("invalid value '{tok}'"))
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(AppError::Config)?;
        return Ok(ValueSpec::Explicit(values));
    }
    let (lo, hi) = match &args.value_range {
        Some(range) => (range[0], range[1]),
        None => (0, 20),
    };
    Ok(match args.value_sum {
        Some(sum) => ValueSpec::RangeWithSum { lo, hi, sum },
        None => ValueSpec::Range { lo, hi },
    })
}

fn build_priority_source(args: &PriorityArgs, graph: &GraphSource) -> AppResult<PrioritySource> {
    match &args.priorities_file {
        Some(path) => {
            let GraphSource::Fixed(g) = graph else {
                return Err(config_err(anyhow!(
                    "--priorities-file requires --graph-file"
                )));
            };
            let text = read_file(path)?;
            Ok(PrioritySource::Fixed(
                PriorityMap::parse(&text, g).map_err(config_err)?,
            ))
        }
        None => Ok(match args.priorities {
            PriorityStrategyArg::ByNodeIndex => PrioritySource::ByNodeIndex,
            PriorityStrategyArg::SeededShuffle => PrioritySource::SeededShuffle,
        }),
    }
}

fn map_sim_error(e: SimError) -> AppError {
    match e {
        SimError::RoundLimitExceeded { .. } => verification_err(e),
        SimError::ValueCountMismatch { .. } | SimError::ValueOverflow => config_err(e),
    }
}

fn cmd_single(args: SingleArgs) -> AppResult<()> {
    let graph_source = build_graph_source(&args.graph)?;
    let value_spec = build_value_spec(&args.values)?;
    let priority_source = build_priority_source(&args.priorities, &graph_source)?;
    let inputs = resolve_inputs(&graph_source, &priority_source, &value_spec, args.seed)
        .map_err(|reason| config_err(anyhow!(reason)))?;

    let opts = SimOptions {
        max_rounds: args.control.max_rounds,
        confirm_rounds: args.control.confirm_rounds,
        record_trace: args.trace.is_some(),
        energy: args.energy.to_params(),
        ..SimOptions::default()
    };
    let mut sim = Simulation::start_run(&inputs.graph, &inputs.priorities, &inputs.values, opts)
        .map_err(map_sim_error)?;
    let report = sim.run_until_quiescent().map_err(map_sim_error)?;

    if let Some(path) = &args.out {
        write_file(path, &report.to_json_string())?;
    }
    if let Some(path) = &args.trace {
        write_file(path, &trace_to_jsonl(sim.trace()))?;
    }
    if let Some(path) = &args.series_out {
        write_file(path, &output::run_series_csv(&report.series))?;
    }

    print!("{}", output::render_run_summary(&report));
    if report.is_verified() {
        Ok(())
    } else {
        for violation in &report.violations {
            eprintln!("invariant violation: {violation}");
        }
        for flag in &report.compliance.flags {
            eprintln!("bound violation: {flag}");
        }
        Err(verification_err(anyhow!("run failed verification")))
    }
}

fn cmd_batch(args: BatchArgs) -> AppResult<()> {
    let graph_source = build_graph_source(&args.graph)?;
    let value_spec = build_value_spec(&args.values)?;
    let priority_source = build_priority_source(&args.priorities, &graph_source)?;
    let settings = BatchSettings {
        runs: args.runs,
        master_seed: args.seed,
        graph: graph_source,
        priorities: priority_source,
        values: value_spec,
        max_rounds: args.control.max_rounds,
        confirm_rounds: args.control.confirm_rounds,
        energy: args.energy.to_params(),
    };
    let report = run_batch(&settings).map_err(|e| match e {
        BatchError::NoRuns => config_err(e),
        BatchError::RunFailed { .. } => verification_err(e),
    })?;

    if let Some(path) = &args.out {
        write_file(path, &report.to_json_string())?;
    }
    if let Some(path) = &args.series_out {
        write_file(path, &output::batch_series_csv(&report.mean_series))?;
    }
    print!("{}", output::render_batch_summary(&report));
    Ok(())
}
