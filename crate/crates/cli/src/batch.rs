//! Multi-run campaigns: independent seeded runs executed on a worker
//! pool, verified individually, and reduced to aggregate statistics in
//! run order.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use qac_core::analysis::EnergyParams;
use qac_core::engine::{Scenario, SimOptions, Simulation};
use qac_core::exact::ExactFraction;

use crate::runner::{resolve_inputs, GraphSource, PrioritySource};
use crate::values::ValueSpec;

pub const BATCH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("a batch needs at least one run")]
    NoRuns,
    #[error("run {run} (seed {seed}) failed: {reason}")]
    RunFailed {
        run: usize,
        seed: u64,
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct BatchSettings {
    pub runs: usize,
    pub master_seed: u64,
    pub graph: GraphSource,
    pub priorities: PrioritySource,
    pub values: ValueSpec,
    pub max_rounds: Option<u64>,
    pub confirm_rounds: Option<u64>,
    pub energy: EnergyParams,
}

/// Seed of run `run_index` under a master seed.
pub fn run_seed(master_seed: u64, run_index: usize) -> u64 {
    master_seed.wrapping_add(run_index as u64)
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub node_count: usize,
    pub edge_count: usize,
    pub converged_round: u64,
    pub rounds_executed: u64,
    pub total_tx_events: u64,
    pub alpha: u64,
    pub scenario: Scenario,
    /// Observed mean of the terminal per-node estimates (exact).
    pub mean_terminal: ExactFraction,
    pub terminal_y_s: i64,
    pub terminal_z_s: u64,
    /// Transmitting-node count in the final recorded round; always 0 for
    /// a verified run.
    pub final_transmitting_nodes: u32,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MinMaxMean {
    pub min: u64,
    pub max: u64,
    pub mean: f64,
}

impl MinMaxMean {
    fn over(values: impl Iterator<Item = u64> + Clone) -> Self {
        let min = values.clone().min().unwrap_or(0);
        let max = values.clone().max().unwrap_or(0);
        let (sum, count) = values.fold((0u128, 0u64), |(s, c), v| (s + v as u128, c + 1));
        MinMaxMean {
            min,
            max,
            mean: if count == 0 {
                0.0
            } else {
                sum as f64 / count as f64
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchAggregates {
    pub total_transmissions: MinMaxMean,
    pub convergence_rounds: MinMaxMean,
}

/// One row of the cross-run mean series. Runs shorter than the longest
/// are padded with their terminal values (and zero transmitting nodes).
#[derive(Debug, Clone, Serialize)]
pub struct MeanSeriesRow {
    pub round: u64,
    pub mean_state: f64,
    pub mean_cumulative_tx_events: f64,
    pub mean_transmitting_nodes: f64,
}

/// Context numbers for 20-node random-digraph campaigns, printed beside
/// the observed statistics for orientation. Never asserted: the random
/// graph model behind them is not pinned down.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceEnvelope {
    pub total_transmissions: MinMaxMean,
    pub convergence_rounds: MinMaxMean,
}

pub fn reference_20_node_envelope() -> ReferenceEnvelope {
    ReferenceEnvelope {
        total_transmissions: MinMaxMean {
            min: 103,
            max: 368,
            mean: 240.547,
        },
        convergence_rounds: MinMaxMean {
            min: 5,
            max: 209,
            mean: 103.875,
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub schema_version: u32,
    pub runs: usize,
    pub master_seed: u64,
    pub node_count: Option<usize>,
    pub edge_probability: Option<f64>,
    pub aggregates: BatchAggregates,
    pub mean_series: Vec<MeanSeriesRow>,
    pub reference_20_node: Option<ReferenceEnvelope>,
    pub run_summaries: Vec<RunSummary>,
}

impl BatchReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

struct RunOutcome {
    summary: RunSummary,
    series: Vec<(f64, u64, u32)>,
}

fn execute_run(settings: &BatchSettings, run_index: usize) -> Result<RunOutcome, BatchError> {
    let seed = run_seed(settings.master_seed, run_index);
    let fail = |reason: String| BatchError::RunFailed {
        run: run_index,
        seed,
        reason,
    };

    let inputs = resolve_inputs(
        &settings.graph,
        &settings.priorities,
        &settings.values,
        seed,
    )
    .map_err(fail)?;
    let opts = SimOptions {
        max_rounds: settings.max_rounds,
        confirm_rounds: settings.confirm_rounds,
        energy: settings.energy,
        ..SimOptions::default()
    };
    let mut sim = Simulation::start_run(&inputs.graph, &inputs.priorities, &inputs.values, opts)
        .map_err(|e| BatchError::RunFailed {
            run: run_index,
            seed,
            reason: e.to_string(),
        })?;
    let report = sim
        .run_until_quiescent()
        .map_err(|e| BatchError::RunFailed {
            run: run_index,
            seed,
            reason: e.to_string(),
        })?;

    if !report.is_verified() {
        let mut reasons = Vec::new();
        if !report.exactness_verified {
            reasons.push("terminal states are not the exact average".to_string());
        }
        reasons.extend(
            report
                .violations
                .iter()
                .map(|v| format!("invariant violation: {v}")),
        );
        reasons.extend(
            report
                .compliance
                .flags
                .iter()
                .map(|f| format!("bound violation: {f}")),
        );
        return Err(BatchError::RunFailed {
            run: run_index,
            seed,
            reason: reasons.join("; "),
        });
    }

    let last = report
        .series
        .last()
        .expect("a run records at least one round");
    let summary = RunSummary {
        run: run_index,
        seed,
        node_count: report.node_count,
        edge_count: report.edge_count,
        converged_round: report.converged_round,
        rounds_executed: report.rounds_executed,
        total_tx_events: report.total_tx_events,
        alpha: report.alpha,
        scenario: report.scenario,
        mean_terminal: last.mean_state.clone(),
        terminal_y_s: report.terminal_states[0].y_s,
        terminal_z_s: report.terminal_states[0].z_s,
        final_transmitting_nodes: last.transmitting_nodes,
    };
    let series = report
        .series
        .iter()
        .map(|row| {
            (
                row.mean_state_real,
                row.cumulative_tx_events,
                row.transmitting_nodes,
            )
        })
        .collect();
    Ok(RunOutcome { summary, series })
}

/// Executes `runs` independent seeded runs in parallel. Every run must
/// individually verify (exactness, quiescence, invariants, bounds); the
/// first failing run aborts the batch with its diagnostic. Aggregation
/// is a deterministic reduction in run order.
pub fn run_batch(settings: &BatchSettings) -> Result<BatchReport, BatchError> {
    if settings.runs == 0 {
        return Err(BatchError::NoRuns);
    }
    let outcomes: Vec<Result<RunOutcome, BatchError>> = (0..settings.runs)
        .into_par_iter()
        .map(|i| execute_run(settings, i))
        .collect();
    let mut runs = Vec::with_capacity(settings.runs);
    for outcome in outcomes {
        runs.push(outcome?);
    }

    let aggregates = BatchAggregates {
        total_transmissions: MinMaxMean::over(runs.iter().map(|r| r.summary.total_tx_events)),
        convergence_rounds: MinMaxMean::over(runs.iter().map(|r| r.summary.converged_round)),
    };

    let longest = runs.iter().map(|r| r.series.len()).max().unwrap_or(0);
    let mut mean_series = Vec::with_capacity(longest);
    for k in 0..longest {
        let mut state = 0.0;
        let mut tx = 0.0;
        let mut transmitting = 0.0;
        for run in &runs {
            // past its end a run sits at its terminal values, silent
            let (s, t, a) = match run.series.get(k) {
                Some(&row) => row,
                None => {
                    let &(s, t, _) = run.series.last().expect("non-empty series");
                    (s, t, 0)
                }
            };
            state += s;
            tx += t as f64;
            transmitting += a as f64;
        }
        let count = runs.len() as f64;
        mean_series.push(MeanSeriesRow {
            round: k as u64,
            mean_state: state / count,
            mean_cumulative_tx_events: tx / count,
            mean_transmitting_nodes: transmitting / count,
        });
    }

    let (node_count, edge_probability) = match settings.graph {
        GraphSource::Random {
            nodes,
            edge_probability,
        } => (Some(nodes), Some(edge_probability)),
        GraphSource::Fixed(ref g) => (Some(g.node_count()), None),
    };
    let reference_20_node = (node_count == Some(20)).then(reference_20_node_envelope);

    Ok(BatchReport {
        schema_version: BATCH_SCHEMA_VERSION,
        runs: settings.runs,
        master_seed: settings.master_seed,
        node_count,
        edge_probability,
        aggregates,
        mean_series,
        reference_20_node,
        run_summaries: runs.into_iter().map(|r| r.summary).collect(),
    })
}
