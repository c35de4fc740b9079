//! Human-readable summaries and CSV series for external plotting.

use std::fmt::Write as _;

use qac_core::engine::{RoundMetrics, RunReport};

use crate::batch::{BatchReport, MeanSeriesRow, MinMaxMean};

pub fn render_run_summary(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "digraph: {} nodes, {} edges, max in-degree {}",
        report.node_count, report.edge_count, report.max_in_degree
    );
    let _ = writeln!(
        s,
        "initial sum {}; exact average {} = {}",
        report.initial_sum,
        report.exact_average,
        report.exact_average.to_f64()
    );
    let _ = writeln!(
        s,
        "converged at round {}; {} rounds executed ({} confirm); quiescent: {}",
        report.converged_round, report.rounds_executed, report.confirm_rounds, report.quiescent
    );
    let _ = writeln!(
        s,
        "scenario: {:?} (alpha = {}); terminal estimate {} at every node",
        report.scenario, report.alpha, report.terminal_states[0].q_s
    );
    let c = &report.compliance;
    let _ = writeln!(
        s,
        "transmissions: {} events total; per-node max {} (bound {})",
        report.total_tx_events, c.max_observed_tx, c.tx_bound
    );
    let _ = writeln!(
        s,
        "evaluations: per-node max {} (bound {}); convergence bound {} rounds",
        c.max_observed_comp, c.comp_bound, c.convergence_bound
    );
    let r = &report.resources;
    let _ = writeln!(
        s,
        "memory per node: {} slots, {} bits (word width {} bits)",
        r.memory_slots, r.memory_bits, r.bit_width
    );
    let _ = writeln!(
        s,
        "energy per node: sense {} + comp {} + trans {} = {} nJ",
        r.p_sense, r.p_comp, r.p_trans, r.p_total
    );
    let _ = writeln!(
        s,
        "verification: {}",
        if report.is_verified() { "PASS" } else { "FAIL" }
    );
    s
}

fn stat_row(s: &mut String, label: &str, stat: &MinMaxMean) {
    let _ = writeln!(
        s,
        "{label:<22}{:>10}{:>10}{:>14.3}",
        stat.min, stat.max, stat.mean
    );
}

pub fn render_batch_summary(report: &BatchReport) -> String {
    let mut s = String::new();
    let _ = write!(s, "{} runs, seed {}", report.runs, report.master_seed);
    if let Some(n) = report.node_count {
        let _ = write!(s, ", {n} nodes");
    }
    if let Some(p) = report.edge_probability {
        let _ = write!(s, ", edge probability {p}");
    }
    s.push('\n');
    let _ = writeln!(s, "{:<22}{:>10}{:>10}{:>14}", "", "min", "max", "mean");
    stat_row(
        &mut s,
        "total transmissions",
        &report.aggregates.total_transmissions,
    );
    stat_row(
        &mut s,
        "convergence rounds",
        &report.aggregates.convergence_rounds,
    );
    if let Some(reference) = &report.reference_20_node {
        let _ = writeln!(
            s,
            "reference envelope for 20-node campaigns (context only):"
        );
        stat_row(
            &mut s,
            "total transmissions",
            &reference.total_transmissions,
        );
        stat_row(&mut s, "convergence rounds", &reference.convergence_rounds);
    }
    s
}

pub fn run_series_csv(series: &[RoundMetrics]) -> String {
    let mut s = String::from(
        "round,mean_state,mean_state_real,cumulative_tx_events,transmitting_nodes,delivered_messages,emitted_events\n",
    );
    for row in series {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            row.round,
            row.mean_state,
            row.mean_state_real,
            row.cumulative_tx_events,
            row.transmitting_nodes,
            row.delivered_messages,
            row.emitted_events
        );
    }
    s
}

pub fn batch_series_csv(rows: &[MeanSeriesRow]) -> String {
    let mut s =
        String::from("round,mean_state,mean_cumulative_tx_events,mean_transmitting_nodes\n");
    for row in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            row.round, row.mean_state, row.mean_cumulative_tx_events, row.mean_transmitting_nodes
        );
    }
    s
}
