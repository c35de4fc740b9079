//! Synchronous round-based execution of the protocol over a digraph.
//!
//! Rounds are a strict barrier. A message emitted in round `k` is
//! consumed exactly in round `k + 1`; the initial state broadcasts are
//! consumed in round 0. Each round first freezes every node's inbox from
//! the in-flight messages of the previous round, then runs every node on
//! that snapshot; results do not depend on within-round execution order.
//!
//! The engine also owns the observer-side machinery the protocol itself
//! does not have: per-round metrics, global quiescence detection (nodes
//! simply stop having triggers; detecting that from the outside is a
//! convenience for the harness, not part of the protocol), invariant
//! auditing, and the trace format.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::analysis::{self, ComplianceRecord, EnergyParams, ResourceReport};
use crate::digraph::{Digraph, PriorityMap};
use crate::exact::ExactFraction;
use crate::protocol::{Inbox, MassPair, Message, NodeState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("initial values length {got} does not match node count {expected}")]
    ValueCountMismatch { expected: usize, got: usize },
    #[error("sum of initial values overflows the supported 64-bit range")]
    ValueOverflow,
    #[error("no quiescence after {executed} rounds (limit {limit}); the finite-time convergence guarantee failed")]
    RoundLimitExceeded { executed: u64, limit: u64 },
}

/// Default round limit: the worst-case convergence bound plus a safety
/// margin for the final broadcast wave.
pub fn default_max_rounds(n: u64, m: u64) -> u64 {
    analysis::convergence_bound(n, m) + 2 * n
}

#[derive(Debug, Clone)]
pub struct SimOptions {
    /// Hard stop; exceeding it is an error, never a silent truncation.
    /// Defaults to [`default_max_rounds`].
    pub max_rounds: Option<u64>,
    /// Extra rounds executed after quiescence to assert continued
    /// silence. Defaults to `2 n`.
    pub confirm_rounds: Option<u64>,
    pub audit_every_round: bool,
    /// Record the per-round variable table (mass and state of every node).
    pub record_cells: bool,
    /// Record one trace entry per message.
    pub record_trace: bool,
    pub energy: EnergyParams,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            max_rounds: None,
            confirm_rounds: None,
            audit_every_round: true,
            record_cells: false,
            record_trace: false,
            energy: EnergyParams::default(),
        }
    }
}

/// One message in the line-delimited trace. Node ids are 1-based; the
/// integer payloads are decimal in the JSON encoding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceRecord {
    Broadcast {
        round: u64,
        sender: usize,
        receivers: Vec<usize>,
        y: i64,
        z: u64,
    },
    Directed {
        round: u64,
        sender: usize,
        receiver: usize,
        y: i64,
        z: u64,
    },
}

/// Renders records as JSON Lines, one message per line.
pub fn trace_to_jsonl(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

/// One node's variables as a per-round table displays them: the mass
/// after the round's merge (before any transmission zeroed it) and the
/// state after the round's condition updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TableCell {
    pub y: i64,
    pub z: u64,
    pub y_s: i64,
    pub z_s: u64,
}

/// Per-round metrics row.
#[derive(Debug, Clone, Serialize)]
pub struct RoundMetrics {
    pub round: u64,
    /// Exact mean of the per-node estimates; authoritative.
    pub mean_state: ExactFraction,
    /// The same mean as a 64-bit real, for plotting only.
    pub mean_state_real: f64,
    /// Transmission events so far, including the initialization
    /// broadcasts (a broadcast counts as one event).
    pub cumulative_tx_events: u64,
    /// Nodes that emitted at least one message this round.
    pub transmitting_nodes: u32,
    /// Per-recipient deliveries this round (a broadcast counts once per
    /// out-neighbor of the sender).
    pub delivered_messages: u32,
    /// Messages emitted this round.
    pub emitted_events: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub round: u64,
    pub description: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "round {}: {}", self.round, self.description)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scenario {
    FullMassSummation,
    PartialMassSummation,
}

#[derive(Debug, Clone, Serialize)]
pub struct TerminalState {
    /// 1-based node id.
    pub node: usize,
    pub y_s: i64,
    pub z_s: u64,
    /// The unreduced estimate `y_s/z_s` as decimal text.
    pub q_s: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NodeTotals {
    /// 1-based node id.
    pub node: usize,
    pub tx_events: u64,
    pub tx_links: u64,
    pub condition_evaluations: u64,
    pub mass_merges: u64,
}

/// Everything observed about one finished run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub node_count: usize,
    pub edge_count: usize,
    pub max_in_degree: usize,
    pub initial_values: Vec<i64>,
    pub initial_sum: i64,
    /// The true average of the initial values.
    pub exact_average: ExactFraction,
    /// Last round in which any message was delivered (0 if none ever was).
    pub converged_round: u64,
    /// Total rounds executed, including the confirmation tail.
    pub rounds_executed: u64,
    pub confirm_rounds: u64,
    pub quiescent: bool,
    /// True iff every node ended on the same state pair, every pair
    /// cross-multiplies to the exact average, and `z_s` divides the node
    /// count.
    pub exactness_verified: bool,
    /// `n / z_s` at termination; 0 if the terminal state failed
    /// verification.
    pub alpha: u64,
    pub scenario: Scenario,
    pub terminal_states: Vec<TerminalState>,
    pub per_node: Vec<NodeTotals>,
    pub total_tx_events: u64,
    pub series: Vec<RoundMetrics>,
    pub violations: Vec<Violation>,
    pub compliance: ComplianceRecord,
    pub resources: ResourceReport,
}

impl RunReport {
    /// Canonical JSON rendering; byte-identical for identical runs.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn is_verified(&self) -> bool {
        self.quiescent
            && self.exactness_verified
            && self.violations.is_empty()
            && self.compliance.is_compliant()
    }
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// A run in progress: the simulation state plus observer bookkeeping.
pub struct Simulation<'a> {
    g: &'a Digraph,
    priorities: &'a PriorityMap,
    opts: SimOptions,
    pub round: u64,
    pub nodes: Vec<NodeState>,
    /// Messages sent in the previous round (or at initialization),
    /// awaiting delivery in the current round.
    pub in_flight: Vec<Message>,
    initial_values: Vec<i64>,
    initial_sum: i64,
    sum_abs: u64,
    series: Vec<RoundMetrics>,
    trace: Vec<TraceRecord>,
    cells: Vec<Vec<TableCell>>,
    violations: Vec<Violation>,
    last_delivery_round: Option<u64>,
    // audit history
    prev_max_z: u64,
    prev_state_keys: Vec<(u64, i64)>,
    leading_latch: Option<u64>,
    directed_emitted_this_round: u32,
}

impl<'a> Simulation<'a> {
    /// Initializes every node and puts the `n` initial state broadcasts
    /// in flight. A digraph that is not strongly connected is allowed
    /// (the behavior is explorable) but logged, since none of the
    /// termination guarantees apply to it.
    pub fn start_run(
        g: &'a Digraph,
        priorities: &'a PriorityMap,
        initial_values: &[i64],
        opts: SimOptions,
    ) -> Result<Self, SimError> {
        let n = g.node_count();
        if initial_values.len() != n {
            return Err(SimError::ValueCountMismatch {
                expected: n,
                got: initial_values.len(),
            });
        }
        // Masses only ever merge, so every |y| stays bounded by the sum
        // of the initial magnitudes; guarding that sum here rules out
        // overflow anywhere later.
        let sum_abs: i128 = initial_values.iter().map(|&v| (v as i128).abs()).sum();
        let sum: i128 = initial_values.iter().map(|&v| v as i128).sum();
        if sum_abs > i64::MAX as i128 {
            return Err(SimError::ValueOverflow);
        }
        if !g.is_strongly_connected() {
            log::warn!(
                "digraph is not strongly connected; the run may not reach the exact average or quiesce"
            );
        }

        let mut nodes = Vec::with_capacity(n);
        let mut in_flight = Vec::with_capacity(n);
        for (j, &value) in initial_values.iter().enumerate() {
            let (node, msg) = NodeState::init(j, value, g.out_degree(j));
            nodes.push(node);
            in_flight.push(msg);
        }

        let mut sim = Self {
            g,
            priorities,
            opts,
            round: 0,
            nodes,
            in_flight,
            initial_values: initial_values.to_vec(),
            initial_sum: sum as i64,
            sum_abs: sum_abs as u64,
            series: Vec::new(),
            trace: Vec::new(),
            cells: Vec::new(),
            violations: Vec::new(),
            last_delivery_round: None,
            prev_max_z: 1,
            prev_state_keys: vec![(1, i64::MIN); n],
            leading_latch: None,
            directed_emitted_this_round: 0,
        };
        for j in 0..n {
            sim.prev_state_keys[j] = sim.nodes[j].state.key();
        }
        if sim.opts.record_trace {
            let msgs: Vec<Message> = sim.in_flight.clone();
            for msg in &msgs {
                sim.record_trace(msg, 0);
            }
        }
        if sim.opts.record_cells {
            sim.cells
                .push(sim.nodes.iter().map(|nd| cell_of(nd.mass, nd)).collect());
        }
        Ok(sim)
    }

    pub fn graph(&self) -> &Digraph {
        self.g
    }

    /// True once no message is in flight and no flag is pending; from
    /// here every future round is a no-op.
    pub fn is_quiescent(&self) -> bool {
        self.in_flight.is_empty() && self.nodes.iter().all(|nd| !nd.s_br && !nd.m_tr)
    }

    /// Executes one round: delivers the in-flight messages to per-node
    /// inboxes (broadcasts fan out to every out-neighbor of the sender),
    /// runs every node on the frozen snapshot, collects the new emissions
    /// as the next round's in-flight set, and records metrics.
    pub fn step(&mut self) {
        let n = self.g.node_count();
        let mut inboxes: Vec<Inbox> = vec![Inbox::default(); n];
        let mut delivered: u32 = 0;
        for msg in std::mem::take(&mut self.in_flight) {
            match msg {
                Message::Broadcast { sender, y_s, z_s } => {
                    for &l in self.g.out_neighbors(sender) {
                        inboxes[l].states.push((y_s, z_s));
                        delivered += 1;
                    }
                }
                Message::Directed { receiver, y, z, .. } => {
                    inboxes[receiver].masses.push((y, z));
                    delivered += 1;
                }
            }
        }

        let mut outgoing = Vec::new();
        let mut transmitting: u32 = 0;
        let mut directed_emitted: u32 = 0;
        let mut row = Vec::with_capacity(if self.opts.record_cells { n } else { 0 });
        for (j, inbox) in inboxes.iter().enumerate() {
            let outcome = self.nodes[j].node_round(inbox, self.priorities.round_robin_order(j));
            if !outcome.messages.is_empty() {
                transmitting += 1;
            }
            if self.opts.record_cells {
                row.push(cell_of(outcome.post_merge_mass, &self.nodes[j]));
            }
            for msg in &outcome.messages {
                if matches!(msg, Message::Directed { .. }) {
                    directed_emitted += 1;
                }
                if self.opts.record_trace {
                    self.record_trace(msg, self.round);
                }
            }
            outgoing.extend(outcome.messages);
        }
        let emitted = outgoing.len() as u32;
        self.in_flight = outgoing;
        self.directed_emitted_this_round = directed_emitted;
        if delivered > 0 {
            self.last_delivery_round = Some(self.round);
        }
        if self.opts.record_cells {
            self.cells.push(row);
        }

        let mean = ExactFraction::mean_of(self.nodes.iter().map(|nd| nd.state.q_s()));
        let mean_real = mean.to_f64();
        self.series.push(RoundMetrics {
            round: self.round,
            mean_state: mean,
            mean_state_real: mean_real,
            cumulative_tx_events: self.nodes.iter().map(|nd| nd.tx_count).sum(),
            transmitting_nodes: transmitting,
            delivered_messages: delivered,
            emitted_events: emitted,
        });

        if self.opts.audit_every_round {
            let found = self.audit_invariants();
            self.violations.extend(found);
        }
        self.update_audit_history();
        self.round += 1;
    }

    fn record_trace(&mut self, msg: &Message, round: u64) {
        let record = match *msg {
            Message::Broadcast { sender, y_s, z_s } => TraceRecord::Broadcast {
                round,
                sender: sender + 1,
                receivers: self
                    .g
                    .out_neighbors(sender)
                    .iter()
                    .map(|&l| l + 1)
                    .collect(),
                y: y_s,
                z: z_s,
            },
            Message::Directed {
                sender,
                receiver,
                y,
                z,
            } => TraceRecord::Directed {
                round,
                sender: sender + 1,
                receiver: receiver + 1,
                y,
                z,
            },
        };
        self.trace.push(record);
    }

    /// Checks every run-time invariant against the current state and the
    /// recorded history. Violations are data for the caller; a healthy
    /// run returns an empty list.
    pub fn audit_invariants(&self) -> Vec<Violation> {
        let mut found = Vec::new();
        let n = self.g.node_count();
        let mut report = |description: String| {
            found.push(Violation {
                round: self.round,
                description,
            });
        };

        // Conservation: node masses plus in-flight directed payloads.
        let mut sum_y: i128 = 0;
        let mut sum_z: u128 = 0;
        for nd in &self.nodes {
            sum_y += nd.mass.y as i128;
            sum_z += nd.mass.z as u128;
            if nd.mass.z == 0 && nd.mass.y != 0 {
                report(format!(
                    "node {}: zero-z mass holds y = {}",
                    nd.id + 1,
                    nd.mass.y
                ));
            }
            if nd.state.z_s == 0 {
                report(format!("node {}: state denominator is zero", nd.id + 1));
            }
        }
        for msg in &self.in_flight {
            if let Message::Directed {
                sender,
                receiver,
                y,
                z,
            } = *msg
            {
                sum_y += y as i128;
                sum_z += z as u128;
                if z == 0 {
                    report(format!(
                        "in-flight directed message from node {} has z = 0",
                        sender + 1
                    ));
                }
                if !self.g.out_neighbors(sender).contains(&receiver) {
                    report(format!(
                        "in-flight directed message targets non-neighbor {} of node {}",
                        receiver + 1,
                        sender + 1
                    ));
                }
            }
        }
        if sum_y != self.initial_sum as i128 {
            report(format!(
                "mass value sum {} differs from initial sum {}",
                sum_y, self.initial_sum
            ));
        }
        if sum_z != n as u128 {
            report(format!(
                "mass count sum {} differs from node count {}",
                sum_z, n
            ));
        }

        // Leading mass: maximal (z, y) over all nonzero masses, stored or
        // in flight.
        let stored = self
            .nodes
            .iter()
            .map(|nd| nd.mass)
            .filter(|mass| !mass.is_zero());
        let flying = self.in_flight.iter().filter_map(|msg| match *msg {
            Message::Directed { y, z, .. } => Some(MassPair { y, z }),
            Message::Broadcast { .. } => None,
        });
        let leading = stored
            .clone()
            .chain(flying.clone())
            .map(|mass| mass.key())
            .max();

        if let Some(leading) = leading {
            // Maximum z never decreases.
            if leading.0 < self.prev_max_z {
                report(format!(
                    "maximum mass count dropped from {} to {}",
                    self.prev_max_z, leading.0
                ));
            }
            // No state may strictly exceed the leading mass.
            for nd in &self.nodes {
                if nd.state.key() > leading {
                    report(format!(
                        "node {}: state ({}, {}) exceeds leading mass ({}, {})",
                        nd.id + 1,
                        nd.state.y_s,
                        nd.state.z_s,
                        leading.1,
                        leading.0
                    ));
                }
            }
            // The leading mass never travels: every in-flight directed
            // payload is strictly below it.
            for mass in flying {
                if mass.key() >= leading {
                    report(format!(
                        "in-flight mass ({}, {}) is not strictly below the leading mass",
                        mass.y, mass.z
                    ));
                }
            }
            // Once every nonzero mass is a leading mass, no directed
            // message may ever be emitted again.
            if let Some(latch_round) = self.leading_latch {
                if self.directed_emitted_this_round > 0 {
                    report(format!(
                        "directed transmission after all masses became leading at round {latch_round}"
                    ));
                }
            }
        }

        // Per-node state keys are non-decreasing.
        for nd in &self.nodes {
            if nd.state.key() < self.prev_state_keys[nd.id] {
                report(format!(
                    "node {}: state regressed below its previous value",
                    nd.id + 1
                ));
            }
        }

        // Flags are cleared at the end of every round in which they fired.
        for nd in &self.nodes {
            if nd.s_br || nd.m_tr {
                report(format!(
                    "node {}: transmission flag left set after a round",
                    nd.id + 1
                ));
            }
        }

        found
    }

    fn update_audit_history(&mut self) {
        let masses: Vec<MassPair> = self
            .nodes
            .iter()
            .map(|nd| nd.mass)
            .chain(self.in_flight.iter().filter_map(|msg| match *msg {
                Message::Directed { y, z, .. } => Some(MassPair { y, z }),
                Message::Broadcast { .. } => None,
            }))
            .filter(|mass| !mass.is_zero())
            .collect();
        if let Some(leading) = masses.iter().map(|mass| mass.key()).max() {
            self.prev_max_z = leading.0;
            if self.leading_latch.is_none() && masses.iter().all(|mass| mass.key() == leading) {
                self.leading_latch = Some(self.round);
            }
        }
        for nd in &self.nodes {
            self.prev_state_keys[nd.id] = nd.state.key();
        }
    }

    /// Runs until no message is in flight and no flag is set, then
    /// executes the confirmation rounds asserting continued silence, and
    /// assembles the report. Exceeding the round limit is an error: on a
    /// strongly connected digraph it would falsify the convergence
    /// guarantee.
    pub fn run_until_quiescent(&mut self) -> Result<RunReport, SimError> {
        let n = self.g.node_count() as u64;
        let m = self.g.edge_count() as u64;
        let max_rounds = self
            .opts
            .max_rounds
            .unwrap_or_else(|| default_max_rounds(n, m));
        let confirm_rounds = self.opts.confirm_rounds.unwrap_or(2 * n);

        while !self.is_quiescent() {
            if self.round >= max_rounds {
                return Err(SimError::RoundLimitExceeded {
                    executed: self.round,
                    limit: max_rounds,
                });
            }
            self.step();
        }
        let converged_round = self.last_delivery_round.unwrap_or(0);

        for _ in 0..confirm_rounds {
            self.step();
            let row = self.series.last().expect("step records a row");
            if row.delivered_messages != 0 || row.emitted_events != 0 {
                self.violations.push(Violation {
                    round: row.round,
                    description: "message activity after quiescence".into(),
                });
            }
        }

        Ok(self.build_report(converged_round, confirm_rounds))
    }

    fn build_report(&self, converged_round: u64, confirm_rounds: u64) -> RunReport {
        let n = self.g.node_count();
        let first = self.nodes[0].state;
        let uniform = self.nodes.iter().all(|nd| nd.state == first);
        let exact = self.nodes.iter().all(|nd| {
            (nd.state.y_s as i128) * (n as i128)
                == (nd.state.z_s as i128) * (self.initial_sum as i128)
        });
        let alpha_ok = first.z_s > 0 && (n as u64).is_multiple_of(first.z_s);
        let alpha = if uniform && alpha_ok {
            n as u64 / first.z_s
        } else {
            0
        };
        let scenario = if alpha > 1 {
            Scenario::PartialMassSummation
        } else {
            Scenario::FullMassSummation
        };

        let tx_per_node: Vec<u64> = self.nodes.iter().map(|nd| nd.tx_count).collect();
        let comp_per_node: Vec<u64> = self.nodes.iter().map(|nd| nd.comp_count).collect();
        let compliance = analysis::compare_run(
            n as u64,
            self.g.edge_count() as u64,
            self.g.max_in_degree() as u64,
            converged_round,
            &tx_per_node,
            &comp_per_node,
        );
        let resources = analysis::resource_report(
            n as u64,
            self.g.edge_count() as u64,
            self.g.max_in_degree() as u64,
            self.sum_abs,
            &self.opts.energy,
        );

        RunReport {
            schema_version: REPORT_SCHEMA_VERSION,
            node_count: n,
            edge_count: self.g.edge_count(),
            max_in_degree: self.g.max_in_degree(),
            initial_values: self.initial_values.clone(),
            initial_sum: self.initial_sum,
            exact_average: ExactFraction::new(self.initial_sum, n as u64),
            converged_round,
            rounds_executed: self.round,
            confirm_rounds,
            quiescent: self.is_quiescent(),
            exactness_verified: uniform && exact && alpha_ok,
            alpha,
            scenario,
            terminal_states: self
                .nodes
                .iter()
                .map(|nd| TerminalState {
                    node: nd.id + 1,
                    y_s: nd.state.y_s,
                    z_s: nd.state.z_s,
                    q_s: format!("{}/{}", nd.state.y_s, nd.state.z_s),
                })
                .collect(),
            per_node: self
                .nodes
                .iter()
                .map(|nd| NodeTotals {
                    node: nd.id + 1,
                    tx_events: nd.tx_count,
                    tx_links: nd.tx_link_count,
                    condition_evaluations: nd.comp_count,
                    mass_merges: nd.merge_count,
                })
                .collect(),
            total_tx_events: tx_per_node.iter().sum(),
            series: self.series.clone(),
            violations: self.violations.clone(),
            compliance,
            resources,
        }
    }

    /// The recorded per-round variable table (row `k` holds every node's
    /// mass and state as they stand at time step `k`). Only populated
    /// when [`SimOptions::record_cells`] was set.
    pub fn cells(&self) -> &[Vec<TableCell>] {
        &self.cells
    }

    /// The recorded message trace. Only populated when
    /// [`SimOptions::record_trace`] was set.
    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn series(&self) -> &[RoundMetrics] {
        &self.series
    }
}

fn cell_of(post_merge_mass: MassPair, node: &NodeState) -> TableCell {
    TableCell {
        y: post_merge_mass.y,
        z: post_merge_mass.z,
        y_s: node.state.y_s,
        z_s: node.state.z_s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_digraph() -> Digraph {
        Digraph::new(4, &[(0, 2), (0, 3), (1, 0), (2, 0), (2, 3), (3, 1)]).unwrap()
    }

    fn demo_priorities(g: &Digraph) -> PriorityMap {
        PriorityMap::with_overrides(g, &[(0, 3, 0), (0, 2, 1), (2, 0, 0), (2, 3, 1)]).unwrap()
    }

    #[test]
    fn start_run_puts_initial_broadcasts_in_flight() {
        let g = demo_digraph();
        let p = demo_priorities(&g);
        let sim = Simulation::start_run(&g, &p, &[2, 4, 7, 9], SimOptions::default()).unwrap();
        assert_eq!(sim.in_flight.len(), 4);
        assert!(sim
            .in_flight
            .iter()
            .all(|msg| matches!(msg, Message::Broadcast { .. })));
        assert!(!sim.is_quiescent());
    }

    #[test]
    fn start_run_rejects_length_mismatch() {
        let g = demo_digraph();
        let p = demo_priorities(&g);
        assert!(matches!(
            Simulation::start_run(&g, &p, &[1, 2], SimOptions::default()),
            Err(SimError::ValueCountMismatch {
                expected: 4,
                got: 2
            })
        ));
    }

    #[test]
    fn single_node_is_its_own_average() {
        let g = Digraph::new(1, &[]).unwrap();
        let p = PriorityMap::by_node_index(&g);
        let mut sim = Simulation::start_run(&g, &p, &[5], SimOptions::default()).unwrap();
        let report = sim.run_until_quiescent().unwrap();
        assert_eq!(report.converged_round, 0);
        assert_eq!(report.terminal_states[0].q_s, "5/1");
        assert_eq!(report.alpha, 1);
        assert!(report.is_verified());
        // one transmission event total: the initial broadcast to nobody
        assert_eq!(report.per_node[0].tx_events, 1);
        assert_eq!(report.per_node[0].tx_links, 0);
    }

    #[test]
    fn equal_values_stay_at_the_common_value() {
        let g = demo_digraph();
        let p = demo_priorities(&g);
        let mut sim = Simulation::start_run(&g, &p, &[3, 3, 3, 3], SimOptions::default()).unwrap();
        let report = sim.run_until_quiescent().unwrap();
        assert!(report.is_verified());
        for t in &report.terminal_states {
            assert_eq!((t.y_s as i128) * 4, (t.z_s as i128) * 12);
        }
    }

    #[test]
    fn delivery_takes_exactly_one_round() {
        // The forwarded mass is the post-merge value: the node that
        // merged (0,0)+(4,1) in round 1 forwards (4,1), which reaches the
        // next node in round 2 and shows up in its row-3 cell as (11,2).
        let g = demo_digraph();
        let p = demo_priorities(&g);
        let opts = SimOptions {
            record_cells: true,
            ..SimOptions::default()
        };
        let mut sim = Simulation::start_run(&g, &p, &[2, 4, 7, 9], opts).unwrap();
        for _ in 0..3 {
            sim.step();
        }
        let cells = sim.cells();
        // v_3 (index 2) untouched through round 1, merged at round 2
        assert_eq!(
            cells[2][2],
            TableCell {
                y: 7,
                z: 1,
                y_s: 7,
                z_s: 1
            }
        );
        assert_eq!(
            cells[3][2],
            TableCell {
                y: 11,
                z: 2,
                y_s: 11,
                z_s: 2
            }
        );
    }

    #[test]
    fn step_on_quiescent_state_is_a_fixed_point() {
        let g = demo_digraph();
        let p = demo_priorities(&g);
        let mut sim = Simulation::start_run(&g, &p, &[2, 4, 7, 9], SimOptions::default()).unwrap();
        sim.run_until_quiescent().unwrap();
        let nodes_before = sim.nodes.clone();
        sim.step();
        assert_eq!(sim.nodes, nodes_before);
        assert!(sim.in_flight.is_empty());
        let row = sim.series().last().unwrap();
        assert_eq!(row.delivered_messages, 0);
        assert_eq!(row.emitted_events, 0);
    }

    #[test]
    fn conservation_holds_every_round_against_independent_fold() {
        let g = Digraph::random_strongly_connected(6, 0.4, 11).unwrap();
        let p = PriorityMap::seeded_shuffle(&g, 12);
        let values = [-3_i64, 14, 0, 7, -9, 2];
        let total: i128 = values.iter().map(|&v| v as i128).sum();
        let mut sim = Simulation::start_run(&g, &p, &values, SimOptions::default()).unwrap();
        for _ in 0..200 {
            sim.step();
            let mut y: i128 = sim.nodes.iter().map(|nd| nd.mass.y as i128).sum();
            let mut z: u128 = sim.nodes.iter().map(|nd| nd.mass.z as u128).sum();
            for msg in &sim.in_flight {
                if let Message::Directed { y: my, z: mz, .. } = msg {
                    y += *my as i128;
                    z += *mz as u128;
                }
            }
            assert_eq!(y, total);
            assert_eq!(z, 6);
            if sim.is_quiescent() {
                break;
            }
        }
        assert!(sim.is_quiescent());
        assert!(sim.violations().is_empty());
    }

    #[test]
    fn corrupted_state_is_flagged() {
        let g = demo_digraph();
        let p = demo_priorities(&g);
        let mut sim = Simulation::start_run(&g, &p, &[2, 4, 7, 9], SimOptions::default()).unwrap();
        sim.step();
        sim.nodes[0].state.z_s = 0;
        let found = sim.audit_invariants();
        assert!(found
            .iter()
            .any(|v| v.description.contains("state denominator is zero")));
    }

    #[test]
    fn round_limit_is_an_error_not_a_truncation() {
        let g = Digraph::random_strongly_connected(8, 0.3, 5).unwrap();
        let p = PriorityMap::by_node_index(&g);
        let opts = SimOptions {
            max_rounds: Some(1),
            ..SimOptions::default()
        };
        let mut sim = Simulation::start_run(&g, &p, &[1, 2, 3, 4, 5, 6, 7, 8], opts).unwrap();
        assert!(matches!(
            sim.run_until_quiescent(),
            Err(SimError::RoundLimitExceeded { limit: 1, .. })
        ));
    }

    #[test]
    fn random_run_reaches_the_exact_average() {
        let g = Digraph::random_strongly_connected(8, 0.3, 21).unwrap();
        let p = PriorityMap::seeded_shuffle(&g, 22);
        let values = [5_i64, -17, 40, 3, 3, -50, 11, 0];
        let sum: i64 = values.iter().sum();
        let mut sim = Simulation::start_run(&g, &p, &values, SimOptions::default()).unwrap();
        let report = sim.run_until_quiescent().unwrap();
        assert!(report.is_verified(), "violations: {:?}", report.violations);
        for t in &report.terminal_states {
            assert_eq!((t.y_s as i128) * 8, (t.z_s as i128) * (sum as i128));
        }
        assert_eq!(report.exact_average, ExactFraction::new(sum, 8));
    }

    #[test]
    fn two_node_run_matches_hand_enumeration() {
        // Hand enumeration for the complete 2-node digraph with values
        // {0, 10}: node 1 adopts (10, 1) and forwards its mass (0, 1) in
        // round 0; node 2 merges to (10, 2) and broadcasts in round 1;
        // node 1 adopts (10, 2) and re-broadcasts in round 2; silence
        // after round 3. Terminal state (10, 2) everywhere, one mass.
        let g = Digraph::new(2, &[(0, 1), (1, 0)]).unwrap();
        let p = PriorityMap::by_node_index(&g);
        let mut sim = Simulation::start_run(&g, &p, &[0, 10], SimOptions::default()).unwrap();
        let report = sim.run_until_quiescent().unwrap();
        assert!(report.is_verified());
        for t in &report.terminal_states {
            assert_eq!((t.y_s, t.z_s), (10, 2));
            assert_eq!((t.y_s as i128) * 2, (t.z_s as i128) * 10);
        }
        assert_eq!(report.alpha, 1);
        assert_eq!(report.converged_round, 3);
    }

    #[test]
    fn trace_round_trips_bit_exactly() {
        let g = demo_digraph();
        let p = demo_priorities(&g);
        let opts = SimOptions {
            record_trace: true,
            ..SimOptions::default()
        };
        let mut sim = Simulation::start_run(&g, &p, &[2, 4, 7, 9], opts).unwrap();
        sim.run_until_quiescent().unwrap();
        let text = trace_to_jsonl(sim.trace());
        let parsed = trace_from_jsonl(&text).unwrap();
        assert_eq!(parsed.as_slice(), sim.trace());
        assert_eq!(trace_to_jsonl(&parsed), text);
    }
}
