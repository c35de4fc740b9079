//! Shared plumbing for seeded runs: resolving the digraph, priority
//! order, and initial values for a given run seed.
//!
//! A run's seed fans out into three independent streams (graph,
//! priorities, values) by salting, so e.g. changing the value range never
//! perturbs the generated topology.

use qac_core::digraph::{Digraph, PriorityMap};

use crate::values::{self, ValueSpec};

const PRIORITY_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const VALUE_SEED_SALT: u64 = 0xd1b5_4a32_d192_ed03;

/// Stream seed for priority shuffling under a run seed.
pub fn priority_seed(run_seed: u64) -> u64 {
    run_seed ^ PRIORITY_SEED_SALT
}

/// Stream seed for value generation under a run seed.
pub fn value_seed(run_seed: u64) -> u64 {
    run_seed ^ VALUE_SEED_SALT
}

/// Where a run's digraph comes from.
#[derive(Debug, Clone)]
pub enum GraphSource {
    Random { nodes: usize, edge_probability: f64 },
    Fixed(Digraph),
}

/// Where a run's priority order comes from.
#[derive(Debug, Clone)]
pub enum PrioritySource {
    ByNodeIndex,
    SeededShuffle,
    Fixed(PriorityMap),
}

#[derive(Debug, Clone)]
pub struct RunInputs {
    pub graph: Digraph,
    pub priorities: PriorityMap,
    pub values: Vec<i64>,
}

/// Materializes the inputs of one run from its seed. Deterministic:
/// identical sources and seed give identical inputs.
pub fn resolve_inputs(
    graph: &GraphSource,
    priorities: &PrioritySource,
    value_spec: &ValueSpec,
    seed: u64,
) -> Result<RunInputs, String> {
    let graph = match graph {
        GraphSource::Random {
            nodes,
            edge_probability,
        } => Digraph::random_strongly_connected(*nodes, *edge_probability, seed)
            .map_err(|e| format!("graph generation failed: {e}"))?,
        GraphSource::Fixed(g) => g.clone(),
    };
    let priorities = match priorities {
        PrioritySource::ByNodeIndex => PriorityMap::by_node_index(&graph),
        PrioritySource::SeededShuffle => PriorityMap::seeded_shuffle(&graph, priority_seed(seed)),
        PrioritySource::Fixed(p) => p.clone(),
    };
    let values = values::generate(value_spec, graph.node_count(), value_seed(seed))
        .map_err(|e| format!("value generation failed: {e}"))?;
    Ok(RunInputs {
        graph,
        priorities,
        values,
    })
}
