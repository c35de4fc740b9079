//! Closed-form worst-case resource bounds for a protocol run on a digraph
//! with `n` nodes and `m` edges, and compliance checks of observed runs
//! against them.
//!
//! Bounds are exact integer arithmetic; energy values are 64-bit reals
//! because the per-bit constants are physical quantities.

use serde::Serialize;

/// Ceiling of log2 with the convention `ceil_log2(x) = 0` for `x <= 1`.
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Worst-case number of rounds until every node holds the exact average:
/// `n^2 + (n-1) m^2`.
pub fn convergence_bound(n: u64, m: u64) -> u64 {
    n * n + n.saturating_sub(1) * m * m
}

/// Worst-case transmission events per node: `n + (n-1) m`.
pub fn transmission_bound(n: u64, m: u64) -> u64 {
    n + n.saturating_sub(1) * m
}

/// Worst-case trigger-condition evaluations per node:
/// `1 + (n-1) (m + 1 + d_max_in)`.
pub fn computation_bound(n: u64, m: u64, d_max_in: u64) -> u64 {
    1 + n.saturating_sub(1) * (m + 1 + d_max_in)
}

/// Message/word width in bits: `ceil(log2 n) + ceil(log2 sum|y|)`, with
/// `sum_abs_y = 0` treated as 1 so the second term vanishes on degenerate
/// inputs.
pub fn bit_width(n: u64, sum_abs_y: u64) -> u32 {
    ceil_log2(n) + ceil_log2(sum_abs_y.max(1))
}

/// Per-node storage requirement for a node with in-degree `d_in`:
/// `(slots, bits)` where slots counts integer storage locations
/// (`7 + 4 d_in`) and bits the binary footprint
/// (`2 + (3 + 2 d_in) ceil(log2 n) + (3 + 2 d_in) ceil(log2 sum|y|)`).
pub fn memory_requirement(n: u64, d_in: u64, sum_abs_y: u64) -> (u64, u64) {
    let slots = 7 + 4 * d_in;
    let per_word = 3 + 2 * d_in;
    let bits =
        2 + per_word * u64::from(ceil_log2(n)) + per_word * u64::from(ceil_log2(sum_abs_y.max(1)));
    (slots, bits)
}

/// Per-bit energy constants of the radio/processing model, in nJ/bit,
/// plus the transmit geometry. `path_loss_exponent` is the exponent of
/// the distance term in the amplifier cost (named to avoid clashing with
/// the node count).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyParams {
    pub alpha3: f64,
    pub alpha4: f64,
    pub alpha11: f64,
    pub alpha2: f64,
    /// Uniform distance in meters from a node to each of its out-neighbors.
    pub distance: f64,
    pub path_loss_exponent: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            alpha3: 50.0,
            alpha4: 5.0,
            alpha11: 45.0,
            alpha2: 135.0,
            distance: 1.0,
            path_loss_exponent: 2.0,
        }
    }
}

/// Worst-case sensing (receive) energy per node in nJ:
/// `alpha3 (m + 1 + d_max_in) (n-1) A`.
pub fn energy_sense(n: u64, m: u64, d_max_in: u64, a: u32, params: &EnergyParams) -> f64 {
    params.alpha3 * ((m + 1 + d_max_in) * n.saturating_sub(1) * u64::from(a)) as f64
}

/// Worst-case processing (aggregation) energy per node in nJ:
/// `alpha4 (1 + 2 d_max_in^2) (n-1) A`.
pub fn energy_comp(n: u64, d_max_in: u64, a: u32, params: &EnergyParams) -> f64 {
    params.alpha4 * ((1 + 2 * d_max_in * d_max_in) * n.saturating_sub(1) * u64::from(a)) as f64
}

/// Worst-case transmit energy per node in nJ:
/// `(n-1) (alpha11 + alpha2 d^exponent) (m + 1) A`.
pub fn energy_trans(n: u64, m: u64, a: u32, params: &EnergyParams) -> f64 {
    let radio = params.alpha11 + params.alpha2 * params.distance.powf(params.path_loss_exponent);
    (n.saturating_sub(1) * (m + 1) * u64::from(a)) as f64 * radio
}

/// All bounds and worst-case resource figures for one network instance.
/// Memory figures use the worst-case (maximum in-degree) node.
#[derive(Debug, Clone, Serialize)]
pub struct ResourceReport {
    pub convergence_bound: u64,
    pub tx_bound: u64,
    pub comp_bound: u64,
    pub memory_slots: u64,
    pub memory_bits: u64,
    pub bit_width: u32,
    pub p_sense: f64,
    pub p_comp: f64,
    pub p_trans: f64,
    pub p_total: f64,
}

/// Assembles every bound plus the total energy
/// `p_total = p_sense + p_comp + p_trans`.
pub fn resource_report(
    n: u64,
    m: u64,
    d_max_in: u64,
    sum_abs_y: u64,
    params: &EnergyParams,
) -> ResourceReport {
    let a = bit_width(n, sum_abs_y);
    let (memory_slots, memory_bits) = memory_requirement(n, d_max_in, sum_abs_y);
    let p_sense = energy_sense(n, m, d_max_in, a, params);
    let p_comp = energy_comp(n, d_max_in, a, params);
    let p_trans = energy_trans(n, m, a, params);
    ResourceReport {
        convergence_bound: convergence_bound(n, m),
        tx_bound: transmission_bound(n, m),
        comp_bound: computation_bound(n, m, d_max_in),
        memory_slots,
        memory_bits,
        bit_width: a,
        p_sense,
        p_comp,
        p_trans,
        p_total: p_sense + p_comp + p_trans,
    }
}

/// Observed resource usage of a finished run, compared against the bounds.
#[derive(Debug, Clone, Serialize)]
pub struct ComplianceRecord {
    pub convergence_bound: u64,
    pub observed_rounds: u64,
    pub tx_bound: u64,
    pub max_observed_tx: u64,
    pub comp_bound: u64,
    pub max_observed_comp: u64,
    /// One entry per bound exceeded; empty means fully compliant.
    pub flags: Vec<String>,
}

impl ComplianceRecord {
    pub fn is_compliant(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Flags every observed quantity that exceeds its theoretical bound.
pub fn compare_run(
    n: u64,
    m: u64,
    d_max_in: u64,
    converged_round: u64,
    tx_per_node: &[u64],
    comp_per_node: &[u64],
) -> ComplianceRecord {
    let convergence = convergence_bound(n, m);
    let tx = transmission_bound(n, m);
    let comp = computation_bound(n, m, d_max_in);
    let max_tx = tx_per_node.iter().copied().max().unwrap_or(0);
    let max_comp = comp_per_node.iter().copied().max().unwrap_or(0);

    let mut flags = Vec::new();
    if converged_round > convergence {
        flags.push(format!(
            "convergence round {converged_round} exceeds bound {convergence}"
        ));
    }
    for (j, &t) in tx_per_node.iter().enumerate() {
        if t > tx {
            flags.push(format!(
                "node {}: {} transmissions exceed bound {}",
                j + 1,
                t,
                tx
            ));
        }
    }
    for (j, &c) in comp_per_node.iter().enumerate() {
        if c > comp {
            flags.push(format!(
                "node {}: {} computations exceed bound {}",
                j + 1,
                c,
                comp
            ));
        }
    }

    ComplianceRecord {
        convergence_bound: convergence,
        observed_rounds: converged_round,
        tx_bound: tx,
        max_observed_tx: max_tx,
        comp_bound: comp,
        max_observed_comp: max_comp,
        flags,
    }
}
