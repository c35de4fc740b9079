//! Directed-graph model: validated digraphs, strong-connectivity checks,
//! seeded random generation, and per-node out-edge priority orders.
//!
//! Node ids are 0-based in the API; the text file formats and all reports
//! use 1-based ids. Edges are directed sender → receiver: edge `(u, v)`
//! means `v` can receive messages from `u`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Resampling cap for [`Digraph::random_strongly_connected`].
const MAX_GENERATION_ATTEMPTS: u32 = 10_000;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("a digraph needs at least one node")]
    EmptyGraph,
    #[error("edge ({from}, {to}) out of range for {nodes} nodes (1-based: {} {})", from + 1, to + 1)]
    EdgeOutOfRange {
        from: usize,
        to: usize,
        nodes: usize,
    },
    #[error("self-loop on node {} is not allowed", .0 + 1)]
    SelfLoop(usize),
    #[error("edge probability must be in (0, 1], got {0}")]
    InvalidEdgeProbability(f64),
    #[error("random generation needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("no strongly connected digraph found after {0} attempts")]
    GenerationFailed(u32),
    #[error("invalid priorities for node {}: {reason}", node + 1)]
    InvalidPriorities { node: usize, reason: String },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// A directed graph without self-loops or parallel edges.
///
/// Immutable after construction; safe to share read-only across threads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    out: Vec<Vec<usize>>,
    inn: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Digraph {
    /// Builds a validated digraph from `(from, to)` edge pairs.
    /// Duplicate edges are collapsed; self-loops and out-of-range
    /// indices are rejected.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let mut set = BTreeSet::new();
        for &(from, to) in edges {
            if from >= node_count || to >= node_count {
                return Err(GraphError::EdgeOutOfRange {
                    from,
                    to,
                    nodes: node_count,
                });
            }
            if from == to {
                return Err(GraphError::SelfLoop(from));
            }
            set.insert((from, to));
        }
        let mut out = vec![Vec::new(); node_count];
        let mut inn = vec![Vec::new(); node_count];
        // BTreeSet iteration is ordered, so neighbor lists come out sorted.
        for &(from, to) in &set {
            out[from].push(to);
            inn[to].push(from);
        }
        Ok(Self {
            out,
            inn,
            edge_count: set.len(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Out-neighbors of `j`, sorted by node index.
    pub fn out_neighbors(&self, j: usize) -> &[usize] {
        &self.out[j]
    }

    /// In-neighbors of `j`, sorted by node index.
    pub fn in_neighbors(&self, j: usize) -> &[usize] {
        &self.inn[j]
    }

    pub fn out_degree(&self, j: usize) -> usize {
        self.out[j].len()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.inn[j].len()
    }

    pub fn max_in_degree(&self) -> usize {
        (0..self.node_count())
            .map(|j| self.in_degree(j))
            .max()
            .unwrap_or(0)
    }

    /// All edges as `(from, to)` pairs in sorted order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(from, tos)| tos.iter().map(move |&to| (from, to)))
    }

    /// True iff a directed path exists between every ordered node pair.
    ///
    /// Two reachability sweeps from node 0: forward along out-edges and
    /// backward along in-edges. Both reaching all nodes is equivalent to
    /// strong connectivity.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.node_count();
        self.sweep_count(0, true) == n && self.sweep_count(0, false) == n
    }

    fn sweep_count(&self, start: usize, forward: bool) -> usize {
        let adj = if forward { &self.out } else { &self.inn };
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(v) = stack.pop() {
            count += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        count
    }

    /// Draws Erdős–Rényi directed graphs with edge probability
    /// `edge_probability` until one is strongly connected. Deterministic
    /// for a fixed seed; fails after a fixed attempt cap so tiny
    /// probabilities cannot loop forever.
    pub fn random_strongly_connected(
        node_count: usize,
        edge_probability: f64,
        seed: u64,
    ) -> Result<Self, GraphError> {
        if node_count < 2 {
            return Err(GraphError::TooFewNodes(node_count));
        }
        if !(edge_probability > 0.0 && edge_probability <= 1.0) {
            return Err(GraphError::InvalidEdgeProbability(edge_probability));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for _ in 0..MAX_GENERATION_ATTEMPTS {
            edges.clear();
            for from in 0..node_count {
                for to in 0..node_count {
                    if from != to && rng.gen_bool(edge_probability) {
                        edges.push((from, to));
                    }
                }
            }
            let g = Self::new(node_count, &edges).expect("generated edges are in range");
            if g.is_strongly_connected() {
                return Ok(g);
            }
        }
        Err(GraphError::GenerationFailed(MAX_GENERATION_ATTEMPTS))
    }

    /// Parses the graph file format: line 1 holds `n`, each following
    /// non-empty line holds `u v` meaning a directed edge from `u` to `v`
    /// (1-based). Lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = numbered_lines(text);
        let (line_no, first) = lines.next().ok_or(GraphError::Parse {
            line: 1,
            reason: "missing node count".into(),
        })?;
        let node_count: usize = first.trim().parse().map_err(|_| GraphError::Parse {
            line: line_no,
            reason: format!("invalid node count '{}'", first.trim()),
        })?;
        let mut edges = Vec::new();
        for (line_no, line) in lines {
            let mut it = line.split_whitespace();
            let (u, v) = match (it.next(), it.next(), it.next()) {
                (Some(u), Some(v), None) => (u, v),
                _ => {
                    return Err(GraphError::Parse {
                        line: line_no,
                        reason: format!("expected 'u v', got '{}'", line.trim()),
                    })
                }
            };
            let from = parse_node_id(u, node_count, line_no)?;
            let to = parse_node_id(v, node_count, line_no)?;
            edges.push((from, to));
        }
        Self::new(node_count, &edges)
    }

    /// Renders the graph in the file format accepted by [`Digraph::parse`].
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.node_count());
        for (from, to) in self.edges() {
            let _ = writeln!(s, "{} {}", from + 1, to + 1);
        }
        s
    }
}

fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn parse_node_id(token: &str, node_count: usize, line: usize) -> Result<usize, GraphError> {
    let id: usize = token.parse().map_err(|_| GraphError::Parse {
        line,
        reason: format!("invalid node id '{token}'"),
    })?;
    if id == 0 || id > node_count {
        return Err(GraphError::Parse {
            line,
            reason: format!("node id {id} out of range 1..={node_count}"),
        });
    }
    Ok(id - 1)
}

/// Per-node transmission order over out-edges.
///
/// `order(j)` lists node `j`'s out-neighbors with the neighbor of
/// priority `r` at position `r`; the priorities of each node are exactly
/// `{0..out_degree-1}`, no repeats. The round-robin cursor of the
/// protocol walks this list cyclically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityMap {
    order: Vec<Vec<usize>>,
}

impl PriorityMap {
    /// Priority in ascending out-neighbor index.
    pub fn by_node_index(g: &Digraph) -> Self {
        Self {
            order: (0..g.node_count())
                .map(|j| g.out_neighbors(j).to_vec())
                .collect(),
        }
    }

    /// Deterministic per-node shuffle of the out-neighbor order.
    pub fn seeded_shuffle(g: &Digraph, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let order = (0..g.node_count())
            .map(|j| {
                let mut o = g.out_neighbors(j).to_vec();
                o.shuffle(&mut rng);
                o
            })
            .collect();
        Self { order }
    }

    /// Builds a map from explicit `(node, out_neighbor, priority)` entries,
    /// all 0-based. Nodes with no entries fall back to ascending index
    /// order; a node with any entry must be given a complete bijection
    /// onto `{0..out_degree-1}`.
    pub fn with_overrides(
        g: &Digraph,
        entries: &[(usize, usize, usize)],
    ) -> Result<Self, GraphError> {
        let mut map = Self::by_node_index(g);
        let mut slots: Vec<Option<Vec<Option<usize>>>> = vec![None; g.node_count()];
        for &(node, neighbor, priority) in entries {
            if node >= g.node_count() {
                return Err(GraphError::InvalidPriorities {
                    node,
                    reason: "node out of range".into(),
                });
            }
            let degree = g.out_degree(node);
            if !g.out_neighbors(node).contains(&neighbor) {
                return Err(GraphError::InvalidPriorities {
                    node,
                    reason: format!("{} is not an out-neighbor", neighbor + 1),
                });
            }
            if priority >= degree {
                return Err(GraphError::InvalidPriorities {
                    node,
                    reason: format!("priority {priority} out of range 0..{degree}"),
                });
            }
            let node_slots = slots[node].get_or_insert_with(|| vec![None; degree]);
            if let Some(prev) = node_slots[priority] {
                if prev != neighbor {
                    return Err(GraphError::InvalidPriorities {
                        node,
                        reason: format!("priority {priority} assigned twice"),
                    });
                }
            }
            node_slots[priority] = Some(neighbor);
        }
        for (node, node_slots) in slots.into_iter().enumerate() {
            let Some(node_slots) = node_slots else {
                continue;
            };
            let mut order = Vec::with_capacity(node_slots.len());
            let mut seen = BTreeSet::new();
            for (priority, slot) in node_slots.into_iter().enumerate() {
                let neighbor = slot.ok_or_else(|| GraphError::InvalidPriorities {
                    node,
                    reason: format!("priority {priority} left unassigned"),
                })?;
                if !seen.insert(neighbor) {
                    return Err(GraphError::InvalidPriorities {
                        node,
                        reason: format!("out-neighbor {} assigned twice", neighbor + 1),
                    });
                }
                order.push(neighbor);
            }
            map.order[node] = order;
        }
        Ok(map)
    }

    /// The out-neighbors of `j` in round-robin order (priority 0 first).
    pub fn round_robin_order(&self, j: usize) -> &[usize] {
        &self.order[j]
    }

    /// Priority rank of `neighbor` for node `j`, if it is an out-neighbor.
    pub fn priority_of(&self, j: usize, neighbor: usize) -> Option<usize> {
        self.order[j].iter().position(|&l| l == neighbor)
    }

    /// Parses the priority file format: each non-empty line holds
    /// `j neighbor priority` with 1-based node ids and 0-based priority
    /// ranks. Lines starting with `#` are comments.
    pub fn parse(text: &str, g: &Digraph) -> Result<Self, GraphError> {
        let n = g.node_count();
        let mut entries = Vec::new();
        for (line_no, line) in numbered_lines(text) {
            let mut it = line.split_whitespace();
            let (j, l, p) = match (it.next(), it.next(), it.next(), it.next()) {
                (Some(j), Some(l), Some(p), None) => (j, l, p),
                _ => {
                    return Err(GraphError::Parse {
                        line: line_no,
                        reason: format!("expected 'j neighbor priority', got '{}'", line.trim()),
                    })
                }
            };
            let node = parse_node_id(j, n, line_no)?;
            let neighbor = parse_node_id(l, n, line_no)?;
            let priority: usize = p.parse().map_err(|_| GraphError::Parse {
                line: line_no,
                reason: format!("invalid priority '{p}'"),
            })?;
            entries.push((node, neighbor, priority));
        }
        Self::with_overrides(g, &entries)
    }

    /// Renders the map in the file format accepted by [`PriorityMap::parse`].
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for (j, order) in self.order.iter().enumerate() {
            for (priority, &neighbor) in order.iter().enumerate() {
                let _ = writeln!(s, "{} {} {}", j + 1, neighbor + 1, priority);
            }
        }
        s
    }
}
