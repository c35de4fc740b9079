//! The per-node state machine: mass and state variable pairs, the three
//! event-trigger condition sets, and the emission rules that decide when
//! a node broadcasts its state or forwards its mass.
//!
//! Every node carries two integer pairs. The *mass* `(y, z)` is the
//! conserved quantity: `y` carries value, `z` counts how many initial
//! unit-masses have merged into it. The *state* `(y_s, z_s)` is the
//! node's best-known candidate for the leading mass; its unreduced
//! fraction `y_s / z_s` is the node's current average estimate. Pairs are
//! ranked lexicographically, larger `z` first and larger `y` on ties —
//! the maximal pair in the system is the *leading mass*.
//!
//! Within a round a node merges incoming directed masses, then (only if
//! it received anything) evaluates the trigger conditions in order:
//!
//! 1. a received state strictly above its own is adopted and re-broadcast;
//! 2. its own mass strictly above its state is promoted and broadcast;
//! 3. a nonzero mass strictly below its state is unicast to the next
//!    out-neighbor in the node's fixed round-robin priority order.
//!
//! A node that receives nothing stays in hibernation: no evaluation, no
//! transmission.

use std::cmp::Ordering;

use serde::Serialize;

/// A mass pair `(y, z)`. Invariant: `z == 0` implies `y == 0` — a fully
/// transmitted mass is the zero pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MassPair {
    pub y: i64,
    pub z: u64,
}

impl MassPair {
    pub const ZERO: MassPair = MassPair { y: 0, z: 0 };

    pub fn is_zero(&self) -> bool {
        self.z == 0
    }

    /// Ranking key: `z` first, then `y`.
    pub fn key(&self) -> (u64, i64) {
        (self.z, self.y)
    }
}

/// A state pair `(y_s, z_s)` with `z_s >= 1` after initialization. The
/// estimate `q_s = y_s / z_s` is derived, kept unreduced, and never
/// rounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StateTriple {
    pub y_s: i64,
    pub z_s: u64,
}

impl StateTriple {
    /// The exact estimate as an unreduced `(numerator, denominator)` pair.
    pub fn q_s(&self) -> (i64, u64) {
        (self.y_s, self.z_s)
    }

    pub fn key(&self) -> (u64, i64) {
        (self.z_s, self.y_s)
    }
}

/// Total preorder on `(z, y)` pairs: larger `z` wins, larger `y` breaks
/// ties. This is the order that defines the leading mass.
pub fn leading_order(a: (u64, i64), b: (u64, i64)) -> Ordering {
    a.cmp(&b)
}

/// A message in flight. `Broadcast` carries a state pair and fans out to
/// every out-neighbor of the sender at delivery; `Directed` carries a
/// nonzero mass pair to a single receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Broadcast {
        sender: usize,
        y_s: i64,
        z_s: u64,
    },
    Directed {
        sender: usize,
        receiver: usize,
        y: i64,
        z: u64,
    },
}

/// One node's deliveries for a round: state payloads from broadcasts and
/// mass payloads from directed messages, both as `(y, z)` pairs.
#[derive(Debug, Clone, Default)]
pub struct Inbox {
    pub states: Vec<(i64, u64)>,
    pub masses: Vec<(i64, u64)>,
}

impl Inbox {
    pub fn is_empty(&self) -> bool {
        self.states.is_empty() && self.masses.is_empty()
    }
}

/// What a round did to a node, besides mutating it.
#[derive(Debug)]
pub struct RoundOutcome {
    pub messages: Vec<Message>,
    /// Mass after merging this round's deliveries, before any transmission
    /// zeroed it. This is the value a per-round variable table displays.
    pub post_merge_mass: MassPair,
    /// Whether the trigger conditions were evaluated (inbox non-empty).
    pub evaluated: bool,
}

/// Full per-node protocol state plus cost counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub id: usize,
    pub mass: MassPair,
    pub state: StateTriple,
    pub s_br: bool,
    pub m_tr: bool,
    /// Index into this node's round-robin priority order; persists across
    /// rounds.
    pub rr_cursor: usize,
    /// Transmission events (a broadcast counts as one event), including
    /// the initialization broadcast.
    pub tx_count: u64,
    /// Per-link transmissions: a broadcast counts once per out-neighbor.
    pub tx_link_count: u64,
    /// Trigger-condition evaluations, including the initialization step.
    pub comp_count: u64,
    /// Directed mass payloads merged into this node.
    pub merge_count: u64,
}

impl NodeState {
    /// Initializes a node holding `initial_value`: mass `(v, 1)`, state
    /// `(v, 1)`, flags clear. Returns the initial broadcast of the state
    /// pair; the broadcast is counted as this node's first transmission
    /// event and the initialization as its first computation.
    pub fn init(id: usize, initial_value: i64, out_degree: usize) -> (NodeState, Message) {
        let node = NodeState {
            id,
            mass: MassPair {
                y: initial_value,
                z: 1,
            },
            state: StateTriple {
                y_s: initial_value,
                z_s: 1,
            },
            s_br: false,
            m_tr: false,
            rr_cursor: 0,
            tx_count: 1,
            tx_link_count: out_degree as u64,
            comp_count: 1,
            merge_count: 0,
        };
        let msg = Message::Broadcast {
            sender: id,
            y_s: initial_value,
            z_s: 1,
        };
        (node, msg)
    }

    /// Component-wise sum of incoming directed mass payloads into the
    /// stored mass.
    pub fn merge_masses(&mut self, incoming: &[(i64, u64)]) {
        for &(y, z) in incoming {
            debug_assert!(z > 0, "directed payloads always carry nonzero mass");
            self.mass.y += y;
            self.mass.z += z;
            self.merge_count += 1;
        }
    }

    /// Trigger conditions 1: adopt the maximal received state pair if it
    /// strictly dominates the node's own, and schedule a broadcast.
    /// Absent messages never dominate, so they are simply not in the list.
    pub fn apply_condition_1(&mut self, received_states: &[(i64, u64)]) {
        let best = received_states.iter().map(|&(y, z)| (z, y)).max();
        if let Some((z, y)) = best {
            if leading_order((z, y), self.state.key()) == Ordering::Greater {
                self.state = StateTriple { y_s: y, z_s: z };
                self.s_br = true;
            }
        }
    }

    /// Trigger conditions 2: promote the node's own mass to its state if
    /// the mass strictly dominates, and schedule a broadcast.
    pub fn apply_condition_2(&mut self) {
        if leading_order(self.mass.key(), self.state.key()) == Ordering::Greater {
            self.state = StateTriple {
                y_s: self.mass.y,
                z_s: self.mass.z,
            };
            self.s_br = true;
        }
    }

    /// Trigger conditions 3: a nonzero mass strictly below the state is
    /// scheduled for unicast forwarding.
    pub fn apply_condition_3(&mut self) {
        let below = (self.mass.z > 0 && self.mass.z < self.state.z_s)
            || (self.mass.z == self.state.z_s && self.mass.y < self.state.y_s);
        if below {
            self.m_tr = true;
        }
    }

    /// Emits this round's messages: the state broadcast if `s_br`, then
    /// the directed mass to the out-neighbor at the round-robin cursor if
    /// `m_tr`, advancing the cursor and zeroing the mass. Both flags are
    /// cleared.
    pub fn emit(&mut self, rr_order: &[usize]) -> Vec<Message> {
        let mut messages = Vec::new();
        if self.s_br {
            messages.push(Message::Broadcast {
                sender: self.id,
                y_s: self.state.y_s,
                z_s: self.state.z_s,
            });
            self.tx_count += 1;
            self.tx_link_count += rr_order.len() as u64;
            self.s_br = false;
        }
        if self.m_tr {
            if rr_order.is_empty() {
                // No out-neighbors to forward to (only reachable on
                // non-strongly-connected graphs): keep the mass.
                self.m_tr = false;
            } else {
                assert!(self.mass.z > 0, "directed emission with zero mass");
                messages.push(Message::Directed {
                    sender: self.id,
                    receiver: rr_order[self.rr_cursor],
                    y: self.mass.y,
                    z: self.mass.z,
                });
                self.rr_cursor = (self.rr_cursor + 1) % rr_order.len();
                self.mass = MassPair::ZERO;
                self.m_tr = false;
                self.tx_count += 1;
                self.tx_link_count += 1;
            }
        }
        messages
    }

    /// One full round: merge incoming masses, then — only if the inbox is
    /// non-empty — evaluate the three condition sets in order and emit.
    /// An empty inbox leaves the node untouched (hibernation).
    pub fn node_round(&mut self, inbox: &Inbox, rr_order: &[usize]) -> RoundOutcome {
        self.merge_masses(&inbox.masses);
        let post_merge_mass = self.mass;
        let evaluated = !inbox.is_empty();
        let messages = if evaluated {
            self.comp_count += 1;
            self.apply_condition_1(&inbox.states);
            self.apply_condition_2();
            self.apply_condition_3();
            self.emit(rr_order)
        } else {
            Vec::new()
        };
        RoundOutcome {
            messages,
            post_merge_mass,
            evaluated,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn node(mass: (i64, u64), state: (i64, u64)) -> NodeState {
        NodeState {
            id: 0,
            mass: MassPair {
                y: mass.0,
                z: mass.1,
            },
            state: StateTriple {
                y_s: state.0,
                z_s: state.1,
            },
            s_br: false,
            m_tr: false,
            rr_cursor: 0,
            tx_count: 0,
            tx_link_count: 0,
            comp_count: 0,
            merge_count: 0,
        }
    }

    #[test]
    fn init_sets_unit_mass_and_broadcast() {
        let (n, msg) = NodeState::init(0, 2, 2);
        assert_eq!(n.mass, MassPair { y: 2, z: 1 });
        assert_eq!(n.state, StateTriple { y_s: 2, z_s: 1 });
        assert_eq!(n.state.q_s(), (2, 1));
        assert!(!n.s_br && !n.m_tr);
        assert_eq!(
            msg,
            Message::Broadcast {
                sender: 0,
                y_s: 2,
                z_s: 1
            }
        );

        let (zero, _) = NodeState::init(1, 0, 1);
        assert_eq!((zero.mass.y, zero.mass.z), (0, 1));
        assert_eq!(zero.state.q_s(), (0, 1));

        let (neg, _) = NodeState::init(2, -5, 1);
        assert_eq!((neg.mass.y, neg.mass.z), (-5, 1));
        assert_eq!(neg.state.q_s(), (-5, 1));
    }

    #[test]
    fn merge_sums_component_wise() {
        let mut n = node((9, 1), (9, 1));
        n.merge_masses(&[(2, 1)]);
        assert_eq!(n.mass, MassPair { y: 11, z: 2 });

        let mut idle = node((3, 2), (3, 2));
        idle.merge_masses(&[]);
        assert_eq!(idle.mass, MassPair { y: 3, z: 2 });

        let mut empty = node((0, 0), (1, 1));
        empty.merge_masses(&[(3, 1), (4, 1)]);
        assert_eq!(empty.mass, MassPair { y: 7, z: 2 });
    }

    proptest! {
        /// Oracle: merging equals element-wise addition of all payloads.
        #[test]
        fn merge_matches_elementwise_sum(
            y0 in -1000i64..1000, z0 in 0u64..10,
            payloads in proptest::collection::vec((-1000i64..1000, 1u64..10), 0..8),
        ) {
            let y0 = if z0 == 0 { 0 } else { y0 };
            let mut n = node((y0, z0), (1, 1));
            n.merge_masses(&payloads);
            let want_y = y0 + payloads.iter().map(|p| p.0).sum::<i64>();
            let want_z = z0 + payloads.iter().map(|p| p.1).sum::<u64>();
            prop_assert_eq!(n.mass, MassPair { y: want_y, z: want_z });
            prop_assert_eq!(n.merge_count, payloads.len() as u64);
        }
    }

    #[test]
    fn leading_order_ranks_z_then_y() {
        assert_eq!(leading_order((2, 11), (1, 9)), Ordering::Greater);
        assert_eq!(leading_order((1, 9), (1, 7)), Ordering::Greater);
        assert_eq!(leading_order((3, 5), (3, 5)), Ordering::Equal);
    }

    #[test]
    fn condition_1_adopts_dominating_received_state() {
        // v_1 in the demo network at k=0: receives (4,1) and (7,1).
        let mut n = node((2, 1), (2, 1));
        n.apply_condition_1(&[(4, 1), (7, 1)]);
        assert_eq!(n.state, StateTriple { y_s: 7, z_s: 1 });
        assert!(n.s_br);

        let mut unmoved = node((9, 1), (9, 1));
        unmoved.apply_condition_1(&[(7, 1)]);
        assert_eq!(unmoved.state, StateTriple { y_s: 9, z_s: 1 });
        assert!(!unmoved.s_br);

        let mut silent = node((2, 1), (2, 1));
        silent.apply_condition_1(&[]);
        assert_eq!(silent.state, StateTriple { y_s: 2, z_s: 1 });
        assert!(!silent.s_br);
    }

    #[test]
    fn condition_1_takes_max_z_then_max_y() {
        let mut n = node((0, 1), (0, 1));
        n.apply_condition_1(&[(9, 1), (3, 2), (1, 2)]);
        assert_eq!(n.state, StateTriple { y_s: 3, z_s: 2 });
    }

    #[test]
    fn condition_1_ties_do_not_retrigger() {
        let mut n = node((0, 0), (11, 2));
        n.apply_condition_1(&[(11, 2)]);
        assert!(!n.s_br);
    }

    #[test]
    fn condition_2_promotes_dominating_mass() {
        // v_4 at k=1: merged mass (11,2) beats state (9,1).
        let mut n = node((11, 2), (9, 1));
        n.apply_condition_2();
        assert_eq!(n.state, StateTriple { y_s: 11, z_s: 2 });
        assert!(n.s_br);

        let mut zero = node((0, 0), (5, 1));
        zero.apply_condition_2();
        assert_eq!(zero.state, StateTriple { y_s: 5, z_s: 1 });
        assert!(!zero.s_br);

        let mut equal = node((5, 1), (5, 1));
        equal.apply_condition_2();
        assert!(!equal.s_br);
    }

    #[test]
    fn condition_3_marks_follower_masses() {
        // v_1 at k=1: mass (2,1) below adopted state (7,1).
        let mut n = node((2, 1), (7, 1));
        n.apply_condition_3();
        assert!(n.m_tr);

        let mut zero = node((0, 0), (7, 1));
        zero.apply_condition_3();
        assert!(!zero.m_tr);

        let mut leader = node((7, 1), (7, 1));
        leader.apply_condition_3();
        assert!(!leader.m_tr);
    }

    #[test]
    fn emit_orders_broadcast_then_directed_and_zeroes_mass() {
        let mut n = node((2, 1), (7, 1));
        n.s_br = true;
        n.m_tr = true;
        let msgs = n.emit(&[3, 2]);
        assert_eq!(
            msgs,
            vec![
                Message::Broadcast {
                    sender: 0,
                    y_s: 7,
                    z_s: 1
                },
                Message::Directed {
                    sender: 0,
                    receiver: 3,
                    y: 2,
                    z: 1
                },
            ]
        );
        assert_eq!(n.mass, MassPair::ZERO);
        assert!(!n.s_br && !n.m_tr);
        assert_eq!(n.rr_cursor, 1);
        assert_eq!(n.tx_count, 2);
        assert_eq!(n.tx_link_count, 3);
    }

    #[test]
    fn emit_without_flags_is_silent() {
        let mut n = node((2, 1), (7, 1));
        assert!(n.emit(&[1]).is_empty());
        assert_eq!(n.tx_count, 0);
    }

    #[test]
    fn round_robin_cursor_advances_cyclically() {
        // First directed goes to priority 0, the next to priority 1,
        // then back to priority 0.
        let mut n = node((2, 1), (7, 1));
        let order = [3, 2];
        let mut targets = Vec::new();
        for _ in 0..3 {
            n.mass = MassPair { y: 1, z: 1 };
            n.m_tr = true;
            let msgs = n.emit(&order);
            match &msgs[0] {
                Message::Directed { receiver, .. } => targets.push(*receiver),
                other => panic!("unexpected {other:?}"),
            }
        }
        assert_eq!(targets, vec![3, 2, 3]);
    }

    #[test]
    fn node_round_runs_full_pipeline() {
        // v_4 at k=1 in the demo network: inbox holds the broadcast (7,1)
        // from v_1 and the directed mass (2,1) from v_1.
        let mut n = node((9, 1), (9, 1));
        n.id = 3;
        let inbox = Inbox {
            states: vec![(7, 1)],
            masses: vec![(2, 1)],
        };
        let outcome = n.node_round(&inbox, &[1]);
        assert_eq!(outcome.post_merge_mass, MassPair { y: 11, z: 2 });
        assert_eq!(n.state, StateTriple { y_s: 11, z_s: 2 });
        assert_eq!(
            outcome.messages,
            vec![Message::Broadcast {
                sender: 3,
                y_s: 11,
                z_s: 2
            }]
        );
        assert_eq!(n.comp_count, 1);
    }

    #[test]
    fn empty_inbox_hibernates() {
        let mut n = node((7, 1), (7, 1));
        let before = n.clone();
        let outcome = n.node_round(&Inbox::default(), &[1]);
        assert!(outcome.messages.is_empty());
        assert!(!outcome.evaluated);
        assert_eq!(n, before);
    }
}
