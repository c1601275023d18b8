//! Hello-round neighbor discovery.
//!
//! Every node learns, for each neighbor `i`, the adjacency of `i` and the
//! adjacency of each of `i`'s neighbors. That is exactly the knowledge needed
//! to reason about every node within three hops of itself.
//!
//! Rounds are synchronous. In round 1 each node announces its id; from round 2
//! on it advertises what it has heard so far, but never more than its own
//! radius-2 view, so tables are stable from round 3 onwards.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::topology::{NodeId, NodeSet, Topology};

/// What `owner` has learned through one neighbor `i`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NeighborEntry {
    /// N(i) \ {owner}.
    pub neighbors: NodeSet,
    /// For each j in N(i): N(j) \ {i, owner}.
    pub via: BTreeMap<NodeId, NodeSet>,
}

impl NeighborEntry {
    /// Nodes within two hops of the neighbor, excluding the neighbor itself
    /// and the table owner.
    pub fn reach(&self) -> NodeSet {
        let mut out = self.neighbors.clone();
        for set in self.via.values() {
            out.extend(set.iter().copied());
        }
        out
    }
}

/// NT(x): one entry per neighbor of `owner`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborTable {
    owner: NodeId,
    entries: BTreeMap<NodeId, NeighborEntry>,
}

impl NeighborTable {
    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn entries(&self) -> &BTreeMap<NodeId, NeighborEntry> {
        &self.entries
    }

    pub fn entry(&self, neighbor: NodeId) -> Option<&NeighborEntry> {
        self.entries.get(&neighbor)
    }

    /// N(owner) as learned in the first round.
    pub fn neighbors(&self) -> NodeSet {
        self.entries.keys().copied().collect()
    }

    /// T(owner): neighbors plus everything reachable through them.
    pub fn known_set(&self) -> NodeSet {
        let mut out = self.neighbors();
        for entry in self.entries.values() {
            out.extend(entry.reach());
        }
        out.remove(&self.owner);
        out
    }

    /// Adjacency of the known radius-3 neighborhood, reconstructed purely
    /// from this table. Edges among nodes at distance 3 are never learned.
    pub fn local_adjacency(&self) -> BTreeMap<NodeId, NodeSet> {
        let mut adj: BTreeMap<NodeId, NodeSet> = BTreeMap::new();
        let mut link = |a: NodeId, b: NodeId| {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        };
        for (&i, entry) in &self.entries {
            link(self.owner, i);
            for &j in &entry.neighbors {
                link(i, j);
            }
            for (&j, far) in &entry.via {
                for &v in far {
                    link(j, v);
                }
            }
        }
        adj
    }

    /// Hop distance from the owner for every known node, computed on
    /// [`Self::local_adjacency`]. Exact up to distance 3.
    pub fn local_distances(&self) -> BTreeMap<NodeId, u32> {
        let adj = self.local_adjacency();
        let mut dist = BTreeMap::new();
        dist.insert(self.owner, 0u32);
        let mut frontier = alloc::vec![self.owner];
        let mut d = 0;
        while !frontier.is_empty() {
            d += 1;
            let mut next = Vec::new();
            for u in frontier {
                for &v in adj.get(&u).into_iter().flatten() {
                    if let alloc::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                        e.insert(d);
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        dist
    }
}

/// What one node broadcasts in a round.
#[derive(Clone, Debug)]
enum Advert {
    Hello,
    View {
        neighbors: NodeSet,
        second: BTreeMap<NodeId, NodeSet>,
    },
}

/// Tables for every node after a discovery run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Discovery {
    rounds: u32,
    tables: Vec<NeighborTable>,
}

impl Discovery {
    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn table(&self, x: NodeId) -> Option<&NeighborTable> {
        self.tables.get(x.index())
    }

    pub fn tables(&self) -> &[NeighborTable] {
        &self.tables
    }
}

/// Run `rounds` synchronous discovery rounds over `topology`.
///
/// # Panics
///
/// If `rounds` is zero.
pub fn run_discovery(topology: &Topology, rounds: u32) -> Discovery {
    assert!(rounds >= 1, "discovery needs at least one round");
    let n = topology.len();
    let mut tables: Vec<NeighborTable> = topology
        .nodes()
        .map(|owner| NeighborTable {
            owner,
            entries: BTreeMap::new(),
        })
        .collect();

    for round in 1..=rounds {
        // Everything broadcast in a round is computed from the state at the
        // start of the round.
        let adverts: Vec<Advert> = if round == 1 {
            alloc::vec![Advert::Hello; n]
        } else {
            tables
                .iter()
                .map(|t| Advert::View {
                    neighbors: t.neighbors(),
                    second: t
                        .entries
                        .iter()
                        .map(|(&j, e)| (j, e.neighbors.clone()))
                        .collect(),
                })
                .collect()
        };

        for sender in topology.nodes() {
            let advert = &adverts[sender.index()];
            for &receiver in topology.adjacent(sender) {
                let entry = tables[receiver.index()].entries.entry(sender).or_default();
                if let Advert::View { neighbors, second } = advert {
                    entry.neighbors = neighbors
                        .iter()
                        .copied()
                        .filter(|&v| v != receiver)
                        .collect();
                    entry.via = second
                        .iter()
                        .map(|(&j, far)| {
                            let far = far.iter().copied().filter(|&v| v != receiver).collect();
                            (j, far)
                        })
                        .collect();
                }
            }
        }
    }

    Discovery { rounds, tables }
}
