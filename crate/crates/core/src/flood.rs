//! Synchronous-round dissemination engine for naive and restricted flooding.
//!
//! Links have unit latency and never drop messages. Every node transmits a
//! given message at most once.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::discovery::Discovery;
use crate::forwarding::{
    select_forwarders, select_forwarders_seeded, ForwardingDirective, SelectError,
};
use crate::topology::{NodeId, NodeSet, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FloodMode {
    Naive,
    Restricted,
}

impl FloodMode {
    pub const ALL: [FloodMode; 2] = [FloodMode::Naive, FloodMode::Restricted];

    pub fn as_str(self) -> &'static str {
        match self {
            FloodMode::Naive => "naive",
            FloodMode::Restricted => "rrdbfsf",
        }
    }
}

impl fmt::Display for FloodMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FloodMode {
    type Err = FloodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(FloodMode::Naive),
            "rrdbfsf" | "restricted" => Ok(FloodMode::Restricted),
            other => Err(FloodError::UnknownMode(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FloodError {
    #[error("unknown source node {0}")]
    UnknownSource(NodeId),
    #[error("unknown flooding mode `{0}` (expected naive or rrdbfsf)")]
    UnknownMode(alloc::string::String),
    #[error("neighbor tables cover {tables} nodes but the topology has {nodes}")]
    DiscoveryMismatch { tables: usize, nodes: usize },
    #[error(transparent)]
    Select(#[from] SelectError),
}

/// A message in flight, as handed from one transmitter to its listeners.
#[derive(Clone, Debug)]
pub struct FloodMessage {
    pub msg_id: u64,
    pub source: NodeId,
    pub hop: u32,
    pub directive: ForwardingDirective,
    pub payload: Arc<[u8]>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DisseminationReport {
    pub transmissions: u64,
    pub receptions: u64,
    pub duplicates: u64,
    pub delivered: NodeSet,
    pub rounds: u32,
}

impl DisseminationReport {
    /// Fold another message's report into a running total. `delivered`
    /// becomes the set of nodes that received both.
    pub fn accumulate(&mut self, other: &DisseminationReport) {
        if self.transmissions == 0 && self.receptions == 0 && self.delivered.is_empty() {
            self.delivered = other.delivered.clone();
        } else {
            self.delivered = self
                .delivered
                .intersection(&other.delivered)
                .copied()
                .collect();
        }
        self.transmissions += other.transmissions;
        self.receptions += other.receptions;
        self.duplicates += other.duplicates;
        self.rounds = self.rounds.max(other.rounds);
    }
}

/// Report plus the payload each node ended up holding (`None` if it never
/// received the message).
#[derive(Clone, Debug)]
pub struct FloodOutcome {
    pub report: DisseminationReport,
    pub inbox: Vec<Option<Arc<[u8]>>>,
}

/// Flooding engine bound to one topology and its discovery tables.
///
/// Message ids are allocated per engine; each node remembers which ids it
/// has already forwarded.
pub struct FloodSim<'a> {
    topology: &'a Topology,
    discovery: &'a Discovery,
    next_msg_id: u64,
    forwarded: Vec<BTreeSet<u64>>,
}

impl<'a> FloodSim<'a> {
    pub fn new(topology: &'a Topology, discovery: &'a Discovery) -> Result<Self, FloodError> {
        if discovery.tables().len() != topology.len() {
            return Err(FloodError::DiscoveryMismatch {
                tables: discovery.tables().len(),
                nodes: topology.len(),
            });
        }
        Ok(FloodSim {
            topology,
            discovery,
            next_msg_id: 0,
            forwarded: vec![BTreeSet::new(); topology.len()],
        })
    }

    pub fn topology(&self) -> &Topology {
        self.topology
    }

    pub fn flood(
        &mut self,
        source: NodeId,
        mode: FloodMode,
        payload: &[u8],
    ) -> Result<FloodOutcome, FloodError> {
        let t = self.topology;
        if !t.contains(source) {
            return Err(FloodError::UnknownSource(source));
        }
        let n = t.len();
        let msg_id = self.next_msg_id;
        self.next_msg_id += 1;
        let payload: Arc<[u8]> = Arc::from(payload);

        let mut inbox: Vec<Option<Arc<[u8]>>> = vec![None; n];
        inbox[source.index()] = Some(payload.clone());
        let mut report = DisseminationReport::default();
        report.delivered.insert(source);

        let source_directive = match mode {
            FloodMode::Naive => ForwardingDirective::default(),
            FloodMode::Restricted => select_forwarders(self.table(source), &NodeSet::new())?,
        };
        // Transmissions scheduled for the next round, keyed by transmitter so
        // each round runs in ascending id order.
        let mut pending: BTreeMap<NodeId, FloodMessage> = BTreeMap::new();
        self.schedule(
            &mut pending,
            source,
            FloodMessage {
                msg_id,
                source,
                hop: 0,
                directive: source_directive,
                payload,
            },
        );

        while !pending.is_empty() {
            report.rounds += 1;
            debug_assert!(report.rounds as usize <= n, "flood failed to quiesce");
            let current = core::mem::take(&mut pending);
            for (sender, msg) in current {
                report.transmissions += 1;
                for &receiver in t.adjacent(sender) {
                    report.receptions += 1;
                    let first = inbox[receiver.index()].is_none();
                    if first {
                        inbox[receiver.index()] = Some(msg.payload.clone());
                        report.delivered.insert(receiver);
                    }
                    if self.forwarded[receiver.index()].contains(&msg_id)
                        || pending.contains_key(&receiver)
                    {
                        continue;
                    }
                    let next = match mode {
                        FloodMode::Naive if first => Some(ForwardingDirective::default()),
                        FloodMode::Naive => None,
                        FloodMode::Restricted => match msg.directive.chosen.get(&receiver) {
                            Some(seed) => {
                                Some(self.reselect(receiver, sender, &msg.directive, seed)?)
                            }
                            None => None,
                        },
                    };
                    if let Some(directive) = next {
                        self.schedule(
                            &mut pending,
                            receiver,
                            FloodMessage {
                                msg_id,
                                source,
                                hop: msg.hop + 1,
                                directive,
                                payload: msg.payload.clone(),
                            },
                        );
                    }
                }
            }
        }

        let first_receptions = report.delivered.len() as u64 - 1;
        report.duplicates = report.receptions - first_receptions;
        Ok(FloodOutcome { report, inbox })
    }

    fn table(&self, x: NodeId) -> &crate::discovery::NeighborTable {
        self.discovery
            .table(x)
            .expect("discovery tables match topology size")
    }

    /// Nodes without neighbors have nobody to transmit to and stay silent.
    fn schedule(
        &mut self,
        pending: &mut BTreeMap<NodeId, FloodMessage>,
        node: NodeId,
        msg: FloodMessage,
    ) {
        if self.topology.adjacent(node).is_empty() {
            return;
        }
        self.forwarded[node.index()].insert(msg.msg_id);
        pending.insert(node, msg);
    }

    fn reselect(
        &self,
        receiver: NodeId,
        sender: NodeId,
        upstream: &ForwardingDirective,
        seed: &NodeSet,
    ) -> Result<ForwardingDirective, FloodError> {
        let nt = self.table(receiver);
        let mut covered = upstream.covered_hint.clone();
        covered.insert(sender);
        if let Some(entry) = nt.entry(sender) {
            covered.extend(entry.neighbors.iter().copied());
        }
        covered.insert(receiver);
        Ok(select_forwarders_seeded(nt, &covered, seed)?)
    }
}

/// Per-source comparison of the two modes.
#[derive(Clone, Debug, PartialEq)]
pub struct RedundancyStats {
    pub source: NodeId,
    pub naive: DisseminationReport,
    pub restricted: DisseminationReport,
}

impl RedundancyStats {
    pub fn tx_naive(&self) -> u64 {
        self.naive.transmissions
    }

    pub fn tx_restricted(&self) -> u64 {
        self.restricted.transmissions
    }

    /// Restricted transmissions over naive transmissions; 1 when neither
    /// mode transmits (single-node graph).
    pub fn ratio(&self) -> f64 {
        if self.naive.transmissions == 0 {
            1.0
        } else {
            self.restricted.transmissions as f64 / self.naive.transmissions as f64
        }
    }
}

pub fn compare_modes(
    topology: &Topology,
    discovery: &Discovery,
    sources: &[NodeId],
) -> Result<Vec<RedundancyStats>, FloodError> {
    sources
        .iter()
        .map(|&source| {
            let naive = FloodSim::new(topology, discovery)?
                .flood(source, FloodMode::Naive, &[])?
                .report;
            let restricted = FloodSim::new(topology, discovery)?
                .flood(source, FloodMode::Restricted, &[])?
                .report;
            Ok(RedundancyStats {
                source,
                naive,
                restricted,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::run_discovery;
    use crate::topology::generators::*;

    fn run(t: &Topology, source: u32, mode: FloodMode) -> DisseminationReport {
        let d = run_discovery(t, 3);
        FloodSim::new(t, &d)
            .unwrap()
            .flood(NodeId(source), mode, b"x")
            .unwrap()
            .report
    }

    #[test]
    fn naive_path_of_three() {
        let r = run(&path(3), 0, FloodMode::Naive);
        assert_eq!(r.transmissions, 3);
        assert_eq!(r.receptions, 4);
        assert_eq!(r.duplicates, 2);
        assert_eq!(r.delivered.len(), 3);
        assert_eq!(r.rounds, 3);
    }

    #[test]
    fn naive_k4_counts() {
        let r = run(&complete(4), 0, FloodMode::Naive);
        assert_eq!((r.transmissions, r.receptions, r.duplicates), (4, 12, 9));
    }

    #[test]
    fn restricted_star_center_sends_once() {
        let r = run(&star(4), 0, FloodMode::Restricted);
        assert_eq!(r.transmissions, 1);
        assert_eq!(r.duplicates, 0);
        assert_eq!(r.delivered.len(), 5);
    }

    #[test]
    fn single_node_is_silent() {
        let t = Topology::parse("solo").unwrap();
        for mode in FloodMode::ALL {
            let r = run(&t, 0, mode);
            assert_eq!(r.transmissions, 0);
            assert_eq!(r.delivered.len(), 1);
            assert_eq!(r.rounds, 0);
        }
    }

    #[test]
    fn unknown_source_is_rejected() {
        let t = path(3);
        let d = run_discovery(&t, 3);
        let err = FloodSim::new(&t, &d)
            .unwrap()
            .flood(NodeId(9), FloodMode::Naive, &[]);
        assert!(matches!(err, Err(FloodError::UnknownSource(NodeId(9)))));
    }

    #[test]
    fn inbox_holds_payload_everywhere() {
        let t = grid(3, 3);
        let d = run_discovery(&t, 3);
        let out = FloodSim::new(&t, &d)
            .unwrap()
            .flood(NodeId(4), FloodMode::Restricted, b"payload")
            .unwrap();
        assert!(out
            .inbox
            .iter()
            .all(|p| p.as_deref() == Some(&b"payload"[..])));
    }

    #[test]
    fn k4_ratio_is_a_quarter() {
        let t = complete(4);
        let d = run_discovery(&t, 3);
        let stats = compare_modes(&t, &d, &[NodeId(0)]).unwrap();
        assert_eq!(stats[0].tx_naive(), 4);
        assert_eq!(stats[0].tx_restricted(), 1);
        assert_eq!(stats[0].ratio(), 0.25);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("naive".parse::<FloodMode>().unwrap(), FloodMode::Naive);
        assert_eq!(
            "rrdbfsf".parse::<FloodMode>().unwrap(),
            FloodMode::Restricted
        );
        assert!("gossip".parse::<FloodMode>().is_err());
    }
}
