//! Radius-restrained forwarder selection.
//!
//! From its neighbor table alone a node picks the fewest neighbors whose
//! rebroadcast reaches every node two hops away, then designates, for each of
//! those forwarders, next forwarders that reach every node three hops away.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::discovery::NeighborTable;
use crate::topology::{NodeId, NodeSet, Topology, TopologyError};

/// RT(x): designated forwarders and, for each, its designated next forwarders.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ForwardingDirective {
    pub chosen: BTreeMap<NodeId, NodeSet>,
    /// Nodes certain to hold the message once the selector and its chosen
    /// forwarders have transmitted: the selector's radius-2 ball plus
    /// whatever was already covered upstream.
    pub covered_hint: NodeSet,
}

impl ForwardingDirective {
    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn forwarders(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.chosen.keys().copied()
    }

    pub fn designates(&self, node: NodeId) -> bool {
        self.chosen.contains_key(&node)
    }
}

/// Targets still uncovered while a selection is in progress.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResidualSets {
    pub uncovered2: NodeSet,
    pub uncovered3: NodeSet,
}

impl ResidualSets {
    pub fn is_empty(&self) -> bool {
        self.uncovered2.is_empty() && self.uncovered3.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("node {target} is not reachable through any neighbor of {selector}; neighbor table is inconsistent")]
    Uncoverable { selector: NodeId, target: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BruteForceError {
    #[error("{0} neighbors exceeds the exhaustive search limit of {MAX_BRUTE_FORCE_NEIGHBORS}")]
    TooManyNeighbors(usize),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

pub const MAX_BRUTE_FORCE_NEIGHBORS: usize = 20;

pub fn select_forwarders(
    nt: &NeighborTable,
    already_covered: &NodeSet,
) -> Result<ForwardingDirective, SelectError> {
    select_forwarders_seeded(nt, already_covered, &NodeSet::new())
}

/// Greedy forwarder selection.
///
/// Neighbors listed in `preferred` (the next forwarders an upstream node
/// designated for us) are drawn from first; the remaining neighbors are only
/// considered for targets the preferred ones leave uncovered. Ties always go
/// to the lowest id.
pub fn select_forwarders_seeded(
    nt: &NeighborTable,
    already_covered: &NodeSet,
    preferred: &NodeSet,
) -> Result<ForwardingDirective, SelectError> {
    let owner = nt.owner();
    let adjacency = nt.local_adjacency();
    let distances = nt.local_distances();
    let empty = NodeSet::new();
    let adj = |v: NodeId| adjacency.get(&v).unwrap_or(&empty);

    let neighbors = nt.neighbors();
    let at = |d: u32| -> NodeSet {
        distances
            .iter()
            .filter(|&(_, &dv)| dv == d)
            .map(|(&v, _)| v)
            .collect()
    };
    let ring2 = at(2);

    let mut residual = ResidualSets {
        uncovered2: ring2.difference(already_covered).copied().collect(),
        uncovered3: at(3).difference(already_covered).copied().collect(),
    };

    let mut chosen: BTreeMap<NodeId, NodeSet> = BTreeMap::new();

    let seeded: Vec<NodeId> = neighbors.intersection(preferred).copied().collect();
    let all: Vec<NodeId> = neighbors.iter().copied().collect();
    for pool in [&seeded, &all] {
        while let Some(best) = pick_max(pool, &residual.uncovered2, |i| adj(i)) {
            for v in adj(best) {
                residual.uncovered2.remove(v);
            }
            chosen.entry(best).or_default();
        }
    }
    if let Some(&target) = residual.uncovered2.first() {
        return Err(SelectError::Uncoverable {
            selector: owner,
            target,
        });
    }

    // Second ring: designate dist-2 nodes (reached over shortest paths only)
    // that cover dist-3 targets. Candidates behind an already chosen
    // forwarder come first.
    let reachable_by_chosen: Vec<NodeId> = ring2
        .iter()
        .copied()
        .filter(|u| adj(*u).iter().any(|i| chosen.contains_key(i)))
        .collect();
    let ring2_all: Vec<NodeId> = ring2.iter().copied().collect();
    for pool in [&reachable_by_chosen, &ring2_all] {
        while let Some(best) = pick_max(pool, &residual.uncovered3, |u| adj(u)) {
            for v in adj(best) {
                residual.uncovered3.remove(v);
            }
            let parent = adj(best)
                .iter()
                .copied()
                .find(|i| chosen.contains_key(i))
                .or_else(|| adj(best).iter().copied().find(|i| neighbors.contains(i)))
                .ok_or(SelectError::Uncoverable {
                    selector: owner,
                    target: best,
                })?;
            chosen.entry(parent).or_default().insert(best);
        }
    }
    if let Some(&target) = residual.uncovered3.first() {
        return Err(SelectError::Uncoverable {
            selector: owner,
            target,
        });
    }

    // Every chosen forwarder transmits at least once, so the whole second
    // ring is guaranteed to hear the message. The third ring is not: it
    // depends on how the forwarders re-select.
    let mut covered_hint = already_covered.clone();
    covered_hint.insert(owner);
    covered_hint.extend(neighbors.iter().copied());
    covered_hint.extend(ring2.iter().copied());

    Ok(ForwardingDirective {
        chosen,
        covered_hint,
    })
}

/// Candidate with the largest positive overlap with `remaining`; first wins
/// ties because candidates are scanned in ascending id order.
fn pick_max<'a, F>(candidates: &[NodeId], remaining: &NodeSet, reach: F) -> Option<NodeId>
where
    F: Fn(NodeId) -> &'a NodeSet,
{
    if remaining.is_empty() {
        return None;
    }
    let mut best: Option<(usize, NodeId)> = None;
    for &c in candidates {
        let gain = reach(c).intersection(remaining).count();
        if gain > 0 && best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, c));
        }
    }
    best.map(|(_, c)| c)
}

/// Smallest number of neighbors of `x` whose neighborhoods jointly contain
/// every node at distance exactly 2, by exhaustive subset search.
pub fn brute_force_min_forwarders(t: &Topology, x: NodeId) -> Result<usize, BruteForceError> {
    let neighbors: Vec<NodeId> = t.neighbors(x)?.into_iter().collect();
    if neighbors.len() > MAX_BRUTE_FORCE_NEIGHBORS {
        return Err(BruteForceError::TooManyNeighbors(neighbors.len()));
    }
    let targets: Vec<NodeId> = t.nodes_within_radius(x, 2, 2)?.into_iter().collect();
    if targets.is_empty() {
        return Ok(0);
    }
    let words = targets.len().div_ceil(64);
    let masks: Vec<Vec<u64>> = neighbors
        .iter()
        .map(|&i| {
            let mut m = alloc::vec![0u64; words];
            for (k, v) in targets.iter().enumerate() {
                if t.are_adjacent(i, *v) {
                    m[k / 64] |= 1 << (k % 64);
                }
            }
            m
        })
        .collect();
    let mut full = alloc::vec![u64::MAX; words];
    if !targets.len().is_multiple_of(64) {
        full[words - 1] = (1u64 << (targets.len() % 64)) - 1;
    }

    let n = neighbors.len();
    let mut acc = alloc::vec![0u64; words];
    for size in 1..=n {
        // Gosper's hack over all n-bit masks with `size` bits set.
        let mut subset: u64 = (1u64 << size) - 1;
        while subset < (1u64 << n) {
            acc.iter_mut().for_each(|w| *w = 0);
            let mut bits = subset;
            while bits != 0 {
                let k = bits.trailing_zeros() as usize;
                for (a, m) in acc.iter_mut().zip(&masks[k]) {
                    *a |= m;
                }
                bits &= bits - 1;
            }
            if acc == full {
                return Ok(size);
            }
            let c = subset & subset.wrapping_neg();
            let r = subset + c;
            subset = (((r ^ subset) >> 2) / c) | r;
        }
    }
    // Every dist-2 node has a neighbor of x on its shortest path.
    unreachable!("the full neighbor set always covers the second ring")
}
