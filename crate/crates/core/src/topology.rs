//! Undirected network graphs, edge-list parsing and hop-distance queries.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

/// Dense node identifier, `0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub type NodeSet = BTreeSet<NodeId>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("topology document contains no nodes")]
    Empty,
    #[error("line {line}: self-loop on node `{label}`")]
    SelfLoop { line: usize, label: String },
    #[error("line {line}: expected `labelA labelB`, found {tokens} tokens")]
    Malformed { line: usize, tokens: usize },
    #[error("graph is disconnected: node `{unreachable}` is unreachable from `{root}`")]
    Disconnected { root: String, unreachable: String },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("unknown node label `{0}`")]
    UnknownLabel(String),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    EdgeOutOfRange(u32, u32, usize),
}

/// Connected, undirected, simple graph with labelled nodes.
///
/// Adjacency lists are kept sorted by id, so every iteration order in the
/// crate is deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    labels: Vec<String>,
    adjacency: Vec<Vec<NodeId>>,
}

impl Topology {
    /// Parse an edge-list document: one `labelA labelB` pair per line.
    ///
    /// `#` starts a comment, blank lines are ignored, and a line holding a
    /// single label declares a node without edges. Labels are interned to
    /// ids in order of first appearance.
    pub fn parse(text: &str) -> Result<Self, TopologyError> {
        let mut ids: BTreeMap<&str, u32> = BTreeMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut edges = Vec::new();

        fn intern<'a>(
            ids: &mut BTreeMap<&'a str, u32>,
            labels: &mut Vec<String>,
            label: &'a str,
        ) -> u32 {
            *ids.entry(label).or_insert_with(|| {
                labels.push(label.to_string());
                (labels.len() - 1) as u32
            })
        }

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match tokens.as_slice() {
                [] => {}
                [single] => {
                    intern(&mut ids, &mut labels, single);
                }
                [a, b] => {
                    if a == b {
                        return Err(TopologyError::SelfLoop {
                            line: lineno + 1,
                            label: a.to_string(),
                        });
                    }
                    let ia = intern(&mut ids, &mut labels, a);
                    let ib = intern(&mut ids, &mut labels, b);
                    edges.push((ia, ib));
                }
                more => {
                    return Err(TopologyError::Malformed {
                        line: lineno + 1,
                        tokens: more.len(),
                    })
                }
            }
        }
        if labels.is_empty() {
            return Err(TopologyError::Empty);
        }
        Self::from_labeled_edges(labels, &edges)
    }

    /// Build from `n` nodes labelled `n0..n{n-1}` and an id edge list.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, TopologyError> {
        let labels = (0..n).map(|i| format!("n{i}")).collect();
        Self::from_labeled_edges(labels, edges)
    }

    pub fn from_labeled_edges(
        labels: Vec<String>,
        edges: &[(u32, u32)],
    ) -> Result<Self, TopologyError> {
        let n = labels.len();
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        let mut sets: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(TopologyError::EdgeOutOfRange(a, b, n));
            }
            if a == b {
                return Err(TopologyError::SelfLoop {
                    line: 0,
                    label: labels[a as usize].clone(),
                });
            }
            sets[a as usize].insert(NodeId(b));
            sets[b as usize].insert(NodeId(a));
        }
        let topo = Topology {
            labels,
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        };
        topo.check_connected()?;
        Ok(topo)
    }

    fn check_connected(&self) -> Result<(), TopologyError> {
        let dist = self.distances_from(NodeId(0));
        if let Some(i) = dist.iter().position(Option::is_none) {
            return Err(TopologyError::Disconnected {
                root: self.labels[0].clone(),
                unreachable: self.labels[i].clone(),
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.labels.len() as u32).map(NodeId)
    }

    pub fn contains(&self, x: NodeId) -> bool {
        x.index() < self.labels.len()
    }

    fn check(&self, x: NodeId) -> Result<(), TopologyError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(TopologyError::UnknownNode(x))
        }
    }

    pub fn label(&self, x: NodeId) -> Option<&str> {
        self.labels.get(x.index()).map(String::as_str)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id_of(&self, label: &str) -> Result<NodeId, TopologyError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| NodeId(i as u32))
            .ok_or_else(|| TopologyError::UnknownLabel(label.to_string()))
    }

    /// Sorted adjacency slice of `x`. Panics on an unknown id.
    pub fn adjacent(&self, x: NodeId) -> &[NodeId] {
        &self.adjacency[x.index()]
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency
            .get(a.index())
            .is_some_and(|adj| adj.binary_search(&b).is_ok())
    }

    /// N(x): the direct neighbors of `x`.
    pub fn neighbors(&self, x: NodeId) -> Result<NodeSet, TopologyError> {
        self.check(x)?;
        Ok(self.adjacency[x.index()].iter().copied().collect())
    }

    /// Hop distances from `x` to every node (`None` when unreachable).
    pub fn distances_from(&self, x: NodeId) -> Vec<Option<u32>> {
        self.bfs(x, u32::MAX)
    }

    fn bfs(&self, x: NodeId, horizon: u32) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[x.index()] = Some(0);
        queue.push_back(x);
        while let Some(u) = queue.pop_front() {
            let du = dist[u.index()].unwrap_or(0);
            if du >= horizon {
                continue;
            }
            for &v in &self.adjacency[u.index()] {
                if dist[v.index()].is_none() {
                    dist[v.index()] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// `{v != x : lo <= dist(x, v) <= hi}`, found by a BFS cut off at `hi`.
    pub fn nodes_within_radius(
        &self,
        x: NodeId,
        lo: u32,
        hi: u32,
    ) -> Result<NodeSet, TopologyError> {
        self.check(x)?;
        if lo > hi {
            return Ok(NodeSet::new());
        }
        Ok(self
            .bfs(x, hi)
            .into_iter()
            .enumerate()
            .filter_map(|(i, d)| match d {
                Some(d) if i != x.index() && d >= lo && d <= hi => Some(NodeId(i as u32)),
                _ => None,
            })
            .collect())
    }

    /// TLen(x): nodes at hop distance 2 or 3.
    pub fn tlen(&self, x: NodeId) -> Result<NodeSet, TopologyError> {
        self.nodes_within_radius(x, 2, 3)
    }

    /// T(x) = N(x) ∪ TLen(x).
    pub fn radius3(&self, x: NodeId) -> Result<NodeSet, TopologyError> {
        self.nodes_within_radius(x, 1, 3)
    }

    /// Edge-list document that parses back to the same ids: every label is
    /// declared first, then one edge per line, lower id first.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for label in &self.labels {
            out.push_str(label);
            out.push('\n');
        }
        for u in self.nodes() {
            for &v in self.adjacent(u).iter().filter(|&&v| v > u) {
                out.push_str(&self.labels[u.index()]);
                out.push(' ');
                out.push_str(&self.labels[v.index()]);
                out.push('\n');
            }
        }
        out
    }
}

/// Graph families used by tests, benchmarks and the CLI.
pub mod generators {
    use super::*;

    pub fn path(n: usize) -> Topology {
        let edges: Vec<_> = (1..n as u32).map(|i| (i - 1, i)).collect();
        Topology::from_edges(n, &edges).expect("path is connected")
    }

    pub fn ring(n: usize) -> Topology {
        assert!(n >= 3, "ring needs at least 3 nodes");
        let mut edges: Vec<_> = (1..n as u32).map(|i| (i - 1, i)).collect();
        edges.push((n as u32 - 1, 0));
        Topology::from_edges(n, &edges).expect("ring is connected")
    }

    /// Node 0 is the center.
    pub fn star(leaves: usize) -> Topology {
        let edges: Vec<_> = (1..=leaves as u32).map(|i| (0, i)).collect();
        Topology::from_edges(leaves + 1, &edges).expect("star is connected")
    }

    pub fn complete(n: usize) -> Topology {
        let mut edges = Vec::new();
        for a in 0..n as u32 {
            for b in a + 1..n as u32 {
                edges.push((a, b));
            }
        }
        Topology::from_edges(n, &edges).expect("complete graph is connected")
    }

    /// `rows × cols` 4-connected grid; node `r * cols + c` is labelled `r{r}c{c}`.
    pub fn grid(rows: usize, cols: usize) -> Topology {
        let mut edges = Vec::new();
        let id = |r: usize, c: usize| (r * cols + c) as u32;
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
            }
        }
        let labels = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| format!("r{r}c{c}")))
            .collect();
        Topology::from_labeled_edges(labels, &edges).expect("grid is connected")
    }

    /// Two cliques of `size` nodes joined by a single bridge edge.
    pub fn two_cluster_bridge(size: usize) -> Topology {
        assert!(size >= 2);
        let mut edges = Vec::new();
        for base in [0u32, size as u32] {
            for a in 0..size as u32 {
                for b in a + 1..size as u32 {
                    edges.push((base + a, base + b));
                }
            }
        }
        edges.push((size as u32 - 1, size as u32));
        Topology::from_edges(2 * size, &edges).expect("bridged clusters are connected")
    }

    /// Random connected graph: a random spanning tree plus `extra` random
    /// chords (duplicates collapse, so the final edge count may be lower).
    pub fn random_connected<R: Rng + ?Sized>(rng: &mut R, n: usize, extra: usize) -> Topology {
        assert!(n >= 1);
        let mut edges = Vec::with_capacity(n + extra);
        for i in 1..n as u32 {
            let parent = rng.gen_range(0..i);
            edges.push((parent, i));
        }
        if n >= 2 {
            for _ in 0..extra {
                let a = rng.gen_range(0..n as u32);
                let b = rng.gen_range(0..n as u32);
                if a != b {
                    edges.push((a, b));
                }
            }
        }
        Topology::from_edges(n, &edges).expect("spanning tree keeps the graph connected")
    }
}
