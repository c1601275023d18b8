//! Fixtures and independent oracles shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vidcast_core::forwarding::ForwardingDirective;
use vidcast_core::octree::{best_flow, Cuboid, FlowRegistry, PreparedGof};
use vidcast_core::topology::generators;
use vidcast_core::{Dims, GroupOfFrames, NodeId, NodeSet, QuantSpec, Topology, Volume};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seeded random connected graph with `n` nodes and roughly `n/2` chords.
pub fn random_graph(seed: u64, n_lo: usize, n_hi: usize) -> Topology {
    let mut r = rng(seed);
    let n = r.gen_range(n_lo..=n_hi);
    let extra = r.gen_range(0..=n);
    generators::random_connected(&mut r, n, extra)
}

/// Checks a directive against ground truth:
/// keys are neighbors of `x`, designated next forwarders are neighbors of
/// their forwarder at distance 2, every uncovered dist-2 node is adjacent to
/// a forwarder and every uncovered dist-3 node to a designated next forwarder.
pub fn directive_violations(
    t: &Topology,
    x: NodeId,
    dir: &ForwardingDirective,
    already_covered: &NodeSet,
) -> Vec<String> {
    let mut bad = Vec::new();
    let dist = t.distances_from(x);
    for (&i, next) in &dir.chosen {
        if !t.are_adjacent(x, i) {
            bad.push(format!("forwarder {i} is not a neighbor of {x}"));
        }
        for &u in next {
            if !t.are_adjacent(i, u) {
                bad.push(format!("next forwarder {u} is not adjacent to {i}"));
            }
            if dist[u.index()] != Some(2) {
                bad.push(format!("next forwarder {u} is not at distance 2"));
            }
        }
    }
    for v in t.nodes() {
        if already_covered.contains(&v) {
            continue;
        }
        match dist[v.index()] {
            Some(2) if !dir.chosen.keys().any(|&i| t.are_adjacent(i, v)) => {
                bad.push(format!("dist-2 node {v} uncovered"));
            }
            Some(3) if !dir.chosen.values().flatten().any(|&u| t.are_adjacent(u, v)) => {
                bad.push(format!("dist-3 node {v} uncovered"));
            }
            _ => {}
        }
    }
    bad
}

pub const GOF_DIMS: Dims = Dims::new(8, 16, 16);

pub fn texture_gof(seed: u64, dims: Dims) -> GroupOfFrames {
    let mut r = rng(seed);
    let frame: Vec<u8> = (0..dims.h * dims.w)
        .map(|_| r.gen_range(64..=192))
        .collect();
    Volume::from_fn(dims, |_, y, x| frame[y * dims.w + x])
}

/// 2×2 bright dot on mid-gray moving one row down per frame.
pub fn dot_gof() -> GroupOfFrames {
    Volume::from_fn(GOF_DIMS, |t, y, x| {
        let top = 4 + t;
        if (top..top + 2).contains(&y) && (6..8).contains(&x) {
            255
        } else {
            128
        }
    })
}

/// Left half a static checkerboard, right half a 2×2 dot moving one row
/// down per frame.
pub fn two_region_gof() -> GroupOfFrames {
    Volume::from_fn(GOF_DIMS, |t, y, x| {
        if x < GOF_DIMS.w / 2 {
            if (y / 2 + x / 2) % 2 == 0 {
                64
            } else {
                192
            }
        } else if (4 + t..6 + t).contains(&y) && (11..13).contains(&x) {
            255
        } else {
            128
        }
    })
}

pub fn random_gof(seed: u64, dims: Dims) -> GroupOfFrames {
    let mut r = rng(seed);
    Volume::from_fn(dims, |_, _, _| r.gen())
}

/// Exhaustive pruning oracle: enumerates every pruning of the oct-tree down
/// to `max_depth` and returns the cheapest total cost together with its leaf
/// list. Per-node costs come from `best_flow`; subtree costs are summed in
/// child order. Ties keep the earlier enumerated pruning, which is the
/// unsplit one.
pub fn brute_force_segmentation(
    gof: &GroupOfFrames,
    q: &QuantSpec,
    max_depth: u32,
    registry: &FlowRegistry,
) -> (f64, Vec<Cuboid>, usize) {
    let prepared = PreparedGof::new(gof).unwrap();
    let all = prunings(&prepared, prepared.root(), max_depth, q, registry);
    let count = all.len();
    let mut best = all[0].clone();
    for p in all.into_iter().skip(1) {
        if p.0 < best.0 {
            best = p;
        }
    }
    (best.0, best.1, count)
}

fn prunings(
    g: &PreparedGof,
    node: Cuboid,
    depth: u32,
    q: &QuantSpec,
    registry: &FlowRegistry,
) -> Vec<(f64, Vec<Cuboid>)> {
    let own = best_flow(g, &node, q, registry).unwrap().cost;
    let mut out = vec![(own, vec![node])];
    let children = if depth > 0 {
        node.children()
    } else {
        Vec::new()
    };
    if children.is_empty() {
        return out;
    }
    let per_child: Vec<Vec<(Vec<f64>, Vec<Cuboid>)>> = children
        .iter()
        .map(|&c| {
            prunings(g, c, depth - 1, q, registry)
                .into_iter()
                .map(|(cost, leaves)| (vec![cost], leaves))
                .collect()
        })
        .collect();
    // Cartesian product of child prunings.
    let mut combos: Vec<(Vec<f64>, Vec<Cuboid>)> = vec![(Vec::new(), Vec::new())];
    for options in per_child {
        let mut next = Vec::with_capacity(combos.len() * options.len());
        for (costs, leaves) in &combos {
            for (c, l) in &options {
                let mut costs = costs.clone();
                costs.extend(c);
                let mut leaves = leaves.clone();
                leaves.extend(l);
                next.push((costs, leaves));
            }
        }
        combos = next;
    }
    for (costs, leaves) in combos {
        let total: f64 = costs.iter().sum();
        out.push((total, leaves));
    }
    out
}
