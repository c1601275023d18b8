//! Subcommand bodies. Each one computes its full output before anything is
//! written, so a failing run leaves no partial file behind.

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use vidcast_core::flood::FloodSim;
use vidcast_core::forwarding::select_forwarders;
use vidcast_core::octree::DEFAULT_MAX_DEPTH;
use vidcast_core::packet::DEFAULT_MTU;
use vidcast_core::topology::generators;
use vidcast_core::transport::transmit_gof;
use vidcast_core::*;

use crate::config::{Format, RunArgs, DEFAULT_NODES};
use crate::io;

/// What a subcommand produced and whether every stage succeeded.
pub struct Output {
    pub bytes: Vec<u8>,
    pub ok: bool,
}

impl Output {
    fn ok(bytes: Vec<u8>) -> Self {
        Output { bytes, ok: true }
    }
}

/// A topology to run on, tagged with the seed that generated it.
struct Graph {
    trial: usize,
    seed: Option<u64>,
    topology: Topology,
}

fn random_graph(seed: u64, nodes: usize) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generators::random_connected(&mut rng, nodes, nodes / 2)
}

/// `--topology`, or `--trials` random graphs seeded from `--seed`.
fn graphs(a: &RunArgs) -> Result<Vec<Graph>> {
    if let Some(path) = &a.topology {
        if a.trials.is_some_and(|t| t > 1) {
            bail!("--trials needs random topologies; drop --topology");
        }
        return Ok(vec![Graph {
            trial: 0,
            seed: None,
            topology: io::load_topology(path)?,
        }]);
    }
    let Some(seed) = a.seed else {
        bail!("give --topology, or --seed for a random topology");
    };
    let nodes = a.nodes.unwrap_or(DEFAULT_NODES);
    if nodes == 0 {
        bail!("--nodes must be positive");
    }
    let trials = a.trials.unwrap_or(1);
    Ok((0..trials)
        .map(|trial| {
            let seed = seed.wrapping_add(trial as u64);
            Graph {
                trial,
                seed: Some(seed),
                topology: random_graph(seed, nodes),
            }
        })
        .collect())
}

fn source_of(t: &Topology, a: &RunArgs) -> Result<NodeId> {
    match &a.source {
        Some(label) => t
            .id_of(label)
            .map_err(|_| anyhow!("unknown source node `{label}`")),
        None => Ok(NodeId(0)),
    }
}

fn sources_of(t: &Topology, a: &RunArgs) -> Result<Vec<NodeId>> {
    match &a.source {
        Some(_) => Ok(vec![source_of(t, a)?]),
        None => Ok(t.nodes().collect()),
    }
}

fn label(t: &Topology, x: NodeId) -> String {
    t.label(x).unwrap_or_default().to_owned()
}

fn labels(t: &Topology, set: &NodeSet) -> Vec<String> {
    set.iter().map(|&v| label(t, v)).collect()
}

fn render<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            Ok(w.into_inner().map_err(|e| anyhow!("csv: {e}"))?)
        }
        Format::Json => json(rows),
    }
}

/// A single record: one header and row in csv, a bare object in json.
fn render_one<T: Serialize>(record: &T, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => render(std::slice::from_ref(record), format),
        Format::Json => json(record),
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

#[derive(Serialize)]
struct TableDump {
    rounds: u32,
    nodes: Vec<NodeDump>,
}

#[derive(Serialize)]
struct NodeDump {
    id: u32,
    label: String,
    neighbors: Vec<String>,
    table: Vec<EntryDump>,
    known: Vec<String>,
    forwarders: Vec<EntryDump>,
}

#[derive(Serialize)]
struct EntryDump {
    node: String,
    nodes: Vec<String>,
}

/// NT(x) for every node, with the directive each would issue as a source.
pub fn discover(a: &RunArgs) -> Result<Output> {
    if a.format == Some(Format::Csv) {
        bail!("discover only writes json");
    }
    let path = a
        .topology
        .as_ref()
        .ok_or_else(|| anyhow!("--topology is required"))?;
    let t = io::load_topology(path)?;
    let d = run_discovery(&t, DISCOVERY_ROUNDS);
    let mut nodes = Vec::with_capacity(t.len());
    for x in t.nodes() {
        let nt = d.table(x).expect("one table per node");
        let dir = select_forwarders(nt, &NodeSet::new())?;
        nodes.push(NodeDump {
            id: x.0,
            label: label(&t, x),
            neighbors: labels(&t, &nt.neighbors()),
            table: nt
                .entries()
                .iter()
                .map(|(&i, e)| EntryDump {
                    node: label(&t, i),
                    nodes: labels(&t, &e.reach()),
                })
                .collect(),
            known: labels(&t, &nt.known_set()),
            forwarders: dir
                .chosen
                .iter()
                .map(|(&i, next)| EntryDump {
                    node: label(&t, i),
                    nodes: labels(&t, next),
                })
                .collect(),
        });
    }
    Ok(Output::ok(json(&TableDump {
        rounds: d.rounds(),
        nodes,
    })?))
}

#[derive(Serialize)]
struct FloodRow {
    trial: usize,
    seed: Option<u64>,
    source: String,
    mode: &'static str,
    nodes: usize,
    edges: usize,
    transmissions: u64,
    receptions: u64,
    duplicates: u64,
    delivered: usize,
    rounds: u32,
}

/// Fan out over graphs in parallel; rows come back in trial order.
fn per_graph<R, F>(a: &RunArgs, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(&Graph) -> Result<Vec<R>> + Sync,
{
    let graphs = graphs(a)?;
    let chunks: Vec<Vec<R>> = graphs.par_iter().map(&f).collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

pub fn flood(a: &RunArgs) -> Result<Output> {
    let mode = a.mode()?;
    let rows = per_graph(a, |g| {
        let t = &g.topology;
        let d = run_discovery(t, DISCOVERY_ROUNDS);
        let source = source_of(t, a)?;
        let r = FloodSim::new(t, &d)?.flood(source, mode, &[])?.report;
        Ok(vec![FloodRow {
            trial: g.trial,
            seed: g.seed,
            source: label(t, source),
            mode: mode.as_str(),
            nodes: t.len(),
            edges: t.edge_count(),
            transmissions: r.transmissions,
            receptions: r.receptions,
            duplicates: r.duplicates,
            delivered: r.delivered.len(),
            rounds: r.rounds,
        }])
    })?;
    let ok = rows.iter().all(|r| r.delivered == r.nodes);
    Ok(Output {
        bytes: render(&rows, a.format())?,
        ok,
    })
}

#[derive(Serialize)]
struct CompareRow {
    trial: usize,
    seed: Option<u64>,
    source: String,
    nodes: usize,
    edges: usize,
    tx_naive: u64,
    tx_rrdbfsf: u64,
    dup_naive: u64,
    dup_rrdbfsf: u64,
    rounds_naive: u32,
    rounds_rrdbfsf: u32,
    delivered_naive: usize,
    delivered_rrdbfsf: usize,
    ratio: f64,
}

/// Both modes from every requested source (all nodes by default).
pub fn compare(a: &RunArgs) -> Result<Output> {
    let rows = per_graph(a, |g| {
        let t = &g.topology;
        let d = run_discovery(t, DISCOVERY_ROUNDS);
        let stats = compare_modes(t, &d, &sources_of(t, a)?)?;
        Ok(stats
            .into_iter()
            .map(|s| CompareRow {
                trial: g.trial,
                seed: g.seed,
                source: label(t, s.source),
                nodes: t.len(),
                edges: t.edge_count(),
                tx_naive: s.tx_naive(),
                tx_rrdbfsf: s.tx_restricted(),
                dup_naive: s.naive.duplicates,
                dup_rrdbfsf: s.restricted.duplicates,
                rounds_naive: s.naive.rounds,
                rounds_rrdbfsf: s.restricted.rounds,
                delivered_naive: s.naive.delivered.len(),
                delivered_rrdbfsf: s.restricted.delivered.len(),
                ratio: s.ratio(),
            })
            .collect())
    })?;
    let ok = rows
        .iter()
        .all(|r| r.delivered_naive == r.nodes && r.delivered_rrdbfsf == r.nodes);
    Ok(Output {
        bytes: render(&rows, a.format())?,
        ok,
    })
}

fn video(a: &RunArgs) -> Result<GroupOfFrames> {
    let width = a.width.ok_or_else(|| anyhow!("--width is required"))?;
    let height = a.height.ok_or_else(|| anyhow!("--height is required"))?;
    io::read_raw_video(a.input()?, width, height, a.frames)
}

fn encoder(a: &RunArgs) -> Result<EncoderConfig> {
    let mut cfg = EncoderConfig::new(a.quant()?);
    cfg.max_depth = a.depth.unwrap_or(DEFAULT_MAX_DEPTH);
    Ok(cfg)
}

fn sse(a: &GroupOfFrames, b: &GroupOfFrames) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum()
}

#[derive(Serialize)]
struct CompressStats {
    width: usize,
    height: usize,
    frames: usize,
    delta: f64,
    lambda: f64,
    max_depth: u32,
    segments: usize,
    nonzeros: usize,
    rate: f64,
    /// Squared error of the unrounded reconstruction.
    distortion: f64,
    /// Squared error of the 8-bit file `decompress` writes.
    distortion_8bit: f64,
    cost: f64,
    bytes: usize,
}

/// Bitstream goes to `--out`; stats go to stdout.
pub fn compress(a: &RunArgs) -> Result<Output> {
    let out = a.required_out()?;
    let gof = video(a)?;
    let cfg = encoder(a)?;
    let enc = encode_gof(&gof, &cfg)?;
    let decoded = decode_gof(&enc.bytes).context("encoder produced an unreadable stream")?;
    let d = gof.dims();
    let tree = &enc.tree;
    let stats = CompressStats {
        width: d.w,
        height: d.h,
        frames: d.t,
        delta: cfg.quant.delta(),
        lambda: lambda_of(&cfg.quant),
        max_depth: cfg.max_depth,
        segments: tree.leaves.len(),
        nonzeros: tree.total_nonzeros(),
        rate: tree.total_rate(),
        distortion: tree.total_distortion(),
        distortion_8bit: sse(&gof, &decoded.to_u8()),
        cost: tree.total_cost,
        bytes: enc.bytes.len(),
    };
    let report = render_one(&stats, a.format())?;
    io::write_file(out, &enc.bytes)?;
    Ok(Output::ok(report))
}

#[derive(Serialize)]
struct DecompressStats {
    width: usize,
    height: usize,
    frames: usize,
    delta: f64,
    segments: usize,
    bytes: usize,
}

/// Raw video goes to `--out`; stats go to stdout.
pub fn decompress(a: &RunArgs) -> Result<Output> {
    let out = a.required_out()?;
    let path = a.input()?;
    let bytes =
        std::fs::read(path).with_context(|| format!("cannot read bitstream {}", path.display()))?;
    let decoded =
        decode_gof(&bytes).with_context(|| format!("cannot decode {}", path.display()))?;
    let d = decoded.dims;
    let stats = DecompressStats {
        width: d.w,
        height: d.h,
        frames: d.t,
        delta: decoded.delta,
        segments: decoded.segments.len(),
        bytes: bytes.len(),
    };
    let report = render_one(&stats, a.format())?;
    io::write_raw_video(out, &decoded.to_u8())?;
    Ok(Output::ok(report))
}

#[derive(Serialize)]
struct NodeRow {
    node: String,
    fragments: usize,
    packets: usize,
    matches_local: bool,
    error: String,
}

#[derive(Serialize)]
struct TransmitSummary {
    source: String,
    mode: &'static str,
    mtu: usize,
    stream_bytes: usize,
    packets: usize,
    transmissions: u64,
    receptions: u64,
    duplicates: u64,
    delivered: usize,
    nodes: Vec<NodeRow>,
}

/// Per-node status; json adds the dissemination totals.
pub fn transmit(a: &RunArgs) -> Result<Output> {
    let gof = video(a)?;
    let graphs = graphs(a)?;
    let [g] = graphs.as_slice() else {
        bail!("transmit runs on a single topology");
    };
    let t = &g.topology;
    let d = run_discovery(t, DISCOVERY_ROUNDS);
    let source = source_of(t, a)?;
    let mode = a.mode()?;
    let cfg = TransmitConfig {
        encoder: encoder(a)?,
        mtu: a.mtu.unwrap_or(DEFAULT_MTU),
        mode,
        msg_id: 1,
    };
    let r = transmit_gof(&gof, t, &d, source, &cfg)?;
    let nodes: Vec<NodeRow> = r
        .nodes
        .iter()
        .map(|s| NodeRow {
            node: label(t, s.node),
            fragments: s.fragments,
            packets: r.packet_count,
            matches_local: s.matches_local,
            error: s.error.as_ref().map(|e| e.to_string()).unwrap_or_default(),
        })
        .collect();
    let ok = r.all_ok();
    let bytes = match a.format() {
        Format::Csv => render(&nodes, Format::Csv)?,
        Format::Json => json(&TransmitSummary {
            source: label(t, source),
            mode: mode.as_str(),
            mtu: cfg.mtu,
            stream_bytes: r.stream_len,
            packets: r.packet_count,
            transmissions: r.total.transmissions,
            receptions: r.total.receptions,
            duplicates: r.total.duplicates,
            delivered: r.total.delivered.len(),
            nodes,
        })?,
    };
    Ok(Output { bytes, ok })
}
