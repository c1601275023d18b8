//! Oct-tree cuboid segmentation with per-cuboid flow selection.
//!
//! Every node of the tree is coded on its own: its samples are motion
//! compensated along the best flow model, wavelet transformed, quantized and
//! reconstructed, giving a distortion `D` and a modelled rate `R`. The tree is
//! then pruned bottom-up, keeping a split only when the children's optimal
//! costs sum to strictly less than the parent's `D + λR`.

use alloc::vec::Vec;
use core::fmt;

use crate::quant::{bit_cost, dequantize, quantize, QuantSpec, QuantizedBlock};
use crate::volume::{pad_symmetric, Dims, GroupOfFrames, Volume};
use crate::wavelet::{dwt3_forward, dwt3_inverse, WaveletError};

/// Samples are coded relative to mid-gray.
pub const SAMPLE_OFFSET: f64 = 128.0;
pub const DEFAULT_SEARCH_RANGE: i8 = 2;
pub const DEFAULT_MAX_DEPTH: u32 = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OctreeError {
    #[error("flow {0} is not registered")]
    UnregisteredFlow(FlowModel),
    #[error("flow class {0} is reserved and has no implementation")]
    ReservedFlow(u8),
    #[error("translation ({dy}, {dx}) exceeds the search range ±{range}")]
    FlowOutOfRange { dy: i8, dx: i8, range: i8 },
    #[error("cuboid at {origin:?} with size {dims:?} does not fit in {bounds:?}")]
    CuboidOutOfBounds {
        origin: [usize; 3],
        dims: [usize; 3],
        bounds: [usize; 3],
    },
    #[error("group of frames has an empty dimension: {0:?}")]
    EmptyGof([usize; 3]),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
}

/// Axis-aligned block with power-of-two sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cuboid {
    pub origin: [usize; 3],
    pub log2: [u8; 3],
}

impl Cuboid {
    pub fn dims(&self) -> Dims {
        Dims::from_array(self.log2.map(|k| 1usize << k))
    }

    /// Children of one oct-tree split. Axes already at two samples (or
    /// fewer) are not split, so there are 8, 4 or 2 children, or none.
    pub fn children(&self) -> Vec<Cuboid> {
        let split: [bool; 3] = self.log2.map(|k| k > 1);
        if !split.iter().any(|&s| s) {
            return Vec::new();
        }
        let child_log2: [u8; 3] = core::array::from_fn(|a| self.log2[a] - split[a] as u8);
        let half: [usize; 3] = child_log2.map(|k| 1usize << k);
        let mut out = Vec::with_capacity(8);
        for dt in 0..=split[0] as usize {
            for dy in 0..=split[1] as usize {
                for dx in 0..=split[2] as usize {
                    out.push(Cuboid {
                        origin: [
                            self.origin[0] + dt * half[0],
                            self.origin[1] + dy * half[1],
                            self.origin[2] + dx * half[2],
                        ],
                        log2: child_log2,
                    });
                }
            }
        }
        out
    }
}

/// Motion hypothesis applied to a cuboid before the transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FlowModel {
    NoFlow,
    /// Content moves by `(dy, dx)` samples per frame.
    ConstTranslation {
        dy: i8,
        dx: i8,
    },
    Reserved2,
    Reserved3,
}

impl FlowModel {
    pub fn kind(&self) -> u8 {
        match self {
            FlowModel::NoFlow => 0,
            FlowModel::ConstTranslation { .. } => 1,
            FlowModel::Reserved2 => 2,
            FlowModel::Reserved3 => 3,
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            FlowModel::ConstTranslation { .. } => 2,
            _ => 0,
        }
    }

    pub fn params(&self) -> (i8, i8) {
        match *self {
            FlowModel::ConstTranslation { dy, dx } => (dy, dx),
            _ => (0, 0),
        }
    }

    pub fn from_parts(kind: u8, dy: i8, dx: i8) -> Option<FlowModel> {
        match kind {
            0 => Some(FlowModel::NoFlow),
            1 => Some(FlowModel::ConstTranslation { dy, dx }),
            2 => Some(FlowModel::Reserved2),
            3 => Some(FlowModel::Reserved3),
            _ => None,
        }
    }
}

impl fmt::Display for FlowModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowModel::NoFlow => f.write_str("no-flow"),
            FlowModel::ConstTranslation { dy, dx } => write!(f, "translation({dy},{dx})"),
            FlowModel::Reserved2 => f.write_str("reserved-2"),
            FlowModel::Reserved3 => f.write_str("reserved-3"),
        }
    }
}

/// Which flow classes the encoder searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowRegistry {
    translation: bool,
    search_range: i8,
}

impl Default for FlowRegistry {
    fn default() -> Self {
        FlowRegistry {
            translation: true,
            search_range: DEFAULT_SEARCH_RANGE,
        }
    }
}

impl FlowRegistry {
    pub fn no_flow_only() -> Self {
        FlowRegistry {
            translation: false,
            search_range: 0,
        }
    }

    pub fn with_search_range(range: i8) -> Self {
        FlowRegistry {
            translation: true,
            search_range: range.max(0),
        }
    }

    pub fn search_range(&self) -> i8 {
        self.search_range
    }

    /// Reserved classes cannot be enabled.
    pub fn register(&mut self, kind: u8) -> Result<(), OctreeError> {
        match kind {
            0 => Ok(()),
            1 => {
                self.translation = true;
                Ok(())
            }
            k => Err(OctreeError::ReservedFlow(k)),
        }
    }

    /// Candidates in tie-break order: lowest kind first, then `(dy, dx)`
    /// lexicographically.
    pub fn candidates(&self) -> Vec<FlowModel> {
        let mut out = alloc::vec![FlowModel::NoFlow];
        if self.translation {
            let r = self.search_range;
            for dy in -r..=r {
                for dx in -r..=r {
                    out.push(FlowModel::ConstTranslation { dy, dx });
                }
            }
        }
        out
    }

    pub fn check(&self, flow: FlowModel) -> Result<(), OctreeError> {
        match flow {
            FlowModel::NoFlow => Ok(()),
            FlowModel::ConstTranslation { dy, dx } => {
                if !self.translation {
                    Err(OctreeError::UnregisteredFlow(flow))
                } else if dy.unsigned_abs() > self.search_range as u8
                    || dx.unsigned_abs() > self.search_range as u8
                {
                    Err(OctreeError::FlowOutOfRange {
                        dy,
                        dx,
                        range: self.search_range,
                    })
                } else {
                    Ok(())
                }
            }
            FlowModel::Reserved2 | FlowModel::Reserved3 => {
                Err(OctreeError::ReservedFlow(flow.kind()))
            }
        }
    }
}

/// Dimensions the coder works on: each axis padded to a power of two and to
/// at least two samples.
pub fn padded_dims(dims: Dims) -> Dims {
    Dims::from_array(dims.as_array().map(|d| d.next_power_of_two().max(2)))
}

/// Centered, padded samples of a group of frames plus the original support.
#[derive(Clone, Debug)]
pub struct PreparedGof {
    support: Dims,
    samples: Volume<f64>,
}

impl PreparedGof {
    pub fn new(gof: &GroupOfFrames) -> Result<Self, OctreeError> {
        let dims = gof.dims();
        if dims.is_empty() {
            return Err(OctreeError::EmptyGof(dims.as_array()));
        }
        let padded = pad_symmetric(gof, padded_dims(dims));
        Ok(PreparedGof {
            support: dims,
            samples: padded.map(|s| s as f64 - SAMPLE_OFFSET),
        })
    }

    pub fn support(&self) -> Dims {
        self.support
    }

    pub fn padded(&self) -> Dims {
        self.samples.dims()
    }

    pub fn root(&self) -> Cuboid {
        Cuboid {
            origin: [0; 3],
            log2: self.padded().as_array().map(|d| d.trailing_zeros() as u8),
        }
    }

    fn check_cuboid(&self, c: &Cuboid) -> Result<(), OctreeError> {
        let dims = c.dims().as_array();
        let bounds = self.padded().as_array();
        if (0..3).any(|a| c.origin[a] + dims[a] > bounds[a]) {
            return Err(OctreeError::CuboidOutOfBounds {
                origin: c.origin,
                dims,
                bounds,
            });
        }
        Ok(())
    }
}

/// Result of coding one cuboid with one flow model.
#[derive(Clone, Debug, PartialEq)]
pub struct CuboidCoding {
    pub cuboid: Cuboid,
    pub flow: FlowModel,
    pub quantized: QuantizedBlock,
    pub distortion: f64,
    pub rate: f64,
    pub cost: f64,
}

impl CuboidCoding {
    pub fn nonzeros(&self) -> usize {
        self.quantized.nonzeros()
    }
}

fn clamp_index(i: isize, len: usize) -> usize {
    i.clamp(0, len as isize - 1) as usize
}

/// Resample frame `t` of `block` at an offset of `sign · t · (dy, dx)`,
/// clamping at the cuboid edges.
fn shift_frames(block: &Volume<f64>, flow: FlowModel, sign: isize) -> Volume<f64> {
    let (dy, dx) = flow.params();
    if (dy, dx) == (0, 0) {
        return block.clone();
    }
    let d = block.dims();
    Volume::from_fn(d, |t, y, x| {
        let oy = y as isize + sign * t as isize * dy as isize;
        let ox = x as isize + sign * t as isize * dx as isize;
        block.get(t, clamp_index(oy, d.h), clamp_index(ox, d.w))
    })
}

/// Decoder path shared by encoder and bitstream reader: dequantize, invert
/// the transform, undo motion compensation. Output is centered samples.
pub fn reconstruct_cuboid(
    quantized: &QuantizedBlock,
    flow: FlowModel,
    delta: f64,
) -> Result<Volume<f64>, OctreeError> {
    let compensated = dwt3_inverse(&dequantize(quantized, delta))?;
    Ok(shift_frames(&compensated, flow, -1))
}

/// Code `c` under `flow` and price it as `D + λR`.
pub fn cuboid_cost(
    gof: &PreparedGof,
    c: &Cuboid,
    flow: FlowModel,
    q: &QuantSpec,
    registry: &FlowRegistry,
) -> Result<CuboidCoding, OctreeError> {
    registry.check(flow)?;
    gof.check_cuboid(c)?;
    let dims = c.dims();
    let block = gof.samples.extract(c.origin, dims);
    let compensated = shift_frames(&block, flow, 1);
    let quantized = quantize(&dwt3_forward(&compensated)?, q);
    let recon = reconstruct_cuboid(&quantized, flow, q.delta())?;

    let support = gof.support.as_array();
    let mut distortion = 0.0;
    for t in 0..dims.t {
        if c.origin[0] + t >= support[0] {
            break;
        }
        for y in 0..dims.h {
            if c.origin[1] + y >= support[1] {
                break;
            }
            for x in 0..dims.w {
                if c.origin[2] + x >= support[2] {
                    break;
                }
                let e = block.get(t, y, x) - recon.get(t, y, x);
                distortion += e * e;
            }
        }
    }
    let rate = bit_cost(quantized.nonzeros(), flow.param_count(), q);
    Ok(CuboidCoding {
        cuboid: *c,
        flow,
        quantized,
        distortion,
        rate,
        cost: distortion + q.lambda() * rate,
    })
}

/// Cheapest registered flow model for `c`; earlier candidates win ties.
pub fn best_flow(
    gof: &PreparedGof,
    c: &Cuboid,
    q: &QuantSpec,
    registry: &FlowRegistry,
) -> Result<CuboidCoding, OctreeError> {
    let mut best: Option<CuboidCoding> = None;
    for flow in registry.candidates() {
        let coding = cuboid_cost(gof, c, flow, q, registry)?;
        if best.as_ref().is_none_or(|b| coding.cost < b.cost) {
            best = Some(coding);
        }
    }
    Ok(best.expect("registry always offers NoFlow"))
}

/// A pruned oct-tree: the leaves in depth-first order.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentationTree {
    pub support: Dims,
    pub padded: Dims,
    pub quant: QuantSpec,
    pub leaves: Vec<CuboidCoding>,
    /// Optimal cost at the root as computed by the pruning pass.
    pub total_cost: f64,
    /// Nodes evaluated (before pruning).
    pub nodes_evaluated: usize,
}

impl SegmentationTree {
    pub fn total_distortion(&self) -> f64 {
        self.leaves.iter().map(|l| l.distortion).sum()
    }

    pub fn total_rate(&self) -> f64 {
        self.leaves.iter().map(|l| l.rate).sum()
    }

    pub fn total_nonzeros(&self) -> usize {
        self.leaves.iter().map(CuboidCoding::nonzeros).sum()
    }

    /// `Σ (Dᵢ + λ Rᵢ)` over the leaves.
    pub fn leaf_cost_sum(&self) -> f64 {
        let lambda = self.quant.lambda();
        self.leaves
            .iter()
            .map(|l| l.distortion + lambda * l.rate)
            .sum()
    }

    /// Decoded samples on the original support, in the 0..255 sample range
    /// but neither rounded nor clamped.
    pub fn reconstruction(&self) -> Result<Volume<f64>, OctreeError> {
        let parts: Vec<_> = self
            .leaves
            .iter()
            .map(|l| (l.cuboid, l.flow, &l.quantized))
            .collect();
        assemble(self.support, self.padded, self.quant.delta(), &parts)
    }
}

pub(crate) fn assemble(
    support: Dims,
    padded: Dims,
    delta: f64,
    parts: &[(Cuboid, FlowModel, &QuantizedBlock)],
) -> Result<Volume<f64>, OctreeError> {
    let mut full = Volume::filled(padded, 0.0);
    for (cuboid, flow, quantized) in parts {
        full.insert(cuboid.origin, &reconstruct_cuboid(quantized, *flow, delta)?);
    }
    Ok(full.extract([0; 3], support).map(|s| s + SAMPLE_OFFSET))
}

/// Minimum-cost pruning of the oct-tree down to `max_depth`.
pub fn segment(
    gof: &GroupOfFrames,
    q: &QuantSpec,
    max_depth: u32,
    registry: &FlowRegistry,
) -> Result<SegmentationTree, OctreeError> {
    let prepared = PreparedGof::new(gof)?;
    let mut nodes_evaluated = 0;
    let (total_cost, leaves) = solve(
        &prepared,
        prepared.root(),
        max_depth,
        q,
        registry,
        &mut nodes_evaluated,
    )?;
    Ok(SegmentationTree {
        support: prepared.support,
        padded: prepared.padded(),
        quant: *q,
        leaves,
        total_cost,
        nodes_evaluated,
    })
}

fn solve(
    gof: &PreparedGof,
    node: Cuboid,
    depth_left: u32,
    q: &QuantSpec,
    registry: &FlowRegistry,
    evaluated: &mut usize,
) -> Result<(f64, Vec<CuboidCoding>), OctreeError> {
    let own = best_flow(gof, &node, q, registry)?;
    *evaluated += 1;
    let children = if depth_left > 0 {
        node.children()
    } else {
        Vec::new()
    };
    if children.is_empty() {
        return Ok((own.cost, alloc::vec![own]));
    }
    let mut child_costs = Vec::with_capacity(children.len());
    let mut leaves = Vec::new();
    for child in children {
        let (cost, mut sub) = solve(gof, child, depth_left - 1, q, registry, evaluated)?;
        child_costs.push(cost);
        leaves.append(&mut sub);
    }
    let split_cost: f64 = child_costs.iter().sum();
    if split_cost < own.cost {
        Ok((split_cost, leaves))
    } else {
        Ok((own.cost, alloc::vec![own]))
    }
}
