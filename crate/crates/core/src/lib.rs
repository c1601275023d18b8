//! Radius-restrained flooding and rate-distortion optimized 3D wavelet video
//! coding, simulated end to end.
//!
//! The crate is `no_std` and needs only `alloc`. Everything touching files,
//! the terminal or threads lives in the `vidcast` crate.
//!
//! Network side:
//! - [`topology`]: graphs, edge-list parsing, hop-distance queries
//! - [`discovery`]: hello rounds that build each node's neighbor table
//! - [`forwarding`]: greedy forwarder selection over radius-3 knowledge
//! - [`flood`]: synchronous naive vs restricted dissemination
//!
//! Video side:
//! - [`wavelet`], [`quant`]: orthonormal Haar transform and the cost model
//! - [`octree`]: cuboid segmentation minimizing `Σ Dᵢ + λRᵢ`
//! - [`bitstream`]: self-contained encoded format
//!
//! [`packet`] and [`transport`] tie the two together.

#![no_std]

extern crate alloc;

pub mod bitstream;
pub mod discovery;
pub mod flood;
pub mod forwarding;
pub mod octree;
pub mod packet;
pub mod quant;
pub mod topology;
pub mod transport;
pub mod volume;
pub mod wavelet;

pub use bitstream::{decode_gof, encode_gof, DecodedGof, EncodedGof, EncoderConfig};
pub use discovery::{run_discovery, Discovery, NeighborTable};
pub use flood::{compare_modes, DisseminationReport, FloodMode, FloodSim, RedundancyStats};
pub use forwarding::{brute_force_min_forwarders, select_forwarders, ForwardingDirective};
pub use octree::{
    best_flow, cuboid_cost, segment, Cuboid, FlowModel, FlowRegistry, SegmentationTree,
};
pub use quant::{lambda_of, QuantSpec};
pub use topology::{NodeId, NodeSet, Topology};
pub use transport::{transmit_gof, TransmitConfig, TransmitReport};
pub use volume::{Dims, GroupOfFrames, Volume};

/// Neighbor discovery rounds after which every table is complete.
pub const DISCOVERY_ROUNDS: u32 = 3;
