//! End-to-end delivery of an encoded group of frames over a flooding network.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::bitstream::{decode_gof, encode_gof, BitstreamError, DecodedGof, EncoderConfig};
use crate::discovery::Discovery;
use crate::flood::{DisseminationReport, FloodError, FloodMode, FloodSim};
use crate::packet::{packetize, reassemble, Packet, PacketError};
use crate::topology::{NodeId, Topology};
use crate::volume::GroupOfFrames;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TransportError {
    #[error(transparent)]
    Bitstream(#[from] BitstreamError),
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Flood(#[from] FloodError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransmitConfig {
    pub encoder: EncoderConfig,
    pub mtu: usize,
    pub mode: FloodMode,
    pub msg_id: u32,
}

/// What one node ended up with.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeStatus {
    pub node: NodeId,
    pub fragments: usize,
    /// Reconstruction is bit-identical to the source's local decode.
    pub matches_local: bool,
    pub error: Option<TransportError>,
}

impl NodeStatus {
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.matches_local
    }
}

#[derive(Clone, Debug)]
pub struct TransmitReport {
    pub stream_len: usize,
    pub packet_count: usize,
    pub per_packet: Vec<DisseminationReport>,
    /// Sum over packets; `delivered` holds nodes that got every packet.
    pub total: DisseminationReport,
    pub nodes: Vec<NodeStatus>,
    pub local: DecodedGof,
}

impl TransmitReport {
    pub fn all_ok(&self) -> bool {
        self.nodes.iter().all(NodeStatus::ok)
    }
}

pub fn transmit_gof(
    gof: &GroupOfFrames,
    topology: &Topology,
    discovery: &Discovery,
    source: NodeId,
    cfg: &TransmitConfig,
) -> Result<TransmitReport, TransportError> {
    let encoded = encode_gof(gof, &cfg.encoder)?;
    transmit_stream(&encoded.bytes, topology, discovery, source, cfg)
}

/// Packetize an already encoded stream, flood every packet from `source`
/// and decode at each node.
pub fn transmit_stream(
    stream: &[u8],
    topology: &Topology,
    discovery: &Discovery,
    source: NodeId,
    cfg: &TransmitConfig,
) -> Result<TransmitReport, TransportError> {
    let local = decode_gof(stream)?;
    let packets = packetize(stream, cfg.mtu, cfg.msg_id)?;

    let mut sim = FloodSim::new(topology, discovery)?;
    let mut inboxes: Vec<Vec<Arc<[u8]>>> = alloc::vec![Vec::new(); topology.len()];
    let mut per_packet = Vec::with_capacity(packets.len());
    let mut total = DisseminationReport::default();
    for packet in &packets {
        let outcome = sim.flood(source, cfg.mode, &packet.to_bytes())?;
        for (inbox, got) in inboxes.iter_mut().zip(outcome.inbox) {
            if let Some(bytes) = got {
                inbox.push(bytes);
            }
        }
        total.accumulate(&outcome.report);
        per_packet.push(outcome.report);
    }

    let nodes = topology
        .nodes()
        .zip(&inboxes)
        .map(|(node, inbox)| {
            let fragments = inbox.len();
            match receive(inbox) {
                Ok(decoded) => NodeStatus {
                    node,
                    fragments,
                    matches_local: same_samples(&decoded, &local),
                    error: None,
                },
                Err(e) => NodeStatus {
                    node,
                    fragments,
                    matches_local: false,
                    error: Some(e),
                },
            }
        })
        .collect();

    Ok(TransmitReport {
        stream_len: stream.len(),
        packet_count: packets.len(),
        per_packet,
        total,
        nodes,
        local,
    })
}

fn receive(inbox: &[Arc<[u8]>]) -> Result<DecodedGof, TransportError> {
    let packets = inbox
        .iter()
        .map(|b| Packet::from_bytes(b))
        .collect::<Result<Vec<_>, _>>()?;
    let stream = reassemble(&packets)?;
    Ok(decode_gof(&stream)?)
}

fn same_samples(a: &DecodedGof, b: &DecodedGof) -> bool {
    a.dims == b.dims
        && a.samples
            .data()
            .iter()
            .zip(b.samples.data())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::run_discovery;
    use crate::quant::QuantSpec;
    use crate::topology::generators::*;
    use crate::volume::{Dims, Volume};

    fn cfg(mtu: usize, mode: FloodMode) -> TransmitConfig {
        TransmitConfig {
            encoder: EncoderConfig::new(QuantSpec::new(2.0).unwrap()),
            mtu,
            mode,
            msg_id: 1,
        }
    }

    fn gof() -> GroupOfFrames {
        Volume::from_fn(Dims::new(4, 8, 8), |t, y, x| {
            ((t * 37 + y * 11 + x * 5) % 200) as u8
        })
    }

    #[test]
    fn single_node_decodes_locally() {
        let t = Topology::parse("only").unwrap();
        let d = run_discovery(&t, 3);
        let r = transmit_gof(&gof(), &t, &d, NodeId(0), &cfg(1024, FloodMode::Restricted)).unwrap();
        assert_eq!(r.total.transmissions, 0);
        assert!(r.all_ok());
    }

    #[test]
    fn ring_delivery_is_transparent() {
        let t = ring(7);
        let d = run_discovery(&t, 3);
        for mode in FloodMode::ALL {
            let r = transmit_gof(&gof(), &t, &d, NodeId(3), &cfg(64, mode)).unwrap();
            assert!(r.packet_count > 1);
            assert!(r.all_ok(), "{mode}");
            assert_eq!(r.total.delivered.len(), 7);
        }
    }

    #[test]
    fn undecodable_stream_is_an_error() {
        let t = path(2);
        let d = run_discovery(&t, 3);
        let err = transmit_stream(b"nope", &t, &d, NodeId(0), &cfg(1024, FloodMode::Naive));
        assert!(matches!(err, Err(TransportError::Bitstream(_))));
    }
}
