//! Fragmentation of a byte stream into CRC-protected packets.
//!
//! Wire layout, little-endian:
//!
//! ```text
//! "VCPK" | msg_id u32 | fragment_index u16 | fragment_count u16 | payload_len u16
//! payload bytes | CRC32 of payload u32
//! ```

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

pub const PACKET_MAGIC: [u8; 4] = *b"VCPK";
pub const HEADER_LEN: usize = 4 + 4 + 2 + 2 + 2;
/// Header plus trailing CRC.
pub const OVERHEAD: usize = HEADER_LEN + 4;
pub const MIN_MTU: usize = 64;
pub const DEFAULT_MTU: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PacketError {
    #[error("MTU {0} is below the minimum of {MIN_MTU} bytes")]
    MtuTooSmall(usize),
    #[error("cannot packetize an empty stream")]
    EmptyStream,
    #[error("stream needs {0} fragments, more than a 16-bit fragment count allows")]
    TooManyFragments(usize),
    #[error("bad packet magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("packet truncated: {len} bytes, need {needed}")]
    Truncated { len: usize, needed: usize },
    #[error("packet carries {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("fragment {index}: payload CRC mismatch")]
    CrcMismatch { index: u16 },
    #[error("fragment index {index} out of range for count {count}")]
    IndexOutOfRange { index: u16, count: u16 },
    #[error("no packets to reassemble")]
    NoPackets,
    #[error("packets belong to different messages ({0} and {1})")]
    MixedMessages(u32, u32),
    #[error("packets disagree on fragment count ({0} vs {1})")]
    InconsistentCount(u16, u16),
    #[error("conflicting payloads for fragment {0}")]
    ConflictingFragment(u16),
    #[error("missing fragment(s) {0:?}")]
    Missing(Vec<u16>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub msg_id: u32,
    pub fragment_index: u16,
    pub fragment_count: u16,
    pub payload: Vec<u8>,
    pub crc: u32,
}

impl Packet {
    pub fn new(msg_id: u32, fragment_index: u16, fragment_count: u16, payload: Vec<u8>) -> Self {
        let crc = crc32fast::hash(&payload);
        Packet {
            msg_id,
            fragment_index,
            fragment_count,
            payload,
            crc,
        }
    }

    pub fn crc_ok(&self) -> bool {
        crc32fast::hash(&self.payload) == self.crc
    }

    pub fn wire_len(&self) -> usize {
        OVERHEAD + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&PACKET_MAGIC);
        out.extend_from_slice(&self.msg_id.to_le_bytes());
        out.extend_from_slice(&self.fragment_index.to_le_bytes());
        out.extend_from_slice(&self.fragment_count.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u16).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.crc.to_le_bytes());
        out
    }

    /// Parse one packet and verify its payload CRC.
    pub fn from_bytes(bytes: &[u8]) -> Result<Packet, PacketError> {
        if bytes.len() < OVERHEAD {
            return Err(PacketError::Truncated {
                len: bytes.len(),
                needed: OVERHEAD,
            });
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("len checked");
        if magic != PACKET_MAGIC {
            return Err(PacketError::BadMagic(magic));
        }
        let u16_at = |o: usize| u16::from_le_bytes([bytes[o], bytes[o + 1]]);
        let msg_id = u32::from_le_bytes(bytes[4..8].try_into().expect("len checked"));
        let fragment_index = u16_at(8);
        let fragment_count = u16_at(10);
        let payload_len = u16_at(12) as usize;
        let needed = OVERHEAD + payload_len;
        if bytes.len() < needed {
            return Err(PacketError::Truncated {
                len: bytes.len(),
                needed,
            });
        }
        if bytes.len() > needed {
            return Err(PacketError::TrailingBytes(bytes.len() - needed));
        }
        let payload = bytes[HEADER_LEN..HEADER_LEN + payload_len].to_vec();
        let crc = u32::from_le_bytes(bytes[needed - 4..].try_into().expect("len checked"));
        let packet = Packet {
            msg_id,
            fragment_index,
            fragment_count,
            payload,
            crc,
        };
        if fragment_index >= fragment_count {
            return Err(PacketError::IndexOutOfRange {
                index: fragment_index,
                count: fragment_count,
            });
        }
        if !packet.crc_ok() {
            return Err(PacketError::CrcMismatch {
                index: fragment_index,
            });
        }
        Ok(packet)
    }
}

/// Payload bytes per packet for a given MTU.
pub fn payload_capacity(mtu: usize) -> Result<usize, PacketError> {
    if mtu < MIN_MTU {
        return Err(PacketError::MtuTooSmall(mtu));
    }
    Ok((mtu - OVERHEAD).min(u16::MAX as usize))
}

/// Split `stream` into fragments of `payload_capacity(mtu)` bytes; only the
/// last may be shorter.
pub fn packetize(stream: &[u8], mtu: usize, msg_id: u32) -> Result<Vec<Packet>, PacketError> {
    let cap = payload_capacity(mtu)?;
    if stream.is_empty() {
        return Err(PacketError::EmptyStream);
    }
    let count = stream.len().div_ceil(cap);
    if count > u16::MAX as usize {
        return Err(PacketError::TooManyFragments(count));
    }
    Ok(stream
        .chunks(cap)
        .enumerate()
        .map(|(i, chunk)| Packet::new(msg_id, i as u16, count as u16, chunk.to_vec()))
        .collect())
}

/// Rebuild the stream from any ordering of its fragments. Exact duplicates
/// are tolerated.
pub fn reassemble<'a, I>(packets: I) -> Result<Vec<u8>, PacketError>
where
    I: IntoIterator<Item = &'a Packet>,
{
    let mut slots: BTreeMap<u16, &Packet> = BTreeMap::new();
    let mut header: Option<(u32, u16)> = None;
    for p in packets {
        match header {
            None => header = Some((p.msg_id, p.fragment_count)),
            Some((id, _)) if id != p.msg_id => {
                return Err(PacketError::MixedMessages(id, p.msg_id))
            }
            Some((_, n)) if n != p.fragment_count => {
                return Err(PacketError::InconsistentCount(n, p.fragment_count))
            }
            _ => {}
        }
        if p.fragment_index >= p.fragment_count {
            return Err(PacketError::IndexOutOfRange {
                index: p.fragment_index,
                count: p.fragment_count,
            });
        }
        if !p.crc_ok() {
            return Err(PacketError::CrcMismatch {
                index: p.fragment_index,
            });
        }
        if let Some(prev) = slots.insert(p.fragment_index, p) {
            if prev.payload != p.payload {
                return Err(PacketError::ConflictingFragment(p.fragment_index));
            }
        }
    }
    let (_, count) = header.ok_or(PacketError::NoPackets)?;
    let missing: Vec<u16> = (0..count).filter(|i| !slots.contains_key(i)).collect();
    if !missing.is_empty() {
        return Err(PacketError::Missing(missing));
    }
    Ok(slots
        .values()
        .flat_map(|p| p.payload.iter().copied())
        .collect())
}
