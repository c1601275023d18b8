//! Self-contained serialization of a segmented group of frames.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "GOFC" | version u8 | T u16 | H u16 | W u16 | delta f64 | segments u32
//! per segment:
//!   origin t,y,x u16×3 | log2 dims u8×3 | flow kind u8 | dy i8 | dx i8
//!   M u32 | M × (index u32, zigzag value u32)
//! CRC32 (IEEE) of every preceding byte, u32
//! ```
//!
//! The stream stores quantized coefficients verbatim; its size is not the
//! `α₀·M` rate model used for segmentation.

use alloc::vec::Vec;

use crate::octree::{
    assemble, padded_dims, segment, Cuboid, FlowModel, FlowRegistry, OctreeError, SegmentationTree,
    DEFAULT_MAX_DEPTH,
};
use crate::quant::{QuantSpec, QuantizedBlock};
use crate::volume::{Dims, GroupOfFrames, Volume};
use crate::wavelet::levels_for;

pub const MAGIC: [u8; 4] = *b"GOFC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 4 + 1 + 6 + 8 + 4;
const SEGMENT_HEADER_LEN: usize = 6 + 3 + 1 + 2 + 4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BitstreamError {
    #[error("bad magic {0:02x?}, expected \"GOFC\"")]
    BadMagic([u8; 4]),
    #[error("unsupported bitstream version {0} (expected {VERSION})")]
    Version(u8),
    #[error("bitstream truncated at byte {offset}: needed {needed} more bytes")]
    Truncated { offset: usize, needed: usize },
    #[error("CRC mismatch: stored {stored:08x}, computed {computed:08x}")]
    Crc { stored: u32, computed: u32 },
    #[error("malformed bitstream: {0}")]
    Malformed(&'static str),
    #[error("dimension {0} does not fit in 16 bits")]
    DimTooLarge(usize),
    #[error(transparent)]
    Octree(#[from] OctreeError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig {
    pub quant: QuantSpec,
    pub max_depth: u32,
    pub flows: FlowRegistry,
}

impl EncoderConfig {
    pub fn new(quant: QuantSpec) -> Self {
        EncoderConfig {
            quant,
            max_depth: DEFAULT_MAX_DEPTH,
            flows: FlowRegistry::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EncodedGof {
    pub bytes: Vec<u8>,
    pub tree: SegmentationTree,
}

pub fn encode_gof(gof: &GroupOfFrames, cfg: &EncoderConfig) -> Result<EncodedGof, BitstreamError> {
    check_dims(gof.dims())?;
    let tree = segment(gof, &cfg.quant, cfg.max_depth, &cfg.flows)?;
    let bytes = write_tree(&tree)?;
    Ok(EncodedGof { bytes, tree })
}

fn check_dims(d: Dims) -> Result<(), BitstreamError> {
    for v in padded_dims(d).as_array() {
        if v > u16::MAX as usize {
            return Err(BitstreamError::DimTooLarge(v));
        }
    }
    Ok(())
}

#[inline]
fn zigzag(v: i32) -> u32 {
    ((v << 1) ^ (v >> 31)) as u32
}

#[inline]
fn unzigzag(v: u32) -> i32 {
    ((v >> 1) as i32) ^ -((v & 1) as i32)
}

pub fn write_tree(tree: &SegmentationTree) -> Result<Vec<u8>, BitstreamError> {
    check_dims(tree.support)?;
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    for d in tree.support.as_array() {
        out.extend_from_slice(&(d as u16).to_le_bytes());
    }
    out.extend_from_slice(&tree.quant.delta().to_le_bytes());
    out.extend_from_slice(&(tree.leaves.len() as u32).to_le_bytes());
    for leaf in &tree.leaves {
        for o in leaf.cuboid.origin {
            out.extend_from_slice(&(o as u16).to_le_bytes());
        }
        out.extend_from_slice(&leaf.cuboid.log2);
        out.push(leaf.flow.kind());
        let (dy, dx) = leaf.flow.params();
        out.push(dy as u8);
        out.push(dx as u8);
        let nz: Vec<(usize, i32)> = leaf
            .quantized
            .values
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, v)| v != 0)
            .collect();
        out.extend_from_slice(&(nz.len() as u32).to_le_bytes());
        for (idx, v) in nz {
            out.extend_from_slice(&(idx as u32).to_le_bytes());
            out.extend_from_slice(&zigzag(v).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

/// One decoded segment.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedSegment {
    pub cuboid: Cuboid,
    pub flow: FlowModel,
    pub quantized: QuantizedBlock,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodedGof {
    pub dims: Dims,
    pub delta: f64,
    pub segments: Vec<DecodedSegment>,
    /// Reconstruction on the original support, bit-identical to the
    /// encoder's own reconstruction.
    pub samples: Volume<f64>,
}

impl DecodedGof {
    /// Rounded (half away from zero) and clamped 8-bit samples.
    pub fn to_u8(&self) -> GroupOfFrames {
        to_u8(&self.samples)
    }
}

pub fn to_u8(samples: &Volume<f64>) -> GroupOfFrames {
    samples.map(|s| libm::round(s).clamp(0.0, 255.0) as u8)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], BitstreamError> {
        let rest = self.buf.len() - self.pos;
        if rest < n {
            return Err(BitstreamError::Truncated {
                offset: self.buf.len(),
                needed: n - rest,
            });
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], BitstreamError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, BitstreamError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, BitstreamError> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, BitstreamError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> Result<f64, BitstreamError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

pub fn decode_gof(bytes: &[u8]) -> Result<DecodedGof, BitstreamError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.array()?;
    if magic != MAGIC {
        return Err(BitstreamError::BadMagic(magic));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(BitstreamError::Version(version));
    }
    let dims = Dims::new(r.u16()? as usize, r.u16()? as usize, r.u16()? as usize);
    let delta = r.f64()?;
    let count = r.u32()? as usize;
    debug_assert_eq!(r.pos, HEADER_LEN);
    let padded = padded_dims(dims);

    let mut segments = Vec::with_capacity(count.min(bytes.len() / SEGMENT_HEADER_LEN));
    for _ in 0..count {
        let origin = [r.u16()? as usize, r.u16()? as usize, r.u16()? as usize];
        let log2: [u8; 3] = r.array()?;
        let kind = r.u8()?;
        let dy = r.u8()? as i8;
        let dx = r.u8()? as i8;
        let m = r.u32()? as usize;
        let pairs = r.take(
            m.checked_mul(8)
                .ok_or(BitstreamError::Malformed("coefficient count overflow"))?,
        )?;

        if log2.iter().any(|&k| k > 15) {
            return Err(BitstreamError::Malformed("cuboid side exceeds 16 bits"));
        }
        let cuboid = Cuboid { origin, log2 };
        let (cd, bounds) = (cuboid.dims().as_array(), padded.as_array());
        if (0..3).any(|a| origin[a] + cd[a] > bounds[a]) {
            return Err(BitstreamError::Malformed(
                "segment outside the padded volume",
            ));
        }
        let flow = FlowModel::from_parts(kind, dy, dx)
            .ok_or(BitstreamError::Malformed("unknown flow kind"))?;
        let cdims = cuboid.dims();
        let mut values = alloc::vec![0i32; cdims.len()];
        let mut last: Option<usize> = None;
        for pair in pairs.chunks_exact(8) {
            let idx = u32::from_le_bytes(pair[..4].try_into().expect("chunk of 8")) as usize;
            let v = unzigzag(u32::from_le_bytes(
                pair[4..].try_into().expect("chunk of 8"),
            ));
            if idx >= values.len() || last.is_some_and(|l| idx <= l) {
                return Err(BitstreamError::Malformed(
                    "coefficient index out of order or out of range",
                ));
            }
            last = Some(idx);
            values[idx] = v;
        }
        segments.push(DecodedSegment {
            cuboid,
            flow,
            quantized: QuantizedBlock {
                dims: cdims,
                levels: levels_for(cdims),
                values,
            },
        });
    }
    let body_end = r.pos;
    let stored = r.u32()?;
    if r.pos != bytes.len() {
        return Err(BitstreamError::Malformed("trailing bytes after CRC"));
    }
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(BitstreamError::Crc { stored, computed });
    }

    if dims.is_empty() {
        return Err(BitstreamError::Malformed("empty dimensions"));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(BitstreamError::Malformed(
            "quantization step must be positive",
        ));
    }
    check_tiling(padded, &segments)?;
    for s in &segments {
        if matches!(s.flow, FlowModel::Reserved2 | FlowModel::Reserved3) {
            return Err(BitstreamError::Malformed("reserved flow class in stream"));
        }
    }

    let parts: Vec<_> = segments
        .iter()
        .map(|s| (s.cuboid, s.flow, &s.quantized))
        .collect();
    let samples = assemble(dims, padded, delta, &parts)?;
    Ok(DecodedGof {
        dims,
        delta,
        segments,
        samples,
    })
}

fn check_tiling(padded: Dims, segments: &[DecodedSegment]) -> Result<(), BitstreamError> {
    let mut hits = alloc::vec![0u8; padded.len()];
    let bounds = padded.as_array();
    for s in segments {
        let d = s.cuboid.dims().as_array();
        let o = s.cuboid.origin;
        if (0..3).any(|a| o[a] + d[a] > bounds[a]) {
            return Err(BitstreamError::Malformed(
                "segment outside the padded volume",
            ));
        }
        for t in o[0]..o[0] + d[0] {
            for y in o[1]..o[1] + d[1] {
                for x in o[2]..o[2] + d[2] {
                    let h = &mut hits[padded.index(t, y, x)];
                    if *h != 0 {
                        return Err(BitstreamError::Malformed("segments overlap"));
                    }
                    *h = 1;
                }
            }
        }
    }
    if hits.contains(&0) {
        return Err(BitstreamError::Malformed(
            "segments leave part of the volume uncovered",
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_gof() -> GroupOfFrames {
        Volume::from_fn(Dims::new(4, 6, 8), |t, y, x| {
            ((t * 13 + y * 29 + x * 7) % 97 + 80) as u8
        })
    }

    fn cfg(delta: f64) -> EncoderConfig {
        EncoderConfig::new(QuantSpec::new(delta).unwrap())
    }

    #[test]
    fn zigzag_round_trip() {
        for v in [0, 1, -1, 2, -2, i32::MAX, i32::MIN, 12345, -54321] {
            assert_eq!(unzigzag(zigzag(v)), v);
        }
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
    }

    #[test]
    fn decode_matches_encoder_reconstruction() {
        let g = sample_gof();
        let enc = encode_gof(&g, &cfg(2.0)).unwrap();
        let dec = decode_gof(&enc.bytes).unwrap();
        let internal = enc.tree.reconstruction().unwrap();
        assert_eq!(dec.dims, g.dims());
        assert!(dec
            .samples
            .data()
            .iter()
            .zip(internal.data())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        let orig = g.map(|s| s as f64);
        let sse = crate::quant::distortion(&orig, &dec.samples).unwrap();
        assert!((sse - enc.tree.total_distortion()).abs() <= 1e-9 * (1.0 + sse));
    }

    #[test]
    fn header_layout() {
        let enc = encode_gof(&sample_gof(), &cfg(4.0)).unwrap();
        let b = &enc.bytes;
        assert_eq!(&b[..4], b"GOFC");
        assert_eq!(b[4], VERSION);
        assert_eq!(u16::from_le_bytes([b[5], b[6]]), 4);
        assert_eq!(u16::from_le_bytes([b[7], b[8]]), 6);
        assert_eq!(u16::from_le_bytes([b[9], b[10]]), 8);
        assert_eq!(f64::from_le_bytes(b[11..19].try_into().unwrap()), 4.0);
        let segs = u32::from_le_bytes(b[19..23].try_into().unwrap());
        assert_eq!(segs as usize, enc.tree.leaves.len());
        let n = b.len();
        assert_eq!(
            u32::from_le_bytes(b[n - 4..].try_into().unwrap()),
            crc32fast::hash(&b[..n - 4])
        );
    }

    #[test]
    fn encoding_is_deterministic() {
        let a = encode_gof(&sample_gof(), &cfg(3.0)).unwrap();
        let b = encode_gof(&sample_gof(), &cfg(3.0)).unwrap();
        assert_eq!(a.bytes, b.bytes);
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        let bytes = encode_gof(&sample_gof(), &cfg(2.0)).unwrap().bytes;

        for cut in [0, 3, 10, HEADER_LEN, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(
                    decode_gof(&bytes[..cut]),
                    Err(BitstreamError::Truncated { .. })
                ),
                "cut at {cut}"
            );
        }

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_gof(&bad), Err(BitstreamError::BadMagic(_))));

        let mut bad = bytes.clone();
        bad[4] = 9;
        assert_eq!(decode_gof(&bad), Err(BitstreamError::Version(9)));

        let mut bad = bytes.clone();
        bad[12] ^= 0x01; // inside delta

        assert!(matches!(decode_gof(&bad), Err(BitstreamError::Crc { .. })));

        let mut bad = bytes.clone();
        bad.push(0);
        assert!(matches!(
            decode_gof(&bad),
            Err(BitstreamError::Malformed(_))
        ));
    }

    #[test]
    fn to_u8_rounds_and_clamps() {
        let v =
            Volume::from_vec(Dims::new(1, 1, 4), alloc::vec![-3.0, 12.5, 254.49, 300.0]).unwrap();
        assert_eq!(to_u8(&v).data(), &[0, 13, 254, 255]);
    }
}
