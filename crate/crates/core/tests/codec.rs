mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use vidcast_core::bitstream::{BitstreamError, HEADER_LEN};
use vidcast_core::octree::{cuboid_cost, PreparedGof};
use vidcast_core::packet::{packetize, reassemble, Packet, PacketError, OVERHEAD};
use vidcast_core::quant::{dequantize, quantize, quantize_value};
use vidcast_core::transport::transmit_stream;
use vidcast_core::wavelet::{dwt3_forward, dwt3_inverse};
use vidcast_core::*;

fn random_block(seed: u64, dims: Dims) -> Volume<f64> {
    let mut r = rng(seed);
    Volume::from_fn(dims, |_, _, _| r.gen_range(-200.0..200.0))
}

#[test]
fn wavelet_round_trip_on_mixed_shapes() {
    for (k, dims) in [
        Dims::new(1, 1, 1),
        Dims::new(2, 4, 8),
        Dims::new(8, 1, 2),
        Dims::new(16, 16, 16),
    ]
    .into_iter()
    .enumerate()
    {
        let v = random_block(k as u64, dims);
        let c = dwt3_forward(&v).unwrap();
        assert!(
            (c.energy() - v.data().iter().map(|s| s * s).sum::<f64>()).abs()
                < 1e-6 * c.energy().max(1.0)
        );
        let back = dwt3_inverse(&c).unwrap();
        for (a, b) in v.data().iter().zip(back.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn non_power_of_two_block_is_rejected() {
    assert!(dwt3_forward(&Volume::filled(Dims::new(2, 3, 4), 0.0)).is_err());
}

#[test]
fn quantization_error_is_at_most_half_a_step() {
    let mut r = rng(4);
    for _ in 0..10_000 {
        let delta = r.gen_range(0.1..40.0);
        let c: f64 = r.gen_range(-1e4..1e4);
        let e = c - quantize_value(c, delta) as f64 * delta;
        assert!(e.abs() <= delta / 2.0 + 1e-9);
    }
    assert_eq!(quantize_value(2.5, 1.0), 3);
    assert_eq!(quantize_value(-2.5, 1.0), -3);
    assert_eq!(quantize_value(0.49, 1.0), 0);
}

#[test]
fn distortion_equals_coefficient_domain_error() {
    for seed in 0..10 {
        let g = random_gof(seed, Dims::new(4, 8, 8));
        let p = PreparedGof::new(&g).unwrap();
        for delta in [1.0, 3.0, 9.0] {
            let q = QuantSpec::new(delta).unwrap();
            let r = cuboid_cost(
                &p,
                &p.root(),
                FlowModel::NoFlow,
                &q,
                &FlowRegistry::default(),
            )
            .unwrap();
            let centered = g.map(|s| s as f64 - 128.0);
            let c = dwt3_forward(&centered).unwrap();
            let deq = dequantize(&quantize(&c, &q), delta);
            let coeff_err: f64 = c
                .values
                .iter()
                .zip(&deq.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!((r.distortion - coeff_err).abs() <= 1e-6 * coeff_err.max(1.0));
        }
    }
}

#[test]
fn segmentation_matches_exhaustive_pruning() {
    for seed in 0..6 {
        let g = texture_gof(seed, Dims::new(4, 8, 8));
        let q = QuantSpec::new(4.0).unwrap();
        let reg = FlowRegistry::default();
        let tree = segment(&g, &q, 2, &reg).unwrap();
        let (cost, leaves, _) = brute_force_segmentation(&g, &q, 2, &reg);
        assert_eq!(tree.total_cost, cost);
        assert_eq!(
            tree.leaves.iter().map(|l| l.cuboid).collect::<Vec<_>>(),
            leaves
        );
    }
}

#[test]
fn two_region_gof_splits_at_depth_one() {
    let g = two_region_gof();
    let q = QuantSpec::new(1.0).unwrap();
    let reg = FlowRegistry::default();
    let tree = segment(&g, &q, 1, &reg).unwrap();
    let (cost, leaves, count) = brute_force_segmentation(&g, &q, 1, &reg);
    assert_eq!(count, 2);
    assert_eq!(tree.leaves.len(), 8);
    assert_eq!(leaves.len(), 8);
    assert_eq!(tree.total_cost, cost);
    assert!(tree.leaves.iter().any(|l| l.flow != FlowModel::NoFlow));
}

#[test]
fn cost_accounting_and_tiling() {
    for (k, g) in [
        texture_gof(1, GOF_DIMS),
        dot_gof(),
        two_region_gof(),
        random_gof(2, Dims::new(5, 7, 9)),
    ]
    .into_iter()
    .enumerate()
    {
        let q = QuantSpec::new(2.0).unwrap();
        let tree = segment(&g, &q, 3, &FlowRegistry::default()).unwrap();
        assert!(
            (tree.total_cost - tree.leaf_cost_sum()).abs() <= 1e-6 * tree.total_cost.max(1.0),
            "gof {k}"
        );
        let mut hits = Volume::filled(tree.padded, 0u8);
        for l in &tree.leaves {
            let d = l.cuboid.dims();
            for t in 0..d.t {
                for y in 0..d.h {
                    for x in 0..d.w {
                        let o = l.cuboid.origin;
                        let (t, y, x) = (o[0] + t, o[1] + y, o[2] + x);
                        hits.set(t, y, x, hits.get(t, y, x) + 1);
                    }
                }
            }
        }
        assert!(hits.data().iter().all(|&h| h == 1), "gof {k}");
    }
}

#[test]
fn flow_search_never_costs_more_than_no_flow() {
    for (k, g) in [texture_gof(3, GOF_DIMS), dot_gof(), two_region_gof()]
        .into_iter()
        .enumerate()
    {
        for delta in [1.0, 4.0] {
            let q = QuantSpec::new(delta).unwrap();
            let with = segment(&g, &q, 2, &FlowRegistry::default()).unwrap();
            let without = segment(&g, &q, 2, &FlowRegistry::no_flow_only()).unwrap();
            assert!(
                with.total_cost <= without.total_cost,
                "gof {k} delta {delta}"
            );
        }
    }
}

#[test]
fn bitstream_round_trip_reproduces_encoder_reconstruction() {
    for (k, g) in [
        dot_gof(),
        random_gof(9, Dims::new(3, 5, 6)),
        two_region_gof(),
    ]
    .into_iter()
    .enumerate()
    {
        let enc = encode_gof(&g, &EncoderConfig::new(QuantSpec::new(3.0).unwrap())).unwrap();
        let dec = decode_gof(&enc.bytes).unwrap();
        assert_eq!(dec.dims, g.dims());
        assert_eq!(dec.samples, enc.tree.reconstruction().unwrap(), "gof {k}");
        let sse: f64 = g
            .data()
            .iter()
            .zip(dec.samples.data())
            .map(|(&a, b)| (a as f64 - b).powi(2))
            .sum();
        assert!((sse - enc.tree.total_distortion()).abs() <= 1e-6 * sse.max(1.0));
    }
}

#[test]
fn every_truncation_is_detected() {
    let g = random_gof(1, Dims::new(2, 4, 4));
    let bytes = encode_gof(&g, &EncoderConfig::new(QuantSpec::new(8.0).unwrap()))
        .unwrap()
        .bytes;
    assert!(bytes.len() > HEADER_LEN);
    for cut in 0..bytes.len() {
        assert!(decode_gof(&bytes[..cut]).is_err(), "cut {cut}");
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_gof(&bad), Err(BitstreamError::BadMagic(_))));
}

#[test]
fn transmitting_k_packets_costs_k_single_floods() {
    let t = vidcast_core::topology::generators::grid(4, 4);
    let d = run_discovery(&t, 3);
    let g = random_gof(3, Dims::new(4, 8, 8));
    let stream = encode_gof(&g, &EncoderConfig::new(QuantSpec::new(1.0).unwrap()))
        .unwrap()
        .bytes;
    for mode in FloodMode::ALL {
        let cfg = |mtu| TransmitConfig {
            encoder: EncoderConfig::new(QuantSpec::new(1.0).unwrap()),
            mtu,
            mode,
            msg_id: 5,
        };
        let one =
            transmit_stream(&stream, &t, &d, NodeId(5), &cfg(stream.len() + OVERHEAD)).unwrap();
        let many = transmit_stream(&stream, &t, &d, NodeId(5), &cfg(64)).unwrap();
        assert_eq!(one.packet_count, 1);
        assert!(many.packet_count > 1);
        assert_eq!(
            many.total.transmissions,
            many.packet_count as u64 * one.total.transmissions
        );
        assert!(many.all_ok() && one.all_ok());
    }
}

#[test]
fn packet_errors() {
    let pk = packetize(&[7; 300], 64, 1).unwrap();
    let mut wire = pk[0].to_bytes();
    *wire.last_mut().unwrap() ^= 1;
    assert!(matches!(
        Packet::from_bytes(&wire),
        Err(PacketError::CrcMismatch { .. })
    ));
    assert!(matches!(reassemble(&pk[1..]), Err(PacketError::Missing(m)) if m == [0]));
    assert!(matches!(
        packetize(&[1], 10, 1),
        Err(PacketError::MtuTooSmall { .. })
    ));
    let other = packetize(&[7; 300], 64, 2).unwrap();
    let mixed = [pk[0].clone(), other[1].clone()];
    assert!(reassemble(&mixed).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wavelet_is_orthonormal(seed in any::<u64>(), lt in 0u32..4, ly in 0u32..4, lx in 0u32..4) {
        let v = random_block(seed, Dims::new(1 << lt, 1 << ly, 1 << lx));
        let c = dwt3_forward(&v).unwrap();
        let e: f64 = v.data().iter().map(|s| s * s).sum();
        prop_assert!((c.energy() - e).abs() <= 1e-6 * e.max(1.0));
        let back = dwt3_inverse(&c).unwrap();
        prop_assert!(v.data().iter().zip(back.data()).all(|(a, b)| (a - b).abs() < 1e-6));
    }

    #[test]
    fn fragments_reassemble_in_any_order(
        stream in proptest::collection::vec(any::<u8>(), 1..3000),
        mtu in 64usize..400,
        seed in any::<u64>(),
    ) {
        let mut pk = packetize(&stream, mtu, 9).unwrap();
        prop_assert!(pk.iter().all(|p| p.wire_len() <= mtu));
        let mut r = rng(seed);
        for i in (1..pk.len()).rev() {
            pk.swap(i, r.gen_range(0..=i));
        }
        let dup = pk[0].clone();
        pk.push(dup);
        let wire: Vec<Packet> = pk.iter().map(|p| Packet::from_bytes(&p.to_bytes()).unwrap()).collect();
        prop_assert_eq!(reassemble(&wire).unwrap(), stream);
    }
}
