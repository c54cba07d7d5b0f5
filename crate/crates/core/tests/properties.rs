use proptest::prelude::*;

use ppcl::data::{Dataset, LabeledSample};
use ppcl::learner::{Model, ModelSpec};
use ppcl::obfuscate::{deserialize_shard, serialize_shard, shard_size};
use ppcl::privacy::{overlap_rate, OverlapParams};
use ppcl::randmat::{MatrixKind, ProjectionMatrix};
use ppcl::sim::{largest_remainder, partition};

fn kind() -> impl Strategy<Value = MatrixKind> {
    prop_oneof![Just(MatrixKind::gaussian()), Just(MatrixKind::Rademacher), (1usize..=2).prop_map(|ones| MatrixKind::Binary { ones })]
}

fn points(max: usize, d: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    prop::collection::vec((prop::collection::vec(-1.0f64..1.0, d), 0usize..3), 1..max).prop_map(|v| v.into_iter().unzip())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_linear(
        kind in kind(),
        seed in any::<u64>(),
        x in prop::collection::vec(-10.0f64..10.0, 6),
        y in prop::collection::vec(-10.0f64..10.0, 6),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let r = ProjectionMatrix::generate(kind, 4, 6, seed).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = r.project(&combo).unwrap();
        let (rx, ry) = (r.project(&x).unwrap(), r.project(&y).unwrap());
        for i in 0..4 {
            let rhs = a * rx[i] + b * ry[i];
            prop_assert!((lhs[i] - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn frobenius_condition_is_scale_invariant(seed in any::<u64>(), alpha in prop_oneof![-50.0f64..-0.01, 0.01f64..50.0]) {
        let r = ProjectionMatrix::generate(MatrixKind::gaussian(), 5, 9, seed).unwrap();
        let mut scaled = r.entries().clone();
        scaled.scale(alpha);
        let s = ProjectionMatrix::from_entries(MatrixKind::gaussian(), seed, scaled).unwrap();
        let (c1, c2) = (r.frobenius_condition().unwrap(), s.frobenius_condition().unwrap());
        prop_assert!((c1 - c2).abs() <= 1e-8 * c1);
        // At least the rank: sqrt(Σσ²)·sqrt(Σσ⁻²) ≥ k by Cauchy–Schwarz.
        prop_assert!(c1 >= 5.0 * (1.0 - 1e-12));
    }

    #[test]
    fn overlap_ignores_order_and_translation(
        (pts, labels) in points(40, 2),
        shift in prop::collection::vec(-5.0f64..5.0, 2),
        rot in 0usize..40,
    ) {
        let params = OverlapParams { radius: 0.3, n_min: 1 };
        let base = overlap_rate(&pts, &labels, params).unwrap();
        let n = pts.len();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).rev().collect();
        let p2: Vec<Vec<f64>> = perm.iter().map(|&i| pts[i].iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let l2: Vec<usize> = perm.iter().map(|&i| labels[i]).collect();
        let moved = overlap_rate(&p2, &l2, params).unwrap();
        prop_assert!((base - moved).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&base));
    }

    #[test]
    fn overlap_is_monotone(
        (pts, labels) in points(40, 3),
        r1 in 0.01f64..1.0,
        extra in 0.0f64..1.0,
        n_min in 1usize..4,
    ) {
        let rate = |radius, n_min| overlap_rate(&pts, &labels, OverlapParams { radius, n_min }).unwrap();
        prop_assert!(rate(r1, n_min) <= rate(r1 + extra, n_min));
        prop_assert!(rate(r1, n_min + 1) <= rate(r1, n_min));
    }

    #[test]
    fn shard_round_trip(
        rows in prop::collection::vec((prop::collection::vec(-1e3f32..1e3, 5), 0usize..=u16::MAX as usize), 0..20),
        tag in any::<u8>(),
    ) {
        let samples: Vec<LabeledSample> = rows.iter().map(|(x, y)| LabeledSample::new(x.iter().map(|&v| v as f64).collect(), *y)).collect();
        let bytes = serialize_shard(&samples, tag).unwrap();
        let len = if samples.is_empty() { 0 } else { 5 };
        prop_assert_eq!(bytes.len(), shard_size(samples.len(), len));
        let shard = deserialize_shard(&bytes).unwrap();
        prop_assert_eq!(shard.tag, tag);
        prop_assert_eq!(shard.samples, samples);
    }

    #[test]
    fn largest_remainder_properties(raw in prop::collection::vec(0.01f64..1.0, 1..12), n in 0usize..500) {
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let sizes = largest_remainder(&w, n);
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        for (s, wi) in sizes.iter().zip(&w) {
            prop_assert!((*s as f64 - wi * n as f64).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn partition_covers_every_sample_once(
        raw in prop::collection::vec(0.05f64..1.0, 1..6),
        n_per_class in 10usize..40,
        seed in any::<u64>(),
    ) {
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        // Sample i carries its own index, so coverage can be read off the shards.
        let samples: Vec<LabeledSample> = (0..3 * n_per_class).map(|i| LabeledSample::new(vec![i as f64], i % 3)).collect();
        let ds = Dataset::new(samples, 1, 3).unwrap();
        match partition(&ds, &w, seed) {
            Ok(shards) => {
                let sizes: Vec<usize> = shards.iter().map(Dataset::len).collect();
                prop_assert_eq!(sizes, largest_remainder(&w, ds.len()));
                let mut seen: Vec<usize> = shards.iter().flat_map(|s| s.samples().iter().map(|x| x.x[0] as usize)).collect();
                seen.sort_unstable();
                prop_assert_eq!(seen, (0..ds.len()).collect::<Vec<_>>());
            }
            Err(e) => prop_assert!(largest_remainder(&w, ds.len()).contains(&0), "{e}"),
        }
    }

    #[test]
    fn softmax_outputs_sum_to_one(seed in any::<u64>(), x in prop::collection::vec(-20.0f64..20.0, 12)) {
        let model = Model::<f64>::new(ModelSpec::mlp(4, &[5], 3), seed).unwrap();
        let out = model.forward(&x).unwrap();
        prop_assert_eq!(out.len(), 9);
        for row in out.chunks(3) {
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
