use geordd::bandwidth::{discrepancy_loss, EvalRegion};
use geordd::sharp::{estimate_sharp, SharpConfig};
use geordd::spaces::{distance, geodesic_eval, quotient_distance_dg, transport_apply};
use geordd::{BandwidthConfig, GeodesicEffect, MetricObject, RddSample, Record};
use proptest::prelude::*;

fn sample_from(rows: &[(f64, f64, f64)], jump: f64) -> RddSample {
    let recs = rows
        .iter()
        .map(|&(r, a, b)| {
            let e = if r >= 0.0 { jump } else { 0.0 };
            Record::new(r, MetricObject::euclidean(vec![r + a + e, b - e]).unwrap())
        })
        .collect();
    RddSample::new(recs, 0.0).unwrap()
}

fn rows() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -0.5..0.5f64, -0.5..0.5f64), 80..160)
}

fn sorted_quantiles(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, len).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sharp_estimate_ignores_record_order(rows in rows(), jump in -1.0..1.0f64, seed in any::<u64>()) {
        let s = sample_from(&rows, jump);
        let mut shuffled = rows.clone();
        // deterministic Fisher-Yates from the seed
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let t = sample_from(&shuffled, jump);
        let cfg = SharpConfig::default();
        let (a, b) = (estimate_sharp(&s, 0.6, 0.6, &cfg), estimate_sharp(&t, 0.6, 0.6, &cfg));
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.magnitude, b.magnitude);
                prop_assert_eq!(a.effect.start, b.effect.start);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
        let region = EvalRegion::new(-0.9, 0.9, 0.0, 0.2, 30);
        let bw = BandwidthConfig::default();
        let la = discrepancy_loss(&s, 0.3, &region, &bw).map(|l| l.loss);
        let lb = discrepancy_loss(&t, 0.3, &region, &bw).map(|l| l.loss);
        prop_assert_eq!(la, lb);
    }

    #[test]
    fn sharp_estimate_survives_affine_reparameterization(
        rows in rows(),
        jump in -1.0..1.0f64,
        scale in 0.05..20.0f64,
        shift in -10.0..10.0f64,
    ) {
        let s = sample_from(&rows, jump);
        let t = s.reparameterize(scale, shift).unwrap();
        let cfg = SharpConfig::default();
        if let (Ok(a), Ok(b)) = (
            estimate_sharp(&s, 0.5, 0.7, &cfg),
            estimate_sharp(&t, 0.5 * scale, 0.7 * scale, &cfg),
        ) {
            prop_assert!((a.magnitude - b.magnitude).abs() < 1e-9 * (1.0 + a.magnitude));
            prop_assert!(distance(&a.effect.end, &b.effect.end).unwrap() < 1e-9);
        }
    }

    #[test]
    fn wasserstein_geodesic_interpolates_quantiles(
        a in sorted_quantiles(15),
        b in sorted_quantiles(15),
        t in 0.0..1.0f64,
    ) {
        let (p, q) = (
            MetricObject::quantiles(a.clone(), None).unwrap(),
            MetricObject::quantiles(b.clone(), None).unwrap(),
        );
        let g = geodesic_eval(&p, &q, t).unwrap();
        for k in 0..15 {
            prop_assert!((g.data()[k] - ((1.0 - t) * a[k] + t * b[k])).abs() < 1e-12);
        }
    }

    #[test]
    fn shared_translation_has_zero_quotient_distance(
        a in prop::collection::vec(-2.0..2.0f64, 3),
        d in prop::collection::vec(-2.0..2.0f64, 3),
        shift in prop::collection::vec(-2.0..2.0f64, 3),
    ) {
        let obj = |v: Vec<f64>| MetricObject::euclidean(v).unwrap();
        let plus = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p + q).collect::<Vec<_>>();
        let omega = obj(vec![0.0; 3]);
        let e1 = GeodesicEffect::new(obj(a.clone()), obj(plus(&a, &d)), omega.clone()).unwrap();
        let a2 = plus(&a, &shift);
        let e2 = GeodesicEffect::new(obj(a2.clone()), obj(plus(&a2, &d)), omega.clone()).unwrap();
        prop_assert!(quotient_distance_dg(&e1, &e2, &omega).unwrap() < 1e-12);
        let moved = transport_apply(&e1.start, &e1.end, &omega).unwrap();
        prop_assert!(distance(&moved, &obj(d.clone())).unwrap() < 1e-12);
    }
}
