//! Small Monte Carlo checks of the estimators against their generators.

use geordd::bandwidth::{compute_bounds, discrepancy_loss, EvalRegion};
use geordd::fuzzy::{estimate_compliance, estimate_fuzzy_late, FuzzyConfig};
use geordd::simlab::{
    mean, median, replication_rng, run_campaign, BandwidthMode, CampaignConfig, ComplianceLaw,
    FuzzyDgp, NetworkDgp, ScalarDgp, ScalarSetting,
};
use geordd::{BandwidthConfig, KernelKind};

#[test]
fn logistic_compliance_jump_is_recovered() {
    let dgp = FuzzyDgp::wasserstein(
        ComplianceLaw::TwoSided {
            low: 0.2,
            high: 0.8,
        },
        2000,
    );
    let jumps: Vec<f64> = (0..20)
        .map(|rep| {
            let s = dgp.generate(&mut replication_rng(31, 2000, rep)).unwrap();
            estimate_compliance(&s, 0.3, 0.3, KernelKind::Triangular)
                .unwrap()
                .denominator()
        })
        .collect();
    for d in &jumps {
        assert!((d - 0.6).abs() < 0.25, "single-sample jump {d}");
    }
    let m = mean(&jumps);
    assert!((m - 0.6).abs() < 0.1, "mean jump {m}");
}

#[test]
fn distributional_late_error_shrinks_with_n() {
    let sizes = [200, 500, 1000, 2000];
    let law = ComplianceLaw::TwoSided {
        low: 0.2,
        high: 0.8,
    };
    let truth = FuzzyDgp::wasserstein(law, 200).true_late();
    let cfg = FuzzyConfig {
        delta_comply: 0.0,
        ..FuzzyConfig::default()
    };
    let medians: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let dgp = FuzzyDgp::wasserstein(law, n);
            let h = (n as f64).powf(-0.2);
            let errors: Vec<f64> = (0..100)
                .filter_map(|rep| {
                    let s = dgp.generate(&mut replication_rng(41, n, rep)).unwrap();
                    let est = estimate_fuzzy_late(&s, h, h, &cfg).ok()?;
                    let diff: Vec<f64> = est
                        .complier_effect
                        .iter()
                        .zip(&truth)
                        .map(|(a, b)| a - b)
                        .collect();
                    Some(s.space().hilbert_norm_sq(&diff).sqrt())
                })
                .collect();
            assert!(
                errors.len() >= 90,
                "n = {n}: {} of 100 succeeded",
                errors.len()
            );
            median(&errors)
        })
        .collect();
    let inversions = medians.windows(2).filter(|w| w[1] >= w[0]).count();
    assert!(inversions <= 1, "medians {medians:?}");
    assert!(medians[3] < medians[0], "medians {medians:?}");
}

#[test]
fn wiggly_regression_penalizes_wide_windows() {
    let cfg = BandwidthConfig::default();
    let mut wins = 0;
    for rep in 0..10 {
        let s = ScalarDgp::new(ScalarSetting::IV, 1000)
            .generate(&mut replication_rng(51, 1000, rep))
            .unwrap();
        let r = s.running();
        let (b_min, b_max) = compute_bounds(&r, 0.0).unwrap();
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let region = EvalRegion::new(lo, hi, 0.0, b_min, cfg.eval_points);
        let small = discrepancy_loss(&s, b_min * 1.2, &region, &cfg)
            .unwrap()
            .loss;
        let large = discrepancy_loss(&s, b_max * 0.95, &region, &cfg)
            .unwrap()
            .loss;
        if small < large {
            wins += 1;
        }
    }
    assert!(wins >= 9, "small bandwidth won {wins} of 10");
}

#[test]
fn network_median_bias_falls_with_n() {
    let mut cfg = CampaignConfig::new(61, 30, vec![200, 1000]);
    cfg.bandwidth = BandwidthMode::Rate { scale: 1.0 };
    let c = run_campaign(&NetworkDgp::default(), &cfg).unwrap();
    let (m200, m1000) = (median(&c.biases(200)), median(&c.biases(1000)));
    assert!(m1000 < m200, "median bias {m200} at 200, {m1000} at 1000");
    assert_eq!(c.metadata.failed, 0);
}

#[test]
fn max_bandwidth_oversmooths_setting_three() {
    let dgp = ScalarDgp::new(ScalarSetting::III, 1000);
    let mut cfg = CampaignConfig::new(71, 30, vec![1000]);
    let auto = mean(&run_campaign(&dgp, &cfg).unwrap().biases(1000));
    cfg.bandwidth = BandwidthMode::Max;
    let max = mean(&run_campaign(&dgp, &cfg).unwrap().biases(1000));
    assert!(max > 1.2 * auto, "b_max bias {max}, b* bias {auto}");
}
