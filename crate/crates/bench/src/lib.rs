//! Fixed-seed inputs shared by the benchmarks.

use geordd::simlab::{
    replication_rng, ComplianceLaw, Dgp, FuzzyDgp, NetworkDgp, ScalarDgp, ScalarSetting,
};
use geordd::RddSample;

const SEED: u64 = 20_240_901;

pub fn scalar(setting: ScalarSetting, n: usize) -> RddSample {
    ScalarDgp::new(setting, n)
        .generate(&mut replication_rng(SEED, n, 0))
        .expect("scalar draw")
}

pub fn network(n: usize) -> RddSample {
    NetworkDgp::default()
        .generate_n(n, &mut replication_rng(SEED, n, 1))
        .expect("network draw")
}

/// Sphere outcomes with always-takers, for the tangent-space estimators.
pub fn sphere(n: usize) -> RddSample {
    FuzzyDgp::sphere(ComplianceLaw::AlwaysTakers { share: 0.3 }, n)
        .generate(&mut replication_rng(SEED, n, 2))
        .expect("sphere draw")
}
