//! Simulation lab: generators with known effects and Monte Carlo campaigns.

mod baseline;
mod campaign;
mod dgp;

pub use baseline::{cv_bandwidth, CvSearch};
pub use campaign::{
    mean, median, ols, replication_rng, run_campaign, run_replication, BandwidthMode, Campaign,
    CampaignConfig, CampaignMetadata, RateFit, RepRecord, Replication, MAX_FAIL_RATE,
    RNG_ALGORITHM,
};
pub use dgp::{
    ComplianceLaw, Dgp, FuzzyDgp, FuzzyOutcome, NetworkDgp, ScalarDgp, ScalarSetting, UnitType,
    MIN_DRAWS,
};
