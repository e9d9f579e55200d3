//! Monte Carlo campaigns over sample sizes and replications.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::dgp::Dgp;
use crate::bandwidth::{compute_bounds, select_bandwidth_with, BandwidthConfig};
use crate::error::{Error, Result};
use crate::frechet::LfrEngine;
use crate::sharp::estimate_sharp_with;
use crate::spaces::{self, GeodesicEffect};

/// Identifier of the generator behind every replication stream.
pub const RNG_ALGORITHM: &str = "chacha8-stream";

/// Largest tolerated share of failed replications.
pub const MAX_FAIL_RATE: f64 = 0.05;

/// Generator for replication `rep` at sample size `n`: the campaign seed
/// keys the generator and `(n, rep)` selects the stream, so every unit of
/// work is independent of scheduling.
pub fn replication_rng(seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | rep as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandwidthMode {
    /// Data-adaptive selection on every replication.
    Auto,
    /// The upper end of the data-adaptive search range.
    Max,
    Fixed {
        h0: f64,
        h1: f64,
    },
    /// `scale * n^(-1/5)` on both sides.
    Rate {
        scale: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub seed: u64,
    pub reps: usize,
    pub sizes: Vec<usize>,
    pub bandwidth: BandwidthMode,
    pub search: BandwidthConfig,
}

impl CampaignConfig {
    pub fn new(seed: u64, reps: usize, sizes: Vec<usize>) -> Self {
        Self {
            seed,
            reps,
            sizes,
            bandwidth: BandwidthMode::Auto,
            search: BandwidthConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 10 {
            return Err(Error::InvalidConfig(format!(
                "a campaign needs at least 10 replications, got {}",
                self.reps
            )));
        }
        if self.sizes.is_empty() {
            return Err(Error::InvalidConfig("no sample sizes given".into()));
        }
        if let BandwidthMode::Fixed { h0, h1 } = self.bandwidth {
            if !(h0 > 0.0 && h1 > 0.0) {
                return Err(Error::InvalidConfig(
                    "fixed bandwidths must be positive".into(),
                ));
            }
        }
        if let BandwidthMode::Rate { scale } = self.bandwidth {
            if !(scale > 0.0) {
                return Err(Error::InvalidConfig("rate scale must be positive".into()));
            }
        }
        self.search.validate()
    }
}

/// One replication. Failed replications carry the error code and no
/// estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepRecord {
    pub setting: String,
    pub n: usize,
    pub rep: usize,
    pub bandwidth: Option<f64>,
    /// Distance in the space of geodesics between estimate and truth.
    pub bias: Option<f64>,
    /// Length of the estimated effect.
    pub magnitude: Option<f64>,
    /// The search range was empty and the bandwidth fell back to `b_min`.
    pub fallback: bool,
    pub error: Option<&'static str>,
}

impl RepRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Least-squares fit of `ln(mean bias)` on `ln n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub sizes: Vec<usize>,
    pub mean_bias: Vec<f64>,
    pub median_bias: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

impl RateFit {
    pub fn from_biases(sizes: &[usize], biases: &[Vec<f64>]) -> Result<Self> {
        if sizes.len() < 2 || sizes.len() != biases.len() {
            return Err(Error::InvalidConfig(
                "a rate fit needs at least two sample sizes".into(),
            ));
        }
        if biases.iter().any(|b| b.is_empty()) {
            return Err(Error::InvalidConfig(
                "a sample size has no successful replications".into(),
            ));
        }
        let mean_bias: Vec<f64> = biases.iter().map(|b| mean(b)).collect();
        let median_bias: Vec<f64> = biases.iter().map(|b| median(b)).collect();
        let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).ln()).collect();
        let y: Vec<f64> = mean_bias.iter().map(|b| b.ln()).collect();
        let (slope, intercept) = ols(&x, &y);
        Ok(Self {
            sizes: sizes.to_vec(),
            mean_bias,
            median_bias,
            slope,
            intercept,
        })
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 0 {
        0.5 * (s[m - 1] + s[m])
    } else {
        s[m]
    }
}

/// Slope and intercept of the least-squares line through `(x, y)`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignMetadata {
    pub setting: String,
    pub seed: u64,
    pub rng: &'static str,
    /// SHA-256 of the canonical JSON of the generator and campaign settings.
    pub config_hash: String,
    pub reps: usize,
    pub sizes: Vec<usize>,
    pub bandwidth: BandwidthMode,
    pub failed: usize,
    /// Replications whose automatic search fell back to `b_min`.
    pub fallbacks: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Campaign {
    pub records: Vec<RepRecord>,
    pub metadata: CampaignMetadata,
    pub rate: Option<RateFit>,
}

impl Campaign {
    /// Successful biases for sample size `n`, in replication order.
    pub fn biases(&self, n: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.n == n)
            .filter_map(|r| r.bias)
            .collect()
    }

    pub fn magnitudes(&self, n: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.n == n)
            .filter_map(|r| r.magnitude)
            .collect()
    }

    pub fn bandwidths(&self, n: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.n == n)
            .filter_map(|r| r.bandwidth)
            .collect()
    }

    /// Writes `setting,n,rep,bandwidth,bias,fail_flag`; failed rows leave
    /// the numeric fields empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["setting", "n", "rep", "bandwidth", "bias", "fail_flag"])
            .map_err(io)?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        for r in &self.records {
            w.write_record([
                r.setting.clone(),
                r.n.to_string(),
                r.rep.to_string(),
                opt(r.bandwidth),
                opt(r.bias),
                u8::from(r.failed()).to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn metadata_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.metadata).map_err(|e| Error::Io(e.to_string()))
    }

    /// Slope report; `null` when the campaign has a single sample size.
    pub fn rate_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.rate).map_err(|e| Error::Io(e.to_string()))
    }
}

/// Result of one successful replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Replication {
    pub bandwidth: f64,
    pub bias: f64,
    pub magnitude: f64,
    pub fallback: bool,
}

/// Automatic bandwidth for a campaign replication. When the search range
/// is inverted or leaves no usable evaluation points, `b_min` is used: the
/// smallest bandwidth that still reaches 20 observations on each side.
fn auto_bandwidth(engine: &LfrEngine, c: f64, cfg: &BandwidthConfig) -> Result<(f64, bool)> {
    match select_bandwidth_with(engine, c, cfg) {
        Ok(s) => Ok((s.b_star, false)),
        Err(Error::InvertedBounds { b_min, .. }) => Ok((b_min, true)),
        Err(Error::AllWindowsDegenerate) => Ok((compute_bounds(engine.sorted_r(), c)?.0, true)),
        Err(e) => Err(e),
    }
}

/// Runs one replication and scores it against `truth`.
pub fn run_replication<D: Dgp + ?Sized>(
    dgp: &D,
    truth: &GeodesicEffect,
    n: usize,
    rep: usize,
    cfg: &CampaignConfig,
) -> Result<Replication> {
    let mut rng = replication_rng(cfg.seed, n, rep);
    let sample = dgp.generate_n(n, &mut rng)?;
    let c = sample.cutoff();
    let engine = LfrEngine::from_sample(&sample, cfg.search.kernel, cfg.search.solver)?;
    let mut fallback = false;
    let (h0, h1) = match cfg.bandwidth {
        BandwidthMode::Auto => {
            let (b, fell_back) = auto_bandwidth(&engine, c, &cfg.search)?;
            fallback = fell_back;
            (b, b)
        }
        BandwidthMode::Max => {
            let b = compute_bounds(engine.sorted_r(), c)?.1;
            (b, b)
        }
        BandwidthMode::Fixed { h0, h1 } => (h0, h1),
        BandwidthMode::Rate { scale } => {
            let h = scale * (n as f64).powf(-0.2);
            (h, h)
        }
    };
    let est = estimate_sharp_with(&engine, c, h0, h1, Some(&truth.reference))?;
    let bias = spaces::quotient_distance_dg(&est.effect, truth, &truth.reference)?;
    Ok(Replication {
        bandwidth: h0,
        bias,
        magnitude: est.magnitude,
        fallback,
    })
}

/// Runs every `(n, rep)` pair concurrently and merges in `(n, rep)` order.
///
/// Failures are recorded per replication; the campaign errors if more than
/// 5% of all replications fail.
pub fn run_campaign<D: Dgp + Serialize>(dgp: &D, cfg: &CampaignConfig) -> Result<Campaign> {
    cfg.validate()?;
    let truth = dgp.truth()?;
    let setting = dgp.label();
    let jobs: Vec<(usize, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|&n| (0..cfg.reps).map(move |rep| (n, rep)))
        .collect();
    let records: Vec<RepRecord> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let base = RepRecord {
                setting: setting.clone(),
                n,
                rep,
                bandwidth: None,
                bias: None,
                magnitude: None,
                fallback: false,
                error: None,
            };
            match run_replication(dgp, &truth, n, rep, cfg) {
                Ok(out) => RepRecord {
                    bandwidth: Some(out.bandwidth),
                    bias: Some(out.bias),
                    magnitude: Some(out.magnitude),
                    fallback: out.fallback,
                    ..base
                },
                Err(e) => RepRecord {
                    error: Some(e.code()),
                    ..base
                },
            }
        })
        .collect();
    let failed = records.iter().filter(|r| r.failed()).count();
    let fallbacks = records.iter().filter(|r| r.fallback).count();
    let total = records.len();
    if failed as f64 > MAX_FAIL_RATE * total as f64 {
        return Err(Error::CampaignFailed { failed, total });
    }
    let config_hash = {
        let canon = serde_json::json!({ "dgp": dgp, "campaign": cfg });
        let digest = Sha256::digest(canon.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    };
    let mut campaign = Campaign {
        records,
        metadata: CampaignMetadata {
            setting,
            seed: cfg.seed,
            rng: RNG_ALGORITHM,
            config_hash,
            reps: cfg.reps,
            sizes: cfg.sizes.clone(),
            bandwidth: cfg.bandwidth,
            failed,
            fallbacks,
            total,
        },
        rate: None,
    };
    if cfg.sizes.len() >= 2 {
        let biases: Vec<Vec<f64>> = cfg.sizes.iter().map(|&n| campaign.biases(n)).collect();
        campaign.rate = Some(RateFit::from_biases(&cfg.sizes, &biases)?);
    }
    Ok(campaign)
}
