//! Data-generating processes with known population effects.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{RddSample, Record};
use crate::spaces::{self, GeodesicEffect, MetricObject};

/// Smallest sample size a generator accepts.
pub const MIN_DRAWS: usize = 40;

/// A generator with a closed-form target effect at the cutoff `0`.
pub trait Dgp: Sync {
    /// Short label written to the `setting` column of campaign output.
    fn label(&self) -> String;

    fn generate_n(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<RddSample>;

    /// Population effect; its reference point is the one used when scoring
    /// estimates.
    fn truth(&self) -> Result<GeodesicEffect>;
}

fn check_n(n: usize) -> Result<()> {
    if n < MIN_DRAWS {
        return Err(Error::InvalidConfig(format!(
            "sample size must be at least {MIN_DRAWS}, got {n}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScalarSetting {
    I,
    II,
    III,
    IV,
}

impl ScalarSetting {
    pub const ALL: [ScalarSetting; 4] = [Self::I, Self::II, Self::III, Self::IV];

    /// Control regression function.
    pub fn below(self, r: f64) -> f64 {
        match self {
            Self::I => r,
            Self::II => r + (3.0 * PI * r).sin(),
            Self::III => r + (8.0 * PI * r).sin() + (6.0 * PI * r).cos(),
            Self::IV => r + (6.0 * PI * r).sin(),
        }
    }

    /// Treated regression function without the jump.
    pub fn above(self, r: f64) -> f64 {
        match self {
            Self::III => r + (6.0 * PI * r).sin() + (8.0 * PI * r).cos(),
            other => other.below(r),
        }
    }
}

impl fmt::Display for ScalarSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::IV => "IV",
        };
        f.write_str(s)
    }
}

impl FromStr for ScalarSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Self::I),
            "II" | "2" => Ok(Self::II),
            "III" | "3" => Ok(Self::III),
            "IV" | "4" => Ok(Self::IV),
            _ => Err(Error::InvalidConfig(format!(
                "unknown scalar setting `{s}`"
            ))),
        }
    }
}

/// Scalar outcome `Y = m(R) + jump 1{R >= 0} + N(0, noise^2)`,
/// `R ~ Unif(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarDgp {
    pub setting: ScalarSetting,
    pub jump: f64,
    pub noise: f64,
    pub n: usize,
}

impl ScalarDgp {
    pub fn new(setting: ScalarSetting, n: usize) -> Self {
        Self {
            setting,
            jump: 1.0,
            noise: 0.5,
            n,
        }
    }

    /// Noiseless regression value at `r`.
    pub fn mean(&self, r: f64) -> f64 {
        if r < 0.0 {
            self.setting.below(r)
        } else {
            self.setting.above(r) + self.jump
        }
    }

    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Result<RddSample> {
        self.generate_n(self.n, rng)
    }
}

impl Dgp for ScalarDgp {
    fn label(&self) -> String {
        self.setting.to_string()
    }

    fn generate_n(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<RddSample> {
        check_n(n)?;
        let noise = Normal::new(0.0, self.noise)
            .map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let r: f64 = rng.gen_range(-1.0..1.0);
            let y = self.mean(r) + noise.sample(rng);
            records.push(Record::new(r, MetricObject::scalar(y)?));
        }
        RddSample::new(records, 0.0)
    }

    fn truth(&self) -> Result<GeodesicEffect> {
        let start = MetricObject::scalar(self.setting.below(0.0))?;
        let end = MetricObject::scalar(self.setting.above(0.0) + self.jump)?;
        GeodesicEffect::new(start.clone(), end, start)
    }
}

/// Weighted two-block network: each edge is present with a block-dependent
/// probability and carries weight `cos(pi R / 2) + jump 1{R >= 0} + U(0, 1)`.
/// A fresh graph is drawn for every observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkDgp {
    pub nodes: usize,
    pub p_within: f64,
    pub p_between: f64,
    pub jump: f64,
    pub n: usize,
}

impl Default for NetworkDgp {
    fn default() -> Self {
        Self {
            nodes: 10,
            p_within: 0.5,
            p_between: 0.2,
            jump: 1.0,
            n: 100,
        }
    }
}

impl NetworkDgp {
    pub fn with_n(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    fn edge_probability(&self, i: usize, j: usize) -> f64 {
        let half = self.nodes / 2;
        if (i < half) == (j < half) {
            self.p_within
        } else {
            self.p_between
        }
    }

    /// Laplacian of the expected weight matrix at `r` approached from the
    /// given side.
    pub fn expected_laplacian(&self, r: f64, treated: bool) -> Result<MetricObject> {
        let m = self.nodes;
        let level = (PI * r / 2.0).cos() + if treated { self.jump } else { 0.0 } + 0.5;
        let mut w = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                if i != j {
                    w[i * m + j] = self.edge_probability(i, j) * level;
                }
            }
        }
        MetricObject::laplacian_from_weights(m, &w, None)
    }

    pub fn draw(&self, r: f64, rng: &mut ChaCha8Rng) -> Result<MetricObject> {
        let m = self.nodes;
        let base = (PI * r / 2.0).cos() + if r >= 0.0 { self.jump } else { 0.0 };
        let mut w = vec![0.0; m * m];
        for i in 0..m {
            for j in i + 1..m {
                if rng.gen::<f64>() < self.edge_probability(i, j) {
                    let v = base + rng.gen::<f64>();
                    w[i * m + j] = v;
                    w[j * m + i] = v;
                }
            }
        }
        MetricObject::laplacian_from_weights(m, &w, None)
    }

    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Result<RddSample> {
        self.generate_n(self.n, rng)
    }
}

impl Dgp for NetworkDgp {
    fn label(&self) -> String {
        "network".into()
    }

    fn generate_n(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<RddSample> {
        check_n(n)?;
        if self.nodes < 2 {
            return Err(Error::InvalidConfig(
                "network needs at least 2 nodes".into(),
            ));
        }
        let mut records = Vec::with_capacity(n);
        for _ in 0..n {
            let r: f64 = rng.gen_range(-1.0..1.0);
            records.push(Record::new(r, self.draw(r, rng)?));
        }
        RddSample::new(records, 0.0)
    }

    /// Geodesic between the expected Laplacians at `0-` and `0+`, with the
    /// control-side limit as reference.
    fn truth(&self) -> Result<GeodesicEffect> {
        let start = self.expected_laplacian(0.0, false)?;
        let end = self.expected_laplacian(0.0, true)?;
        GeodesicEffect::new(start.clone(), end, start)
    }
}

/// Who can deviate from their assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ComplianceLaw {
    /// Always-takers and never-takers both present; `P(T = 1)` rises from
    /// `low` to `high` at the cutoff.
    TwoSided { low: f64, high: f64 },
    /// No never-takers: every assigned unit is treated.
    AlwaysTakers { share: f64 },
    /// No always-takers: no unassigned unit is treated.
    NeverTakers { share: f64 },
}

impl ComplianceLaw {
    /// Limits of `P(T = 1 | R)` at the cutoff from below and above.
    pub fn limits(self) -> (f64, f64) {
        match self {
            Self::TwoSided { low, high } => (low, high),
            Self::AlwaysTakers { share } => (share, 1.0),
            Self::NeverTakers { share } => (0.0, 1.0 - share),
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnitType {
    Complier,
    AlwaysTaker,
    NeverTaker,
}

/// Outcome family of a fuzzy generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FuzzyOutcome {
    /// Uniform distributions with quantile function
    /// `mu + s (u - 1/2)` on a grid of `grid_len` levels.
    Wasserstein { grid_len: usize },
    /// Points `Exp_omega(v)` on the positive orthant of the 2-sphere, with
    /// `omega` the barycentre of the orthant.
    Sphere,
}

/// Fuzzy design with principal strata. Shares of always-, never-takers and
/// compliers move smoothly in `R` with a logistic tilt, so the compliance
/// limits at the cutoff are exactly those of the law.
///
/// Location of the outcome is `base(R) + effect T + stratum shift + noise`;
/// for distributions the spread also grows by `scale_effect` under
/// treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzyDgp {
    pub outcome: FuzzyOutcome,
    pub law: ComplianceLaw,
    pub effect: f64,
    pub scale_effect: f64,
    /// Shift added for always-takers and subtracted for never-takers.
    pub stratum_shift: f64,
    /// Half-width of uniform noise on the location.
    pub noise: f64,
    /// Slope of the logistic tilt in `R`.
    pub tilt: f64,
    pub n: usize,
}

impl FuzzyDgp {
    pub fn wasserstein(law: ComplianceLaw, n: usize) -> Self {
        Self {
            outcome: FuzzyOutcome::Wasserstein { grid_len: 25 },
            law,
            effect: 1.0,
            scale_effect: 0.5,
            stratum_shift: 0.3,
            noise: 0.2,
            tilt: 1.0,
            n,
        }
    }

    pub fn sphere(law: ComplianceLaw, n: usize) -> Self {
        Self {
            outcome: FuzzyOutcome::Sphere,
            law,
            effect: 0.2,
            scale_effect: 0.0,
            stratum_shift: 0.05,
            noise: 0.03,
            tilt: 1.0,
            n,
        }
    }

    /// Base point of the sphere family.
    pub fn sphere_reference() -> MetricObject {
        let s = 1.0 / 3f64.sqrt();
        MetricObject::from_parts(spaces::Space::CompositionalSphere { dim: 3 }, vec![s; 3])
    }

    fn sphere_frame() -> [[f64; 3]; 2] {
        let a = 1.0 / 2f64.sqrt();
        let b = 1.0 / 6f64.sqrt();
        [[a, -a, 0.0], [b, b, -2.0 * b]]
    }

    fn base(&self, r: f64) -> f64 {
        match self.outcome {
            FuzzyOutcome::Wasserstein { .. } => 0.5 * r + 0.3 * (PI * r).sin(),
            FuzzyOutcome::Sphere => 0.1 * (PI * r / 2.0).sin(),
        }
    }

    /// Shares of always-takers and of always-takers plus compliers at `r`.
    fn shares(&self, r: f64) -> (f64, f64) {
        let tilt = |p: f64| {
            if p <= 0.0 {
                0.0
            } else if p >= 1.0 {
                1.0
            } else {
                logistic(logit(p) + self.tilt * r)
            }
        };
        let (lo, hi) = self.law.limits();
        (tilt(lo), tilt(hi))
    }

    pub fn draw_type(&self, r: f64, rng: &mut ChaCha8Rng) -> UnitType {
        let (always, treated_if_assigned) = self.shares(r);
        let u: f64 = rng.gen();
        if u < always {
            UnitType::AlwaysTaker
        } else if u < treated_if_assigned {
            UnitType::Complier
        } else {
            UnitType::NeverTaker
        }
    }

    fn outcome(
        &self,
        r: f64,
        treated: bool,
        kind: UnitType,
        rng: &mut ChaCha8Rng,
    ) -> Result<MetricObject> {
        let shift = match kind {
            UnitType::Complier => 0.0,
            UnitType::AlwaysTaker => self.stratum_shift,
            UnitType::NeverTaker => -self.stratum_shift,
        };
        let t = if treated { 1.0 } else { 0.0 };
        let mut noise = || {
            if self.noise > 0.0 {
                rng.gen_range(-self.noise..self.noise)
            } else {
                0.0
            }
        };
        let loc = self.base(r) + self.effect * t + shift + noise();
        match self.outcome {
            FuzzyOutcome::Wasserstein { grid_len } => {
                let spread = 1.0 + self.scale_effect * t + 0.5 * noise();
                let q = (0..grid_len)
                    .map(|k| {
                        let u = k as f64 / (grid_len - 1) as f64;
                        loc + spread * (u - 0.5)
                    })
                    .collect();
                MetricObject::quantiles(q, None)
            }
            FuzzyOutcome::Sphere => {
                let [e1, e2] = Self::sphere_frame();
                let a = self.base(r) + shift + noise();
                let b = self.effect * t + noise();
                let v: Vec<f64> = (0..3).map(|k| a * e1[k] + b * e2[k]).collect();
                spaces::exp_map(&Self::sphere_reference(), &v)
            }
        }
    }

    pub fn generate(&self, rng: &mut ChaCha8Rng) -> Result<RddSample> {
        check_n(self.n)?;
        let mut records = Vec::with_capacity(self.n);
        for _ in 0..self.n {
            let r: f64 = rng.gen_range(-1.0..1.0);
            let z = r >= 0.0;
            let kind = self.draw_type(r, rng);
            let t = match kind {
                UnitType::AlwaysTaker => true,
                UnitType::NeverTaker => false,
                UnitType::Complier => z,
            };
            let y = self.outcome(r, t, kind, rng)?;
            records.push(Record::new(r, y).with_treatment(t).with_assignment(z));
        }
        RddSample::new(records, 0.0)
    }

    /// Compliers' effect at the cutoff: a quantile-function difference for
    /// distributions, a tangent vector at the reference for the sphere.
    pub fn true_late(&self) -> Vec<f64> {
        match self.outcome {
            FuzzyOutcome::Wasserstein { grid_len } => (0..grid_len)
                .map(|k| {
                    let u = k as f64 / (grid_len - 1) as f64;
                    self.effect + self.scale_effect * (u - 0.5)
                })
                .collect(),
            FuzzyOutcome::Sphere => Self::sphere_frame()[1]
                .iter()
                .map(|x| x * self.effect)
                .collect(),
        }
    }
}
