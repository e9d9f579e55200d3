//! Fuzzy-design estimators: the compliers' effect in a Hilbert embedding or
//! a tangent space, and the compliers' geodesic effect under one-sided
//! noncompliance.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::frechet::{FrechetSolveConfig, KernelKind, LfrEngine, Side};
use crate::sample::RddSample;
use crate::sharp::sample_frechet_mean;
use crate::spaces::{self, GeodesicEffect, MetricObject, Space};

/// Default refusal threshold on `|m1 - m0|`.
pub const DEFAULT_DELTA_COMPLY: f64 = 0.05;

/// `|m1 - m0 - 1|` below this counts as full compliance when a stratum is
/// empty.
const FULL_COMPLIANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzyVariant {
    Embedding,
    GeodesicOneSided,
    RiemannianTangent,
    GeodesicRiemannian,
}

impl fmt::Display for FuzzyVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FuzzyVariant::Embedding => "embedding",
            FuzzyVariant::GeodesicOneSided => "geodesic",
            FuzzyVariant::RiemannianTangent => "tangent",
            FuzzyVariant::GeodesicRiemannian => "geodesic-tangent",
        })
    }
}

impl std::str::FromStr for FuzzyVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "embedding" | "late" => Ok(FuzzyVariant::Embedding),
            "geodesic" | "geodesic-one-sided" => Ok(FuzzyVariant::GeodesicOneSided),
            "tangent" | "riemannian" | "riemannian-tangent" => Ok(FuzzyVariant::RiemannianTangent),
            "geodesic-tangent" | "geodesic-riemannian" => Ok(FuzzyVariant::GeodesicRiemannian),
            other => Err(Error::InvalidConfig(format!(
                "unknown fuzzy variant `{other}`"
            ))),
        }
    }
}

/// Which non-complier stratum exists besides compliers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Noncompliance {
    /// Units with `T = 1` even when `Z = 0`; observed left of the cutoff.
    AlwaysTakers,
    /// Units with `T = 0` even when `Z = 1`; observed right of the cutoff.
    NeverTakers,
}

impl Noncompliance {
    fn stratum(self) -> &'static str {
        match self {
            Noncompliance::AlwaysTakers => "always-taker",
            Noncompliance::NeverTakers => "never-taker",
        }
    }

    fn side(self) -> Side {
        match self {
            Noncompliance::AlwaysTakers => Side::Left,
            Noncompliance::NeverTakers => Side::Right,
        }
    }

    fn contains(self, t: bool, z: bool) -> bool {
        match self {
            Noncompliance::AlwaysTakers => t && !z,
            Noncompliance::NeverTakers => !t && z,
        }
    }
}

impl std::str::FromStr for Noncompliance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "always" | "always-takers" | "always_takers" => Ok(Noncompliance::AlwaysTakers),
            "never" | "never-takers" | "never_takers" => Ok(Noncompliance::NeverTakers),
            other => Err(Error::InvalidConfig(format!(
                "unknown noncompliance side `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyConfig {
    pub kernel: KernelKind,
    pub solver: FrechetSolveConfig,
    pub delta_comply: f64,
    /// Reference point: the tangent base for the Riemannian variants and the
    /// transport reference for effects. Defaults to the sample Frechet mean.
    pub reference: Option<MetricObject>,
    /// Refuse with `EmptyStratum` even when full compliance makes the stratum
    /// mean irrelevant.
    pub strict_stratum: bool,
}

impl Default for FuzzyConfig {
    fn default() -> Self {
        Self {
            kernel: KernelKind::Triangular,
            solver: FrechetSolveConfig::default(),
            delta_comply: DEFAULT_DELTA_COMPLY,
            reference: None,
            strict_stratum: false,
        }
    }
}

/// Local-linear fit of the treatment indicator on each side of the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplianceFit {
    /// Left intercept clamped to `[0, 1]`.
    pub below: f64,
    /// Right intercept clamped to `[0, 1]`.
    pub above: f64,
    pub raw_below: f64,
    pub raw_above: f64,
    pub slope_below: f64,
    pub slope_above: f64,
    pub bandwidths: (f64, f64),
}

impl ComplianceFit {
    pub fn denominator(&self) -> f64 {
        self.above - self.below
    }
}

/// Outcome estimate for the always-taker or never-taker stratum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumFit {
    pub side: Noncompliance,
    /// Stratum observations with nonzero weight.
    pub size: usize,
    /// `None` when the stratum is empty under full compliance.
    pub estimate: Option<MetricObject>,
    /// Tangent-space estimate, for the Riemannian variant.
    pub tangent: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzyEstimate {
    pub variant: FuzzyVariant,
    pub compliance: ComplianceFit,
    pub denominator: f64,
    /// Compliers' effect as a vector: a Hilbert-space difference for
    /// embedding variants, a tangent vector for Riemannian ones.
    pub complier_effect: Vec<f64>,
    /// Hilbert norm of `complier_effect` for the vector variants; geodesic length of
    /// `effect` for the geodesic ones.
    pub magnitude: f64,
    /// One-sided outcome limits at the cutoff (tangent variants: their Exp).
    pub outcome_limits: (MetricObject, MetricObject),
    pub effect: Option<GeodesicEffect>,
    pub stratum: Option<StratumFit>,
    pub reference: MetricObject,
    pub warnings: Vec<Warning>,
}

fn push_warning(ws: &mut Vec<Warning>, w: Warning) {
    if !ws.contains(&w) {
        ws.push(w);
    }
}

/// Everything the estimators share: the outcome engine, treatment and
/// assignment columns aligned with the engine's order, and the reference.
struct Prepared {
    engine: LfrEngine,
    t: Vec<bool>,
    z: Option<Vec<bool>>,
    cutoff: f64,
}

impl Prepared {
    fn new(sample: &RddSample, cfg: &FuzzyConfig, need_z: bool) -> Result<Self> {
        if !(cfg.delta_comply >= 0.0) {
            return Err(Error::InvalidConfig(
                "delta_comply must be nonnegative".into(),
            ));
        }
        if !sample.has_treatment() {
            return Err(Error::MissingTreatment);
        }
        if need_z && !sample.has_assignment() {
            return Err(Error::MissingAssignment);
        }
        let engine = LfrEngine::from_sample(sample, cfg.kernel, cfg.solver)?;
        Self::with_engine(sample, engine)
    }

    fn with_engine(sample: &RddSample, engine: LfrEngine) -> Result<Self> {
        let recs = sample.records();
        let c = sample.cutoff();
        let t = (0..engine.len())
            .map(|p| recs[engine.original_index(p)].t.unwrap_or(false))
            .collect();
        let z = if sample.has_assignment() {
            let mut z = Vec::with_capacity(engine.len());
            for p in 0..engine.len() {
                let row = engine.original_index(p);
                let zi = recs[row].z.unwrap_or(false);
                if zi != (recs[row].r >= c) {
                    return Err(Error::InvariantViolation {
                        row,
                        detail: format!("assignment z must equal 1{{r >= {c}}}"),
                    });
                }
                z.push(zi);
            }
            Some(z)
        } else {
            None
        };
        Ok(Self {
            engine,
            t,
            z,
            cutoff: c,
        })
    }

    fn compliance(&self, h0: f64, h1: f64) -> Result<ComplianceFit> {
        let mut out = [(0.0, 0.0); 2];
        for (k, (side, h)) in [(Side::Left, h0), (Side::Right, h1)]
            .into_iter()
            .enumerate()
        {
            let (range, ll) = self.engine.side_local_linear(self.cutoff, h, side)?;
            let t = &self.t[range];
            let dot = |w: Vec<f64>| -> f64 {
                w.iter()
                    .zip(t)
                    .map(|(wi, ti)| if *ti { *wi } else { 0.0 })
                    .sum()
            };
            let intercept = dot(ll.intercept_weights());
            let slope = dot(ll.slope_weights());
            out[k] = (intercept, slope);
        }
        Ok(ComplianceFit {
            below: out[0].0.clamp(0.0, 1.0),
            above: out[1].0.clamp(0.0, 1.0),
            raw_below: out[0].0,
            raw_above: out[1].0,
            slope_below: out[0].1,
            slope_above: out[1].1,
            bandwidths: (h0, h1),
        })
    }

    fn checked_denominator(&self, fit: &ComplianceFit, delta: f64) -> Result<f64> {
        let d = fit.denominator();
        if !(d.abs() > delta) {
            return Err(Error::WeakCompliance {
                denominator: d.abs(),
                threshold: delta,
            });
        }
        Ok(d)
    }

    /// Stratum positions with their full-side weights, renormalized to sum
    /// to one over the stratum.
    fn stratum_weights(&self, side: Noncompliance, h: f64) -> Result<(Vec<usize>, Vec<f64>)> {
        let z = self.z.as_ref().ok_or(Error::MissingAssignment)?;
        let (pos, w, _) = self.engine.side_weights(self.cutoff, h, side.side())?;
        let (pos, w): (Vec<usize>, Vec<f64>) = pos
            .into_iter()
            .zip(w)
            .filter(|(p, _)| side.contains(self.t[*p], z[*p]))
            .unzip();
        Ok((pos, w))
    }

    fn reference(&self, cfg: &FuzzyConfig) -> Result<MetricObject> {
        match &cfg.reference {
            Some(r) => {
                self.engine.space().ensure_same(r.space())?;
                Ok(r.clone())
            }
            None => sample_frechet_mean(&self.engine),
        }
    }
}

/// Local-linear intercepts of the treatment indicator on each side of the
/// cutoff.
pub fn estimate_compliance(
    sample: &RddSample,
    h0: f64,
    h1: f64,
    kernel: KernelKind,
) -> Result<ComplianceFit> {
    let cfg = FuzzyConfig {
        kernel,
        ..Default::default()
    };
    Prepared::new(sample, &cfg, false)?.compliance(h0, h1)
}

fn embedding_norm(space: &Space, v: &[f64]) -> f64 {
    space.hilbert_norm_sq(v).sqrt()
}

/// Compliers' effect in the Hilbert embedding:
/// `(Psi(nu_1) - Psi(nu_0)) / (m1 - m0)`.
pub fn estimate_fuzzy_late(
    sample: &RddSample,
    h0: f64,
    h1: f64,
    cfg: &FuzzyConfig,
) -> Result<FuzzyEstimate> {
    if !sample.space().embedding_available() {
        return Err(Error::EmbeddingUnavailable(sample.space().to_string()));
    }
    let prep = Prepared::new(sample, cfg, false)?;
    let fit = prep.compliance(h0, h1)?;
    let denom = prep.checked_denominator(&fit, cfg.delta_comply)?;
    let left = prep.engine.fit_side(prep.cutoff, h0, Side::Left)?;
    let right = prep.engine.fit_side(prep.cutoff, h1, Side::Right)?;
    let (e0, e1) = (
        spaces::embed(&left.estimate)?,
        spaces::embed(&right.estimate)?,
    );
    let complier_effect: Vec<f64> = e1.iter().zip(&e0).map(|(a, b)| (a - b) / denom).collect();
    let mut warnings = Vec::new();
    for w in left.warnings.iter().chain(&right.warnings) {
        push_warning(&mut warnings, *w);
    }
    Ok(FuzzyEstimate {
        variant: FuzzyVariant::Embedding,
        compliance: fit,
        denominator: denom,
        magnitude: embedding_norm(sample.space(), &complier_effect),
        complier_effect,
        outcome_limits: (left.estimate, right.estimate),
        effect: None,
        stratum: None,
        reference: prep.reference(cfg)?,
        warnings,
    })
}

/// Compliers' geodesic effect under one-sided noncompliance: endpoints
/// `Psi^-1(Psi(mu) + (Psi(nu_z) - Psi(mu)) / (m1 - m0))` with `mu` the
/// outcome mean of the non-complier stratum at the cutoff.
pub fn estimate_geodesic_fuzzy(
    sample: &RddSample,
    h0: f64,
    h1: f64,
    side: Noncompliance,
    cfg: &FuzzyConfig,
) -> Result<FuzzyEstimate> {
    let space = *sample.space();
    if !space.embedding_available() {
        return Err(Error::EmbeddingUnavailable(space.to_string()));
    }
    let prep = Prepared::new(sample, cfg, true)?;
    let fit = prep.compliance(h0, h1)?;
    let denom = prep.checked_denominator(&fit, cfg.delta_comply)?;
    let left = prep.engine.fit_side(prep.cutoff, h0, Side::Left)?;
    let right = prep.engine.fit_side(prep.cutoff, h1, Side::Right)?;
    let mut warnings = Vec::new();
    for w in left.warnings.iter().chain(&right.warnings) {
        push_warning(&mut warnings, *w);
    }
    let (e0, e1) = (
        spaces::embed(&left.estimate)?,
        spaces::embed(&right.estimate)?,
    );
    let complier_effect: Vec<f64> = e1.iter().zip(&e0).map(|(a, b)| (a - b) / denom).collect();

    let h = match side {
        Noncompliance::AlwaysTakers => h0,
        Noncompliance::NeverTakers => h1,
    };
    let (pos, w) = prep.stratum_weights(side, h)?;
    let (stratum_estimate, endpoints) = if pos.is_empty() {
        if cfg.strict_stratum || (denom - 1.0).abs() > FULL_COMPLIANCE_TOL {
            return Err(Error::EmptyStratum {
                stratum: side.stratum(),
            });
        }
        push_warning(&mut warnings, Warning::StratumUnused);
        (None, (left.estimate.clone(), right.estimate.clone()))
    } else {
        let sol = prep.engine.solve(&pos, &w)?;
        for w in &sol.warnings {
            push_warning(&mut warnings, *w);
        }
        let mu = spaces::embed(&sol.mean)?;
        let mut ends = Vec::with_capacity(2);
        for nu in [&e0, &e1] {
            let v: Vec<f64> = mu
                .iter()
                .zip(nu.iter())
                .map(|(m, n)| m + (n - m) / denom)
                .collect();
            let (obj, moved) = spaces::inverse_embed_projected(&v, &space)?;
            if moved {
                push_warning(&mut warnings, Warning::ProjectionApplied);
            }
            ends.push(obj);
        }
        let end1 = ends.pop().expect("two endpoints");
        let end0 = ends.pop().expect("two endpoints");
        (Some(sol.mean), (end0, end1))
    };
    let reference = prep.reference(cfg)?;
    let effect = GeodesicEffect::new(endpoints.0, endpoints.1, reference.clone())?;
    Ok(FuzzyEstimate {
        variant: FuzzyVariant::GeodesicOneSided,
        compliance: fit,
        denominator: denom,
        complier_effect,
        magnitude: effect.length,
        outcome_limits: (left.estimate, right.estimate),
        effect: Some(effect),
        stratum: Some(StratumFit {
            side,
            size: pos.len(),
            estimate: stratum_estimate,
            tangent: None,
        }),
        reference,
        warnings,
    })
}

/// Tangent-space view of the sample at `omega`.
struct Tangent {
    prep: Prepared,
    omega: MetricObject,
}

impl Tangent {
    fn new(sample: &RddSample, cfg: &FuzzyConfig, need_z: bool) -> Result<Self> {
        let space = *sample.space();
        if !space.logexp_available() {
            return Err(Error::LogExpUnavailable(space.to_string()));
        }
        let outcome = Prepared::new(sample, cfg, need_z)?;
        let omega = outcome.reference(cfg)?;
        let r = sample.running();
        let logs = sample
            .records()
            .iter()
            .map(|rec| spaces::log_map(&omega, &rec.y).and_then(MetricObject::euclidean))
            .collect::<Result<Vec<_>>>()?;
        let engine = LfrEngine::new(&r, &logs, cfg.kernel, cfg.solver)?;
        let prep = Prepared::with_engine(sample, engine)?;
        Ok(Self { prep, omega })
    }

    fn side_mean(&self, h: f64, side: Side) -> Result<Vec<f64>> {
        Ok(self
            .prep
            .engine
            .fit_side(self.prep.cutoff, h, side)?
            .estimate
            .into_data())
    }
}

/// Compliers' effect in the tangent space at the reference point:
/// `(nu#_1 - nu#_0) / (m1 - m0)` with `nu#_z` local linear fits of
/// `Log_omega(Y)`.
pub fn estimate_riemannian_fuzzy(
    sample: &RddSample,
    h0: f64,
    h1: f64,
    cfg: &FuzzyConfig,
) -> Result<FuzzyEstimate> {
    let tan = Tangent::new(sample, cfg, false)?;
    let fit = tan.prep.compliance(h0, h1)?;
    let denom = tan.prep.checked_denominator(&fit, cfg.delta_comply)?;
    let v0 = tan.side_mean(h0, Side::Left)?;
    let v1 = tan.side_mean(h1, Side::Right)?;
    let complier_effect: Vec<f64> = v1.iter().zip(&v0).map(|(a, b)| (a - b) / denom).collect();
    let mut warnings = Vec::new();
    let mut limit = |v: &[f64]| -> Result<MetricObject> {
        let (o, projected) = spaces::exp_map_projected(&tan.omega, v)?;
        if projected {
            push_warning(&mut warnings, Warning::ExpOutOfDomain);
        }
        Ok(o)
    };
    let limits = (limit(&v0)?, limit(&v1)?);
    Ok(FuzzyEstimate {
        variant: FuzzyVariant::RiemannianTangent,
        compliance: fit,
        denominator: denom,
        magnitude: complier_effect.iter().map(|x| x * x).sum::<f64>().sqrt(),
        complier_effect,
        outcome_limits: limits,
        effect: None,
        stratum: None,
        reference: tan.omega,
        warnings,
    })
}

/// Compliers' geodesic effect on a manifold under one-sided noncompliance:
/// endpoints `Exp_omega(nu# + (nu#_z - nu#) / (m1 - m0))` with `nu#` the
/// stratum's tangent mean at the cutoff.
pub fn estimate_geodesic_riemannian_fuzzy(
    sample: &RddSample,
    h0: f64,
    h1: f64,
    side: Noncompliance,
    cfg: &FuzzyConfig,
) -> Result<FuzzyEstimate> {
    let tan = Tangent::new(sample, cfg, true)?;
    let fit = tan.prep.compliance(h0, h1)?;
    let denom = tan.prep.checked_denominator(&fit, cfg.delta_comply)?;
    let v0 = tan.side_mean(h0, Side::Left)?;
    let v1 = tan.side_mean(h1, Side::Right)?;
    let complier_effect: Vec<f64> = v1.iter().zip(&v0).map(|(a, b)| (a - b) / denom).collect();
    let mut warnings = Vec::new();

    let h = match side {
        Noncompliance::AlwaysTakers => h0,
        Noncompliance::NeverTakers => h1,
    };
    let (pos, w) = tan.prep.stratum_weights(side, h)?;
    let (stratum_tangent, args) = if pos.is_empty() {
        if cfg.strict_stratum || (denom - 1.0).abs() > FULL_COMPLIANCE_TOL {
            return Err(Error::EmptyStratum {
                stratum: side.stratum(),
            });
        }
        push_warning(&mut warnings, Warning::StratumUnused);
        (None, (v0.clone(), v1.clone()))
    } else {
        let nu = tan.prep.engine.solve(&pos, &w)?.mean.into_data();
        let arg = |vz: &[f64]| -> Vec<f64> {
            nu.iter()
                .zip(vz)
                .map(|(m, n)| m + (n - m) / denom)
                .collect()
        };
        let args = (arg(&v0), arg(&v1));
        (Some(nu), args)
    };
    let mut endpoint = |v: &[f64]| -> Result<MetricObject> {
        let (o, projected) = spaces::exp_map_projected(&tan.omega, v)?;
        if projected {
            push_warning(&mut warnings, Warning::ExpOutOfDomain);
        }
        Ok(o)
    };
    let end0 = endpoint(&args.0)?;
    let end1 = endpoint(&args.1)?;
    let limits = (endpoint(&v0)?, endpoint(&v1)?);
    let effect = GeodesicEffect::new(end0, end1, tan.omega.clone())?;
    let stratum_estimate = match &stratum_tangent {
        Some(v) => Some(endpoint(v)?),
        None => None,
    };
    Ok(FuzzyEstimate {
        variant: FuzzyVariant::GeodesicRiemannian,
        compliance: fit,
        denominator: denom,
        complier_effect,
        magnitude: effect.length,
        outcome_limits: limits,
        effect: Some(effect),
        stratum: Some(StratumFit {
            side,
            size: pos.len(),
            estimate: stratum_estimate,
            tangent: stratum_tangent,
        }),
        reference: tan.omega,
        warnings,
    })
}

/// Dispatches on `variant`; `side` is required by the geodesic variants.
pub fn estimate_fuzzy(
    sample: &RddSample,
    h0: f64,
    h1: f64,
    variant: FuzzyVariant,
    side: Option<Noncompliance>,
    cfg: &FuzzyConfig,
) -> Result<FuzzyEstimate> {
    let need_side = || {
        side.ok_or_else(|| {
            Error::InvalidConfig(format!("variant `{variant}` needs a noncompliance side"))
        })
    };
    match variant {
        FuzzyVariant::Embedding => estimate_fuzzy_late(sample, h0, h1, cfg),
        FuzzyVariant::RiemannianTangent => estimate_riemannian_fuzzy(sample, h0, h1, cfg),
        FuzzyVariant::GeodesicOneSided => {
            estimate_geodesic_fuzzy(sample, h0, h1, need_side()?, cfg)
        }
        FuzzyVariant::GeodesicRiemannian => {
            estimate_geodesic_riemannian_fuzzy(sample, h0, h1, need_side()?, cfg)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Record;

    fn grid(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| -1.0 + (i as f64 + 0.5) * 2.0 / n as f64)
            .collect()
    }

    fn scalar(r: f64, y: f64, t: bool) -> Record {
        Record::new(r, MetricObject::scalar(y).unwrap())
            .with_treatment(t)
            .with_assignment(r >= 0.0)
    }

    #[test]
    fn sharp_compliance_gives_zero_and_one() {
        let recs: Vec<_> = grid(100)
            .into_iter()
            .map(|r| scalar(r, r, r >= 0.0))
            .collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        let fit = estimate_compliance(&s, 0.4, 0.4, KernelKind::Triangular).unwrap();
        assert!(fit.below.abs() < 1e-12 && (fit.above - 1.0).abs() < 1e-12);
        assert!(fit.slope_below.abs() < 1e-10 && fit.slope_above.abs() < 1e-10);
    }

    #[test]
    fn constant_treatment_is_weak() {
        let recs: Vec<_> = grid(100).into_iter().map(|r| scalar(r, r, true)).collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        let err = estimate_fuzzy_late(&s, 0.4, 0.4, &FuzzyConfig::default()).unwrap_err();
        assert!(matches!(err, Error::WeakCompliance { .. }));
    }

    #[test]
    fn missing_columns() {
        let recs: Vec<_> = grid(60)
            .into_iter()
            .map(|r| Record::new(r, MetricObject::scalar(r).unwrap()))
            .collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        assert_eq!(
            estimate_fuzzy_late(&s, 0.4, 0.4, &FuzzyConfig::default()).unwrap_err(),
            Error::MissingTreatment
        );
        let recs: Vec<_> = grid(60)
            .into_iter()
            .map(|r| Record::new(r, MetricObject::scalar(r).unwrap()).with_treatment(r >= 0.0))
            .collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        assert_eq!(
            estimate_geodesic_fuzzy(
                &s,
                0.4,
                0.4,
                Noncompliance::AlwaysTakers,
                &FuzzyConfig::default()
            )
            .unwrap_err(),
            Error::MissingAssignment
        );
    }

    #[test]
    fn zero_outcome_jump_gives_zero_vector() {
        // half the left units are always-takers; outcomes have no jump
        let recs: Vec<_> = grid(200)
            .into_iter()
            .enumerate()
            .map(|(i, r)| scalar(r, 0.5 * r, r >= 0.0 || i % 2 == 0))
            .collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        let est = estimate_fuzzy_late(&s, 0.5, 0.5, &FuzzyConfig::default()).unwrap();
        assert!((est.denominator - 0.5).abs() < 0.05);
        assert!(est.complier_effect[0].abs() < 1e-12);
    }

    #[test]
    fn full_compliance_collapses_or_refuses() {
        let recs: Vec<_> = grid(100)
            .into_iter()
            .map(|r| scalar(r, r + (r >= 0.0) as u8 as f64, r >= 0.0))
            .collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        let est = estimate_geodesic_fuzzy(
            &s,
            0.4,
            0.4,
            Noncompliance::AlwaysTakers,
            &FuzzyConfig::default(),
        )
        .unwrap();
        assert!(est.warnings.contains(&Warning::StratumUnused));
        assert!((est.magnitude - 1.0).abs() < 1e-10);
        let strict = FuzzyConfig {
            strict_stratum: true,
            ..Default::default()
        };
        assert_eq!(
            estimate_geodesic_fuzzy(&s, 0.4, 0.4, Noncompliance::AlwaysTakers, &strict)
                .unwrap_err(),
            Error::EmptyStratum {
                stratum: "always-taker"
            }
        );
    }

    #[test]
    fn euclidean_tangent_matches_embedding() {
        let recs: Vec<_> = grid(300)
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                let t = r >= 0.0 || i % 3 == 0;
                scalar(
                    r,
                    r * r + 2.0 * t as u8 as f64 + (i as f64 * 0.7).sin() * 0.1,
                    t,
                )
            })
            .collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        let cfg = FuzzyConfig::default();
        let a = estimate_fuzzy_late(&s, 0.4, 0.5, &cfg).unwrap();
        let b = estimate_riemannian_fuzzy(&s, 0.4, 0.5, &cfg).unwrap();
        assert!((a.complier_effect[0] - b.complier_effect[0]).abs() < 1e-12);
        let g = estimate_geodesic_fuzzy(&s, 0.4, 0.5, Noncompliance::AlwaysTakers, &cfg).unwrap();
        let gr =
            estimate_geodesic_riemannian_fuzzy(&s, 0.4, 0.5, Noncompliance::AlwaysTakers, &cfg)
                .unwrap();
        let (ge, gre) = (g.effect.unwrap(), gr.effect.unwrap());
        assert!((ge.start.data()[0] - gre.start.data()[0]).abs() < 1e-10);
        assert!((ge.end.data()[0] - gre.end.data()[0]).abs() < 1e-10);
    }

    #[test]
    fn sphere_has_no_embedding_variant() {
        let recs: Vec<_> = grid(60)
            .into_iter()
            .map(|r| {
                Record::new(
                    r,
                    MetricObject::composition_from_shares(&[1.0 + r, 1.0, 1.0]).unwrap(),
                )
                .with_treatment(r >= 0.0)
            })
            .collect();
        let s = RddSample::new(recs, 0.0).unwrap();
        assert!(matches!(
            estimate_fuzzy_late(&s, 0.4, 0.4, &FuzzyConfig::default()),
            Err(Error::EmbeddingUnavailable(_))
        ));
        assert!(estimate_riemannian_fuzzy(&s, 0.4, 0.4, &FuzzyConfig::default()).is_ok());
    }
}
