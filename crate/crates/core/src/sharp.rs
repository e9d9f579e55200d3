//! Sharp-design estimator: one-sided local Frechet limits at the cutoff
//! joined by a geodesic.

use serde::Serialize;

use crate::error::{Error, Result, Warning};
use crate::frechet::{FrechetSolveConfig, KernelKind, LfrEngine, LfrFit, Side, SolverReport};
use crate::sample::RddSample;
use crate::spaces::{self, GeodesicEffect, MetricObject};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SharpConfig {
    pub kernel: KernelKind,
    pub solver: FrechetSolveConfig,
    /// Reference point for transport comparisons; defaults to the sample
    /// Frechet mean of all outcomes.
    pub reference: Option<MetricObject>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SideDiagnostics {
    pub side: Side,
    pub bandwidth: f64,
    /// Observations on this side of the cutoff.
    pub count: usize,
    /// Observations with nonzero kernel weight.
    pub support: usize,
    pub std_sigma2: f64,
    pub solver: SolverReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SharpEstimate {
    pub effect: GeodesicEffect,
    pub bandwidths: (f64, f64),
    pub counts: (usize, usize),
    pub magnitude: f64,
    pub diagnostics: [SideDiagnostics; 2],
    pub warnings: Vec<Warning>,
}

/// Unit-weight Frechet mean of every outcome in the engine.
pub fn sample_frechet_mean(engine: &LfrEngine) -> Result<MetricObject> {
    let pos: Vec<usize> = (0..engine.len()).collect();
    let w = vec![1.0; pos.len()];
    Ok(engine.solve(&pos, &w)?.mean)
}

fn diagnostics(side: Side, h: f64, count: usize, fit: &LfrFit) -> SideDiagnostics {
    SideDiagnostics {
        side,
        bandwidth: h,
        count,
        support: fit.support,
        std_sigma2: fit.std_sigma2,
        solver: fit.solver.clone(),
    }
}

/// Estimates from a prepared engine; `reference` of `None` uses the sample
/// Frechet mean.
pub fn estimate_sharp_with(
    engine: &LfrEngine,
    cutoff: f64,
    h0: f64,
    h1: f64,
    reference: Option<&MetricObject>,
) -> Result<SharpEstimate> {
    for h in [h0, h1] {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {h}"
            )));
        }
    }
    let left = engine.fit_side(cutoff, h0, Side::Left)?;
    let right = engine.fit_side(cutoff, h1, Side::Right)?;
    let reference = match reference {
        Some(r) => {
            engine.space().ensure_same(r.space())?;
            r.clone()
        }
        None => sample_frechet_mean(engine)?,
    };
    let n0 = engine.below(cutoff).len();
    let n1 = engine.len() - n0;
    let mut warnings = left.warnings.clone();
    for w in &right.warnings {
        if !warnings.contains(w) {
            warnings.push(*w);
        }
    }
    let diagnostics = [
        diagnostics(Side::Left, h0, n0, &left),
        diagnostics(Side::Right, h1, n1, &right),
    ];
    let effect = GeodesicEffect::new(left.estimate, right.estimate, reference)?;
    Ok(SharpEstimate {
        magnitude: effect.length,
        effect,
        bandwidths: (h0, h1),
        counts: (n0, n1),
        diagnostics,
        warnings,
    })
}

/// Sharp-design effect: the geodesic from the left limit (bandwidth `h0`) to
/// the right limit (bandwidth `h1`) at the sample cutoff.
pub fn estimate_sharp(
    sample: &RddSample,
    h0: f64,
    h1: f64,
    cfg: &SharpConfig,
) -> Result<SharpEstimate> {
    let engine = LfrEngine::from_sample(sample, cfg.kernel, cfg.solver)?;
    estimate_sharp_with(&engine, sample.cutoff(), h0, h1, cfg.reference.as_ref())
}

/// Distance between two estimated effects in the space of geodesics, using
/// the reference point of `e1`.
pub fn effect_distance(e1: &SharpEstimate, e2: &SharpEstimate) -> Result<f64> {
    e1.effect
        .reference
        .space()
        .ensure_same(e2.effect.reference.space())?;
    spaces::quotient_distance_dg(&e1.effect, &e2.effect, &e1.effect.reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Record;

    fn scalar_sample(f: impl Fn(f64) -> f64) -> RddSample {
        let recs = (0..200)
            .map(|i| {
                let r = -1.0 + (i as f64 + 0.5) / 100.0;
                Record::new(r, MetricObject::scalar(f(r)).unwrap())
            })
            .collect();
        RddSample::new(recs, 0.0).unwrap()
    }

    #[test]
    fn no_jump_gives_zero_magnitude() {
        let s = scalar_sample(|r| 2.0 * r + 1.0);
        let e = estimate_sharp(&s, 0.3, 0.3, &SharpConfig::default()).unwrap();
        assert!(e.magnitude < 1e-12);
        assert_eq!(e.counts.0 + e.counts.1, s.len());
    }

    #[test]
    fn noiseless_jump_recovered() {
        let s = scalar_sample(|r| r + if r >= 0.0 { 1.0 } else { 0.0 });
        let e = estimate_sharp(&s, 0.25, 0.4, &SharpConfig::default()).unwrap();
        assert!((e.magnitude - 1.0).abs() < 1e-12);
        assert!((e.magnitude - e.effect.length).abs() < 1e-15);
        assert_eq!(e.bandwidths, (0.25, 0.4));
    }

    #[test]
    fn degenerate_side_is_identified() {
        let s = scalar_sample(|r| r);
        let err = estimate_sharp(&s, 0.001, 0.3, &SharpConfig::default()).unwrap_err();
        assert!(matches!(
            err,
            Error::DegenerateWindow {
                side: crate::frechet::KernelSide::Left,
                ..
            }
        ));
    }

    #[test]
    fn effect_distance_examples() {
        let a = estimate_sharp(
            &scalar_sample(|r| r + if r >= 0.0 { 1.0 } else { 0.0 }),
            0.3,
            0.3,
            &Default::default(),
        )
        .unwrap();
        let b = estimate_sharp(
            &scalar_sample(|r| r + if r >= 0.0 { 3.0 } else { 0.0 }),
            0.3,
            0.3,
            &Default::default(),
        )
        .unwrap();
        assert!(effect_distance(&a, &a).unwrap() < 1e-15);
        assert!((effect_distance(&a, &b).unwrap() - 2.0).abs() < 1e-10);
    }
}
