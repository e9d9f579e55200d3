//! Local Frechet regression on a sorted, pre-embedded sample.

use std::ops::Range;

use serde::Serialize;

use super::kernel::{KernelKind, KernelSide};
use super::solver::{self, FrechetSolution, FrechetSolveConfig, SolverReport};
use super::weights::LocalLinear;
use super::Side;
use crate::error::{Error, Result, Warning};
use crate::sample::RddSample;
use crate::spaces::{self, MetricObject, Space};

/// Result of one local Frechet fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LfrFit {
    pub estimate: MetricObject,
    /// Observations with nonzero kernel weight.
    pub support: usize,
    /// Window spread `(S0 S2 - S1^2) / support^2` in standardized units.
    pub std_sigma2: f64,
    pub solver: SolverReport,
    pub warnings: Vec<Warning>,
}

/// Sample sorted by running variable, with embeddings cached for
/// embeddable spaces.
///
/// Ties in `R` are ordered by payload, so the engine (and every estimate
/// built on it) does not depend on the input record order.
#[derive(Debug, Clone)]
pub struct LfrEngine {
    space: Space,
    r: Vec<f64>,
    objects: Vec<MetricObject>,
    order: Vec<usize>,
    embedded: Option<Vec<f64>>,
    width: usize,
    kernel: KernelKind,
    solver: FrechetSolveConfig,
}

impl LfrEngine {
    pub fn new(
        r: &[f64],
        ys: &[MetricObject],
        kernel: KernelKind,
        solver: FrechetSolveConfig,
    ) -> Result<Self> {
        solver.validate()?;
        let first = ys.first().ok_or(Error::EmptyInput)?;
        if r.len() != ys.len() {
            return Err(Error::ShapeMismatch {
                left: format!("{} running values", r.len()),
                right: format!("{} outcomes", ys.len()),
            });
        }
        if let Some(index) = r.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let space = *first.space();
        for y in ys {
            space.ensure_same(y.space())?;
        }
        let mut order: Vec<usize> = (0..r.len()).collect();
        order.sort_by(|&a, &b| {
            r[a].total_cmp(&r[b]).then_with(|| {
                ys[a]
                    .data()
                    .iter()
                    .zip(ys[b].data())
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        let r_sorted: Vec<f64> = order.iter().map(|&i| r[i]).collect();
        let objects: Vec<MetricObject> = order.iter().map(|&i| ys[i].clone()).collect();
        let width = space.payload_len();
        let embedded = if space.embedding_available() {
            let mut flat = Vec::with_capacity(width * objects.len());
            for o in &objects {
                flat.extend(spaces::embed(o)?);
            }
            Some(flat)
        } else {
            None
        };
        Ok(Self {
            space,
            r: r_sorted,
            objects,
            order,
            embedded,
            width,
            kernel,
            solver,
        })
    }

    pub fn from_sample(
        sample: &RddSample,
        kernel: KernelKind,
        solver: FrechetSolveConfig,
    ) -> Result<Self> {
        let r: Vec<f64> = sample.records().iter().map(|x| x.r).collect();
        let ys: Vec<MetricObject> = sample.records().iter().map(|x| x.y.clone()).collect();
        Self::new(&r, &ys, kernel, solver)
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn solver_config(&self) -> &FrechetSolveConfig {
        &self.solver
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Mean squared Hilbert norm of the embedded outcomes; ambient
    /// coordinates stand in for the sphere. Sets the scale of roundoff in
    /// fitted values.
    pub fn extrinsic_scale(&self) -> f64 {
        let n = self.objects.len();
        let total: f64 = (0..n)
            .map(|i| match &self.embedded {
                Some(flat) => self
                    .space
                    .hilbert_norm_sq(&flat[i * self.width..(i + 1) * self.width]),
                None => self.space.hilbert_norm_sq(self.objects[i].data()),
            })
            .sum();
        total / n as f64
    }

    /// Running values in ascending order.
    pub fn sorted_r(&self) -> &[f64] {
        &self.r
    }

    pub fn object(&self, pos: usize) -> &MetricObject {
        &self.objects[pos]
    }

    /// Original record index of sorted position `pos`.
    pub fn original_index(&self, pos: usize) -> usize {
        self.order[pos]
    }

    /// Positions with `R < x`.
    pub fn below(&self, x: f64) -> Range<usize> {
        0..self.r.partition_point(|&v| v < x)
    }

    /// Positions with `R >= x`.
    pub fn at_or_above(&self, x: f64) -> Range<usize> {
        self.r.partition_point(|&v| v < x)..self.r.len()
    }

    /// Positions with `lo <= R <= hi`.
    pub fn closed(&self, lo: f64, hi: f64) -> Range<usize> {
        let a = self.r.partition_point(|&v| v < lo);
        let b = self.r.partition_point(|&v| v <= hi);
        a..b.max(a)
    }

    fn intersect(a: Range<usize>, b: Range<usize>) -> Range<usize> {
        let s = a.start.max(b.start);
        s..a.end.min(b.end).max(s)
    }

    /// Local-linear intercept weights at `center` over `range`. Returns the
    /// sorted positions with nonzero weight alongside their weights, which
    /// sum to one.
    pub(crate) fn local_weights(
        &self,
        range: Range<usize>,
        center: f64,
        h: f64,
        mask: KernelSide,
    ) -> Result<(Vec<usize>, Vec<f64>, LocalLinear)> {
        let offsets: Vec<f64> = self.r[range.clone()].iter().map(|v| v - center).collect();
        let ll = LocalLinear::fit(offsets, h, self.kernel, mask)?;
        let w = ll.intercept_weights();
        let mut pos = Vec::with_capacity(ll.support);
        let mut ws = Vec::with_capacity(ll.support);
        for (k, wi) in w.into_iter().enumerate() {
            if ll.kernel[k] > 0.0 {
                pos.push(range.start + k);
                ws.push(wi);
            }
        }
        Ok((pos, ws, ll))
    }

    fn side_range(&self, c: f64, h: f64, side: Side) -> Range<usize> {
        let window = self.closed(c - h, c + h);
        match side {
            Side::Left => Self::intersect(self.below(c), window),
            Side::Right => Self::intersect(self.at_or_above(c), window),
        }
    }

    /// One-sided local-linear weights at `c` with bandwidth `h`.
    pub(crate) fn side_weights(
        &self,
        c: f64,
        h: f64,
        side: Side,
    ) -> Result<(Vec<usize>, Vec<f64>, LocalLinear)> {
        self.local_weights(self.side_range(c, h, side), c, h, side.into())
    }

    /// One-sided local-linear fit at `c`, with the sorted positions its
    /// kernel and offset vectors refer to.
    pub(crate) fn side_local_linear(
        &self,
        c: f64,
        h: f64,
        side: Side,
    ) -> Result<(Range<usize>, LocalLinear)> {
        let range = self.side_range(c, h, side);
        let offsets: Vec<f64> = self.r[range.clone()].iter().map(|v| v - c).collect();
        let ll = LocalLinear::fit(offsets, h, self.kernel, side.into())?;
        Ok((range, ll))
    }

    /// Weighted Frechet mean of the objects at `positions`.
    pub fn solve(&self, positions: &[usize], weights: &[f64]) -> Result<FrechetSolution> {
        if positions.is_empty() {
            return Err(Error::EmptyInput);
        }
        match &self.embedded {
            Some(flat) => {
                let rows: Vec<(&[f64], f64)> = positions
                    .iter()
                    .zip(weights)
                    .map(|(&p, &w)| (&flat[p * self.width..(p + 1) * self.width], w))
                    .collect();
                let (mean, projected) = solver::embedded_mean(&self.space, &rows)?;
                let sum: f64 = weights.iter().sum();
                let mut objective = 0.0;
                for (&p, w) in positions.iter().zip(weights) {
                    let d = spaces::distance(&mean, &self.objects[p])?;
                    objective += w / sum * d * d;
                }
                Ok(solver::closed_form_solution(mean, projected, objective))
            }
            None => {
                let points: Vec<&[f64]> =
                    positions.iter().map(|&p| self.objects[p].data()).collect();
                solver::sphere_mean(&self.space, &points, weights, &self.solver)
            }
        }
    }

    /// Local Frechet fit at `center` using the observations in `range`.
    pub fn fit_range(
        &self,
        range: Range<usize>,
        center: f64,
        h: f64,
        mask: KernelSide,
    ) -> Result<LfrFit> {
        let (pos, w, ll) = self.local_weights(range, center, h, mask)?;
        self.finish(&pos, &w, &ll)
    }

    /// One-sided local Frechet fit at `c`: `Left` uses `R < c`, `Right`
    /// uses `R >= c`.
    pub fn fit_side(&self, c: f64, h: f64, side: Side) -> Result<LfrFit> {
        let (pos, w, ll) = self.side_weights(c, h, side)?;
        self.finish(&pos, &w, &ll)
    }

    fn finish(&self, pos: &[usize], w: &[f64], ll: &LocalLinear) -> Result<LfrFit> {
        let sol = self.solve(pos, w)?;
        Ok(LfrFit {
            estimate: sol.mean,
            support: ll.support,
            std_sigma2: ll.std_sigma2,
            solver: sol.report,
            warnings: sol.warnings,
        })
    }
}

/// Local Frechet regression estimate at `r` from one side of `r`.
pub fn lfr_estimate(
    sample: &RddSample,
    r: f64,
    h: f64,
    side: Side,
    kernel: KernelKind,
    cfg: &FrechetSolveConfig,
) -> Result<MetricObject> {
    let engine = LfrEngine::from_sample(sample, kernel, *cfg)?;
    Ok(engine.fit_side(r, h, side)?.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Record;

    fn engine(r: &[f64], y: &[f64]) -> LfrEngine {
        let ys: Vec<_> = y
            .iter()
            .map(|v| MetricObject::scalar(*v).unwrap())
            .collect();
        LfrEngine::new(
            r,
            &ys,
            KernelKind::Triangular,
            FrechetSolveConfig::default(),
        )
        .unwrap()
    }

    fn wls_intercept(r: &[f64], y: &[f64], c: f64, h: f64, left: bool) -> f64 {
        // Direct 2x2 normal equations.
        let (mut a00, mut a01, mut a11, mut b0, mut b1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (ri, yi) in r.iter().zip(y) {
            let x = ri - c;
            if (left && x >= 0.0) || (!left && x < 0.0) {
                continue;
            }
            let k = (1.0 - (x / h).abs()).max(0.0);
            a00 += k;
            a01 += k * x;
            a11 += k * x * x;
            b0 += k * yi;
            b1 += k * x * yi;
        }
        (a11 * b0 - a01 * b1) / (a00 * a11 - a01 * a01)
    }

    #[test]
    fn linear_outcome_is_reproduced() {
        let r: Vec<f64> = (0..41).map(|i| -1.0 + i as f64 * 0.05).collect();
        let e = engine(&r, &r);
        let fit = e.fit_side(0.0, 0.4, Side::Left).unwrap();
        assert!(fit.estimate.data()[0].abs() < 1e-12);
    }

    #[test]
    fn matches_wls_oracle() {
        let r: Vec<f64> = (0..200)
            .map(|i| ((i * 37 % 200) as f64 / 100.0) - 1.0 + 0.001)
            .collect();
        let y: Vec<f64> = r.iter().map(|x| (3.0 * x).sin() + x * x).collect();
        let e = engine(&r, &y);
        for (side, left) in [(Side::Left, true), (Side::Right, false)] {
            let fit = e.fit_side(0.1, 0.5, side).unwrap();
            let oracle = wls_intercept(&r, &y, 0.1, 0.5, left);
            assert!((fit.estimate.data()[0] - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_outcome() {
        let r: Vec<f64> = (0..30).map(|i| i as f64 / 10.0).collect();
        let q = MetricObject::quantiles(vec![0.0, 1.0, 1.5], None).unwrap();
        let records: Vec<_> = r.iter().map(|&ri| Record::new(ri, q.clone())).collect();
        let s = RddSample::new(records, 1.5).unwrap();
        for side in [Side::Left, Side::Right] {
            let est = lfr_estimate(
                &s,
                1.4,
                0.9,
                side,
                KernelKind::Triangular,
                &Default::default(),
            )
            .unwrap();
            assert!(spaces::distance(&est, &q).unwrap() < 1e-12);
        }
    }

    #[test]
    fn ranges() {
        let e = engine(&[0.0, 1.0, 1.0, 2.0, 3.0], &[0.0; 5]);
        assert_eq!(e.below(1.0), 0..1);
        assert_eq!(e.at_or_above(1.0), 1..5);
        assert_eq!(e.closed(1.0, 2.0), 1..4);
        assert_eq!(e.closed(5.0, 6.0), 5..5);
    }
}
