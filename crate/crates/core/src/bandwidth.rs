//! Data-adaptive bandwidth selection: choose the bandwidth whose left- and
//! right-windowed local fits agree best away from the cutoff, where the
//! regression is assumed continuous.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frechet::{FrechetSolveConfig, KernelKind, KernelSide, LfrEngine};
use crate::sample::{RddSample, MIN_PER_SIDE};
use crate::spaces;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BandwidthConfig {
    /// Number of log-spaced candidates in `[b_min, b_max]`.
    pub grid_size: usize,
    /// Number of equally spaced points laid over the support before the
    /// exclusion zones are removed.
    pub eval_points: usize,
    pub kernel: KernelKind,
    pub solver: FrechetSolveConfig,
}

impl Default for BandwidthConfig {
    fn default() -> Self {
        Self {
            grid_size: 20,
            eval_points: 100,
            kernel: KernelKind::Triangular,
            solver: FrechetSolveConfig::default(),
        }
    }
}

impl BandwidthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size == 0 {
            return Err(Error::InvalidConfig("grid_size must be >= 1".into()));
        }
        if self.eval_points < 2 {
            return Err(Error::InvalidConfig("eval_points must be >= 2".into()));
        }
        self.solver.validate()
    }
}

/// `(b_min, b_max)` for running values `r` and cutoff `c`.
///
/// `b_min` is the largest of the widest gap between adjacent sorted values
/// and the distances from `c` to the 20th closest value below it and to the
/// 20th closest value at or above it. `b_max` is half the distance from `c`
/// to the nearer end of the support.
pub fn compute_bounds(r: &[f64], c: f64) -> Result<(f64, f64)> {
    if let Some(index) = r.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let mut sorted = r.to_vec();
    sorted.sort_by(f64::total_cmp);
    let split = sorted.partition_point(|&x| x < c);
    let (below, above) = (split, sorted.len() - split);
    if below < MIN_PER_SIDE || above < MIN_PER_SIDE {
        return Err(Error::InsufficientData { below, above });
    }
    let gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0_f64, f64::max);
    let twentieth_below = c - sorted[split - MIN_PER_SIDE];
    let twentieth_above = sorted[split + MIN_PER_SIDE - 1] - c;
    let b_min = gap.max(twentieth_below).max(twentieth_above);
    let b_max = 0.5 * (c - sorted[0]).min(sorted[sorted.len() - 1] - c);
    if !(b_min < b_max) {
        return Err(Error::InvertedBounds { b_min, b_max });
    }
    Ok((b_min, b_max))
}

/// `size` log-spaced values from `lo` to `hi`, endpoints exact.
pub fn log_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    if size == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln();
    (0..size)
        .map(|k| {
            if k == 0 {
                lo
            } else if k == size - 1 {
                hi
            } else {
                lo * (ratio * k as f64 / (size - 1) as f64).exp()
            }
        })
        .collect()
}

/// Evaluation points away from the cutoff and the support edges, grouped
/// into the contiguous pieces they are integrated over.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRegion {
    pub pieces: Vec<Vec<f64>>,
    /// Closed intervals every point avoids.
    pub excluded: [(f64, f64); 3],
}

impl EvalRegion {
    /// `n_points` equally spaced over `[r_min, r_max]`, minus
    /// `[c - b_min, c + b_min]`, `[r_min, r_min + b_min]` and
    /// `[r_max - b_min, r_max]`.
    pub fn new(r_min: f64, r_max: f64, c: f64, b_min: f64, n_points: usize) -> Self {
        let excluded = [
            (c - b_min, c + b_min),
            (r_min, r_min + b_min),
            (r_max - b_min, r_max),
        ];
        let mut pieces: Vec<Vec<f64>> = vec![Vec::new(), Vec::new()];
        let step = (r_max - r_min) / (n_points - 1) as f64;
        for k in 0..n_points {
            let r = if k == n_points - 1 {
                r_max
            } else {
                r_min + step * k as f64
            };
            if excluded.iter().any(|&(a, b)| r >= a && r <= b) {
                continue;
            }
            pieces[usize::from(r > c)].push(r);
        }
        pieces.retain(|p| !p.is_empty());
        Self { pieces, excluded }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        self.pieces.iter().flatten().copied()
    }

    /// Sum of the spans of the pieces.
    pub fn length(&self) -> f64 {
        self.pieces.iter().map(|p| p[p.len() - 1] - p[0]).sum()
    }
}

/// Value of the discrepancy objective at one bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossEval {
    pub loss: f64,
    /// Evaluation points skipped because a window was degenerate.
    pub skipped: usize,
    /// Length of the region covered by segments with valid endpoints.
    pub covered: f64,
}

fn is_skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::DegenerateWindow { .. } | Error::NonPositiveWeightSum { .. }
    )
}

/// Squared distance between the left- and right-windowed fits at `r`, or
/// `None` if either window is degenerate.
fn discrepancy_at(
    engine: &LfrEngine,
    c: f64,
    b: f64,
    r: f64,
    bounds: (f64, f64),
) -> Result<Option<f64>> {
    let (r_min, r_max) = bounds;
    let (left_lo, right_hi) = if r < c {
        ((r - 2.0 * b).max(r_min), (r + 2.0 * b).min(c))
    } else {
        ((r - 2.0 * b).max(c), (r + 2.0 * b).min(r_max))
    };
    let h = 2.0 * b;
    let left = engine.fit_range(engine.closed(left_lo, r), r, h, KernelSide::TwoSided);
    let right = engine.fit_range(engine.closed(r, right_hi), r, h, KernelSide::TwoSided);
    match (left, right) {
        (Ok(l), Ok(rt)) => {
            let d = spaces::distance(&l.estimate, &rt.estimate)?;
            Ok(Some(d * d))
        }
        (Err(e), _) | (_, Err(e)) if is_skippable(&e) => Ok(None),
        (Err(e), _) | (_, Err(e)) => Err(e),
    }
}

/// Trapezoid-rule integral over the region of the squared distance between
/// left- and right-windowed fits, with windows of half-width `2b`.
///
/// Only segments whose two endpoints both have valid fits are integrated;
/// the result is rescaled by total over covered length.
pub fn discrepancy_loss_with(
    engine: &LfrEngine,
    c: f64,
    b: f64,
    region: &EvalRegion,
) -> Result<LossEval> {
    let r = engine.sorted_r();
    let bounds = (r[0], r[r.len() - 1]);
    let mut integral = 0.0;
    let mut covered = 0.0;
    let mut skipped = 0;
    for piece in &region.pieces {
        let values = piece
            .iter()
            .map(|&x| discrepancy_at(engine, c, b, x, bounds))
            .collect::<Result<Vec<_>>>()?;
        skipped += values.iter().filter(|v| v.is_none()).count();
        for k in 1..piece.len() {
            if let (Some(a), Some(bv)) = (values[k - 1], values[k]) {
                let dx = piece[k] - piece[k - 1];
                integral += 0.5 * dx * (a + bv);
                covered += dx;
            }
        }
    }
    if !(covered > 0.0) {
        return Err(Error::AllWindowsDegenerate);
    }
    let total = region.length();
    Ok(LossEval {
        loss: integral * total / covered,
        skipped,
        covered,
    })
}

/// [`discrepancy_loss_with`] on a sample.
pub fn discrepancy_loss(
    sample: &RddSample,
    b: f64,
    region: &EvalRegion,
    cfg: &BandwidthConfig,
) -> Result<LossEval> {
    let engine = LfrEngine::from_sample(sample, cfg.kernel, cfg.solver)?;
    discrepancy_loss_with(&engine, sample.cutoff(), b, region)
}

/// Full record of a bandwidth search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandwidthSearch {
    pub b_min: f64,
    pub b_max: f64,
    pub grid: Vec<f64>,
    pub region: EvalRegion,
    pub losses: Vec<f64>,
    pub skipped: Vec<usize>,
    /// Losses within this of the minimum count as ties.
    pub tie_tolerance: f64,
    pub best_index: usize,
    pub b_star: f64,
}

impl BandwidthSearch {
    /// Writes `b,loss,skipped` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "loss", "skipped"]).map_err(csv_err)?;
        for ((b, l), s) in self.grid.iter().zip(&self.losses).zip(&self.skipped) {
            w.write_record([format!("{b}"), format!("{l}"), s.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Runs the search on a prepared engine.
pub fn select_bandwidth_with(
    engine: &LfrEngine,
    c: f64,
    cfg: &BandwidthConfig,
) -> Result<BandwidthSearch> {
    cfg.validate()?;
    let r = engine.sorted_r();
    let (b_min, b_max) = compute_bounds(r, c)?;
    let grid = log_grid(b_min, b_max, cfg.grid_size);
    let region = EvalRegion::new(r[0], r[r.len() - 1], c, b_min, cfg.eval_points);
    if region.length() <= 0.0 {
        return Err(Error::AllWindowsDegenerate);
    }
    let evals = grid
        .par_iter()
        .map(|&b| discrepancy_loss_with(engine, c, b, &region))
        .collect::<Vec<_>>();
    let mut losses = Vec::with_capacity(grid.len());
    let mut skipped = Vec::with_capacity(grid.len());
    for e in evals {
        match e {
            Ok(v) => {
                losses.push(v.loss);
                skipped.push(v.skipped);
            }
            Err(Error::AllWindowsDegenerate) => {
                losses.push(f64::INFINITY);
                skipped.push(region.points().count());
            }
            Err(e) => return Err(e),
        }
    }
    let tie_tolerance = 1e-12 * region.length() * engine.extrinsic_scale();
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return Err(Error::AllWindowsDegenerate);
    }
    let best_index = losses
        .iter()
        .position(|&l| l <= min + tie_tolerance)
        .expect("minimum is attained");
    Ok(BandwidthSearch {
        b_min,
        b_max,
        b_star: grid[best_index],
        grid,
        region,
        losses,
        skipped,
        tie_tolerance,
        best_index,
    })
}

/// Selects the bandwidth minimizing the discrepancy objective over a
/// log-spaced grid; ties go to the smaller bandwidth.
pub fn select_bandwidth(sample: &RddSample, cfg: &BandwidthConfig) -> Result<BandwidthSearch> {
    let engine = LfrEngine::from_sample(sample, cfg.kernel, cfg.solver)?;
    select_bandwidth_with(&engine, sample.cutoff(), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::Record;
    use crate::spaces::MetricObject;

    fn uniform_grid(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn sample(f: impl Fn(f64) -> f64, r: &[f64]) -> RddSample {
        let recs = r
            .iter()
            .map(|&x| Record::new(x, MetricObject::scalar(f(x)).unwrap()))
            .collect();
        RddSample::new(recs, 0.0).unwrap()
    }

    #[test]
    fn bounds_on_uniform_grid() {
        let r = uniform_grid(200);
        let (b_min, b_max) = compute_bounds(&r, 0.0).unwrap();
        assert_eq!(b_max, 0.5);
        // 100 points on each side; the 20th closest below sits at index 80.
        let want = (0.0 - r[80]).max(r[119]);
        assert_eq!(b_min, want);
    }

    #[test]
    fn too_few_below() {
        let mut r: Vec<f64> = (0..19).map(|i| -1.0 + i as f64 * 0.01).collect();
        r.extend((0..30).map(|i| i as f64 * 0.01));
        assert_eq!(
            compute_bounds(&r, 0.0).unwrap_err(),
            Error::InsufficientData {
                below: 19,
                above: 30
            }
        );
    }

    #[test]
    fn inverted_bounds() {
        // a single large gap dominates b_min
        let mut r: Vec<f64> = (0..25).map(|i| -0.05 + i as f64 * 0.001).collect();
        r.extend((0..25).map(|i| i as f64 * 0.001));
        r.push(5.0);
        assert!(matches!(
            compute_bounds(&r, 0.0),
            Err(Error::InvertedBounds { .. })
        ));
    }

    #[test]
    fn region_respects_exclusions() {
        let reg = EvalRegion::new(-1.0, 1.0, 0.0, 0.1, 100);
        assert_eq!(reg.pieces.len(), 2);
        for r in reg.points() {
            for (a, b) in reg.excluded {
                assert!(!(r >= a && r <= b));
            }
        }
    }

    #[test]
    fn constant_outcome_has_zero_loss_and_smallest_bandwidth() {
        let r = uniform_grid(200);
        let s = sample(|_| 3.0, &r);
        let search = select_bandwidth(&s, &BandwidthConfig::default()).unwrap();
        assert!(search.losses.iter().all(|&l| l < 1e-20));
        assert_eq!(search.best_index, 0);
        assert_eq!(search.b_star, search.b_min);
    }

    #[test]
    fn linear_outcome_has_negligible_loss() {
        let r = uniform_grid(200);
        let s = sample(|x| 2.0 * x - 1.0, &r);
        let search = select_bandwidth(&s, &BandwidthConfig::default()).unwrap();
        assert!(search.losses.iter().all(|&l| l < 1e-16));
        assert_eq!(search.b_star, search.b_min);
        assert!(search.b_star >= search.b_min && search.b_star <= search.b_max);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = log_grid(0.1, 0.5, 20);
        assert_eq!(g.len(), 20);
        assert_eq!((g[0], g[19]), (0.1, 0.5));
        let ratio = g[1] / g[0];
        for w in g.windows(2) {
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_has_one_row_per_candidate() {
        let r = uniform_grid(120);
        let s = sample(|x| x * x, &r);
        let cfg = BandwidthConfig {
            grid_size: 5,
            ..Default::default()
        };
        let search = select_bandwidth(&s, &cfg).unwrap();
        let mut buf = Vec::new();
        search.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 6);
        assert!(text.starts_with("b,loss,skipped"));
    }
}
