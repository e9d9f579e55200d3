//! Cross-validated local-linear bandwidth, kept as a rough point of
//! comparison for the data-adaptive selector.

use serde::Serialize;

use crate::bandwidth::{compute_bounds, log_grid};
use crate::error::{Error, Result};
use crate::frechet::{KernelSide, LfrEngine};
use crate::spaces;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvSearch {
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub best: f64,
}

/// Leave-one-out boundary-mimicking CV: every observation is predicted from
/// a local-linear fit on the observations strictly between it and its side's
/// far end, so each prediction is a one-sided boundary fit like the one made
/// at the cutoff. The score is the mean squared prediction distance.
pub fn cv_bandwidth(engine: &LfrEngine, c: f64, grid_size: usize) -> Result<CvSearch> {
    let r = engine.sorted_r();
    let (b_min, b_max) = compute_bounds(r, c)?;
    let grid = log_grid(b_min, b_max, grid_size.max(1));
    let mut scores = Vec::with_capacity(grid.len());
    for &h in &grid {
        let mut total = 0.0;
        let mut used = 0usize;
        for pos in 0..engine.len() {
            let x = r[pos];
            // left points look further left, right points further right
            let range = if x < c {
                engine.closed(x - h, x).start..pos
            } else {
                pos + 1..engine.closed(x, x + h).end
            };
            match engine.fit_range(range, x, h, KernelSide::TwoSided) {
                Ok(fit) => {
                    let d = spaces::distance(&fit.estimate, engine.object(pos))?;
                    total += d * d;
                    used += 1;
                }
                Err(Error::DegenerateWindow { .. } | Error::NonPositiveWeightSum { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        scores.push(if used == 0 {
            f64::INFINITY
        } else {
            total / used as f64
        });
    }
    let best_index = scores
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or(Error::AllWindowsDegenerate)?;
    if !scores[best_index].is_finite() {
        return Err(Error::AllWindowsDegenerate);
    }
    Ok(CvSearch {
        best: grid[best_index],
        grid,
        scores,
    })
}
