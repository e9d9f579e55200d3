//! Weighted Frechet means with possibly signed weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Warning};
use crate::spaces::{self, sphere, MetricObject, Space};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrechetSolveConfig {
    pub max_iter: usize,
    /// Stop once the projected gradient mapping is below this norm.
    pub grad_tol: f64,
    /// Backtracking step multiplier.
    pub shrink: f64,
    /// Sample points with the largest |weight| used as extra starts.
    pub multistart: usize,
}

impl Default for FrechetSolveConfig {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-11,
            shrink: 0.5,
            multistart: 5,
        }
    }
}

impl FrechetSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidConfig("grad_tol must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidConfig("shrink must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    /// Weighted average in the Hilbert embedding, projected onto the image.
    Embedded,
    /// Multistart Riemannian gradient descent.
    RiemannianDescent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub method: SolverMethod,
    /// Objective `sum_i w_i d^2(mean, Y_i)` with weights scaled to sum to one.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// The minimizer was metric-projected back onto the space.
    pub projected: bool,
    pub starts: usize,
    /// Largest distance between the selected minimizer and any other
    /// multistart solution; zero for closed-form solves.
    pub multistart_spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetSolution {
    pub mean: MetricObject,
    pub report: SolverReport,
    pub warnings: Vec<Warning>,
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let sum: f64 = weights.iter().sum();
    let scale: f64 = weights.iter().map(|w| w.abs()).sum();
    if !(sum > 1e-12 * scale) {
        return Err(Error::NonPositiveWeightSum { sum });
    }
    Ok(sum)
}

/// `sum_i w_i d^2(nu, Y_i)`.
pub fn frechet_objective(
    objects: &[MetricObject],
    weights: &[f64],
    nu: &MetricObject,
) -> Result<f64> {
    let mut total = 0.0;
    for (y, w) in objects.iter().zip(weights) {
        let d = spaces::distance(nu, y)?;
        total += w * d * d;
    }
    Ok(total)
}

/// Minimizer of `sum_i w_i d^2(., Y_i)` over the space.
pub fn weighted_frechet_mean(
    objects: &[MetricObject],
    weights: &[f64],
    cfg: &FrechetSolveConfig,
) -> Result<MetricObject> {
    Ok(solve_weighted_frechet(objects, weights, cfg)?.mean)
}

/// As [`weighted_frechet_mean`], with solver diagnostics.
pub fn solve_weighted_frechet(
    objects: &[MetricObject],
    weights: &[f64],
    cfg: &FrechetSolveConfig,
) -> Result<FrechetSolution> {
    cfg.validate()?;
    let first = objects.first().ok_or(Error::EmptyInput)?;
    if weights.len() != objects.len() {
        return Err(Error::ShapeMismatch {
            left: format!("{} objects", objects.len()),
            right: format!("{} weights", weights.len()),
        });
    }
    let space = *first.space();
    for o in &objects[1..] {
        space.ensure_same(o.space())?;
    }
    if space.embedding_available() {
        let embedded = objects
            .iter()
            .map(spaces::embed)
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<(&[f64], f64)> = embedded
            .iter()
            .map(Vec::as_slice)
            .zip(weights.iter().copied())
            .collect();
        let (mean, projected) = embedded_mean(&space, &rows)?;
        let sum: f64 = weights.iter().sum();
        let normalized: Vec<f64> = weights.iter().map(|w| w / sum).collect();
        let objective = frechet_objective(objects, &normalized, &mean)?;
        Ok(closed_form_solution(mean, projected, objective))
    } else {
        let points: Vec<&[f64]> = objects.iter().map(MetricObject::data).collect();
        sphere_mean(&space, &points, weights, cfg)
    }
}

pub(crate) fn closed_form_solution(
    mean: MetricObject,
    projected: bool,
    objective: f64,
) -> FrechetSolution {
    FrechetSolution {
        mean,
        report: SolverReport {
            method: SolverMethod::Embedded,
            objective,
            iterations: 0,
            converged: true,
            projected,
            starts: 1,
            multistart_spread: 0.0,
        },
        warnings: if projected {
            vec![Warning::ProjectionApplied]
        } else {
            Vec::new()
        },
    }
}

/// Weighted average of embedded rows, mapped back through the projected
/// inverse embedding.
pub(crate) fn embedded_mean(space: &Space, rows: &[(&[f64], f64)]) -> Result<(MetricObject, bool)> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let weights: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let sum = check_weights(&weights)?;
    let mut acc = vec![0.0; rows[0].0.len()];
    for (v, w) in rows {
        if *w == 0.0 {
            continue;
        }
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += w * x;
        }
    }
    acc.iter_mut().for_each(|a| *a /= sum);
    spaces::inverse_embed_projected(&acc, space)
}

fn sphere_objective(points: &[&[f64]], weights: &[f64], nu: &[f64]) -> f64 {
    points
        .iter()
        .zip(weights)
        .filter(|(_, w)| **w != 0.0)
        .map(|(p, w)| {
            let d = sphere::distance(nu, p);
            w * d * d
        })
        .sum()
}

struct Descent {
    point: Vec<f64>,
    objective: f64,
    iterations: usize,
    converged: bool,
}

fn riemannian_descent(
    points: &[&[f64]],
    weights: &[f64],
    start: Vec<f64>,
    cfg: &FrechetSolveConfig,
) -> Result<Descent> {
    let dim = start.len();
    let mut nu = start;
    let mut f = sphere_objective(points, weights, &nu);
    let mut alpha = 0.5;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        let mut grad = vec![0.0; dim];
        for (p, w) in points.iter().zip(weights) {
            if *w == 0.0 {
                continue;
            }
            let v = sphere::log(&nu, p)?;
            for (g, vi) in grad.iter_mut().zip(&v) {
                *g -= 2.0 * w * vi;
            }
        }
        if sphere::norm(&grad) < cfg.grad_tol {
            converged = true;
            break;
        }
        let mut step = (alpha * 2.0_f64).min(1.0);
        let mut accepted = None;
        for _ in 0..80 {
            let v: Vec<f64> = grad.iter().map(|g| -step * g).collect();
            let trial = sphere::project_orthant(&sphere::exp(&nu, &v)).0;
            let moved = sphere::distance(&nu, &trial);
            let ft = sphere_objective(points, weights, &trial);
            if !ft.is_finite() {
                return Err(Error::SolverDiverged("objective became non-finite".into()));
            }
            if ft <= f - 1e-4 * moved * moved / step {
                accepted = Some((trial, ft, moved));
                break;
            }
            step *= cfg.shrink;
        }
        match accepted {
            Some((trial, ft, moved)) => {
                nu = trial;
                let gain = f - ft;
                f = ft;
                alpha = step;
                if moved / step < cfg.grad_tol || gain <= 1e-16 * f.abs().max(1e-300) {
                    converged = true;
                    break;
                }
            }
            None => {
                // No representable decrease: stationary to working precision.
                converged = true;
                break;
            }
        }
    }
    Ok(Descent {
        point: nu,
        objective: f,
        iterations,
        converged,
    })
}

/// Signed-weight Frechet mean on the sphere's positive orthant.
///
/// Starts: the sample points with the largest |weight|, the sample point
/// with the lowest objective, and the normalized extrinsic weighted mean.
pub(crate) fn sphere_mean(
    space: &Space,
    points: &[&[f64]],
    weights: &[f64],
    cfg: &FrechetSolveConfig,
) -> Result<FrechetSolution> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum = check_weights(weights)?;
    let w: Vec<f64> = weights.iter().map(|x| x / sum).collect();
    let dim = points[0].len();

    let mut starts: Vec<Vec<f64>> = Vec::new();
    let push = |s: Vec<f64>, starts: &mut Vec<Vec<f64>>| {
        if !starts.iter().any(|t| t == &s) {
            starts.push(s);
        }
    };

    let mut extrinsic = vec![0.0; dim];
    for (p, wi) in points.iter().zip(&w) {
        for (e, x) in extrinsic.iter_mut().zip(p.iter()) {
            *e += wi * x;
        }
    }
    let (ext, _) = sphere::project_orthant(&extrinsic);
    if sphere::norm(&ext) > 0.5 {
        push(ext, &mut starts);
    }

    let mut order: Vec<usize> = (0..points.len()).filter(|&i| w[i] != 0.0).collect();
    order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
    for &i in order.iter().take(cfg.multistart) {
        push(points[i].to_vec(), &mut starts);
    }

    let best_input = order
        .iter()
        .map(|&i| (i, sphere_objective(points, &w, points[i])))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    if let Some((i, _)) = best_input {
        push(points[i].to_vec(), &mut starts);
    }
    if starts.is_empty() {
        push(points[0].to_vec(), &mut starts);
    }

    let runs = starts
        .into_iter()
        .map(|s| riemannian_descent(points, &w, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one start");
    let chosen = &runs[best];
    let tie_tol = 1e-9 * (1.0 + chosen.objective.abs());
    let mut spread: f64 = 0.0;
    let mut disagreement = false;
    for r in &runs {
        let d = sphere::distance(&r.point, &chosen.point);
        spread = spread.max(d);
        if d > 1e-6 && (r.objective - chosen.objective).abs() <= tie_tol {
            disagreement = true;
        }
    }
    let mut warnings = Vec::new();
    if disagreement {
        warnings.push(Warning::MultistartDisagreement);
    }
    Ok(FrechetSolution {
        mean: MetricObject::from_parts(*space, chosen.point.clone()),
        report: SolverReport {
            method: SolverMethod::RiemannianDescent,
            objective: chosen.objective,
            iterations: runs.iter().map(|r| r.iterations).sum(),
            converged: chosen.converged,
            projected: false,
            starts: runs.len(),
            multistart_spread: spread,
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> FrechetSolveConfig {
        FrechetSolveConfig::default()
    }

    #[test]
    fn euclidean_weighted_average() {
        let objs = vec![
            MetricObject::scalar(1.0).unwrap(),
            MetricObject::scalar(3.0).unwrap(),
        ];
        let m = weighted_frechet_mean(&objs, &[0.5, 0.5], &cfg()).unwrap();
        assert_eq!(m.data(), &[2.0]);
    }

    #[test]
    fn single_object_is_its_own_mean() {
        let z = MetricObject::composition_from_shares(&[0.2, 0.3, 0.5]).unwrap();
        let m = weighted_frechet_mean(std::slice::from_ref(&z), &[1.0], &cfg()).unwrap();
        assert!(spaces::distance(&m, &z).unwrap() < 1e-12);
        let q = MetricObject::quantiles(vec![0.0, 0.5, 2.0], None).unwrap();
        assert_eq!(
            weighted_frechet_mean(std::slice::from_ref(&q), &[1.0], &cfg()).unwrap(),
            q
        );
    }

    #[test]
    fn sphere_midpoint_matches_golden_section_oracle() {
        let a = MetricObject::sphere_point(vec![0.8, 0.6, 0.0]).unwrap();
        let b = MetricObject::sphere_point(vec![0.0, 0.6, 0.8]).unwrap();
        let objs = [a.clone(), b.clone()];
        let m = weighted_frechet_mean(&objs, &[1.0, 1.0], &cfg()).unwrap();
        // Golden-section search along the geodesic for the minimizer.
        let f = |t: f64| {
            let p = spaces::geodesic_eval(&a, &b, t).unwrap();
            frechet_objective(&objs, &[1.0, 1.0], &p).unwrap()
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if f(x1) < f(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let oracle = spaces::geodesic_eval(&a, &b, 0.5 * (lo + hi)).unwrap();
        assert!(spaces::distance(&m, &oracle).unwrap() < 1e-7);
    }

    #[test]
    fn mean_beats_every_input_and_extrinsic_start() {
        let shares = [
            [0.5, 0.3, 0.2],
            [0.1, 0.6, 0.3],
            [0.3, 0.3, 0.4],
            [0.05, 0.05, 0.9],
        ];
        let objs: Vec<_> = shares
            .iter()
            .map(|s| MetricObject::composition_from_shares(s).unwrap())
            .collect();
        let w = [1.4, -0.3, 0.6, -0.2];
        let sol = solve_weighted_frechet(&objs, &w, &cfg()).unwrap();
        let best = frechet_objective(&objs, &w, &sol.mean).unwrap();
        for o in &objs {
            assert!(best <= frechet_objective(&objs, &w, o).unwrap() + 1e-12);
        }
        assert!(sol.report.starts >= 2);
    }

    #[test]
    fn non_positive_weight_sum_rejected() {
        let objs = vec![
            MetricObject::scalar(1.0).unwrap(),
            MetricObject::scalar(3.0).unwrap(),
        ];
        assert!(matches!(
            weighted_frechet_mean(&objs, &[1.0, -1.0], &cfg()),
            Err(Error::NonPositiveWeightSum { .. })
        ));
        assert!(matches!(
            weighted_frechet_mean(&[], &[], &cfg()),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn projected_wasserstein_mean_flags_warning() {
        let a = MetricObject::quantiles(vec![0.0, 1.0, 2.0], None).unwrap();
        let b = MetricObject::quantiles(vec![0.0, 0.1, 0.2], None).unwrap();
        // extrapolation 2a - b is still monotone; 3b - 2a is not.
        let sol = solve_weighted_frechet(&[a, b], &[-2.0, 3.0], &cfg()).unwrap();
        assert!(sol.report.projected);
        assert_eq!(sol.warnings, vec![Warning::ProjectionApplied]);
    }
}
