//! Unit-sphere primitives on raw coordinate slices.
//!
//! Tangent vectors are stored in ambient coordinates, orthogonal to their
//! base point.

use crate::error::{Error, Result};

/// Inner products at or below `-1 + ANTIPODAL_TOL` are treated as antipodal.
pub const ANTIPODAL_TOL: f64 = 1e-9;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Arc length `arccos(a·b)`, evaluated through the chord length so that it
/// stays accurate for nearby points and is exactly symmetric.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    let chord = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    2.0 * (0.5 * chord).min(1.0).asin()
}

fn check_not_antipodal(a: &[f64], b: &[f64]) -> Result<()> {
    if dot(a, b) <= -1.0 + ANTIPODAL_TOL {
        return Err(Error::AntipodalPoints);
    }
    Ok(())
}

/// Riemannian logarithm `Log_base(x)`.
pub fn log(base: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_not_antipodal(base, x)?;
    let c = dot(base, x);
    let mut u: Vec<f64> = x.iter().zip(base).map(|(xi, bi)| xi - c * bi).collect();
    let un = norm(&u);
    if un < 1e-300 {
        return Ok(vec![0.0; base.len()]);
    }
    let theta = distance(base, x);
    let scale = theta / un;
    u.iter_mut().for_each(|v| *v *= scale);
    Ok(u)
}

/// Riemannian exponential `Exp_base(v)`; the result lies on the full sphere.
pub fn exp(base: &[f64], v: &[f64]) -> Vec<f64> {
    let n = norm(v);
    if n < 1e-300 {
        return base.to_vec();
    }
    let (s, c) = n.sin_cos();
    let mut out: Vec<f64> = base
        .iter()
        .zip(v)
        .map(|(b, vi)| c * b + s * vi / n)
        .collect();
    let on = norm(&out);
    out.iter_mut().for_each(|x| *x /= on);
    out
}

/// Point at fraction `t` along the great-circle arc from `a` to `b`.
pub fn slerp(a: &[f64], b: &[f64], t: f64) -> Result<Vec<f64>> {
    check_not_antipodal(a, b)?;
    let theta = distance(a, b);
    if theta < 1e-12 {
        let mut out: Vec<f64> = a
            .iter()
            .zip(b)
            .map(|(x, y)| (1.0 - t) * x + t * y)
            .collect();
        let n = norm(&out);
        out.iter_mut().for_each(|x| *x /= n);
        return Ok(out);
    }
    let s = theta.sin();
    let wa = ((1.0 - t) * theta).sin() / s;
    let wb = (t * theta).sin() / s;
    let mut out: Vec<f64> = a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect();
    let n = norm(&out);
    out.iter_mut().for_each(|x| *x /= n);
    Ok(out)
}

/// Parallel transport of a tangent vector `v` at `from` to `to` along the
/// connecting great circle.
pub fn parallel_transport(from: &[f64], to: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let dir = log(from, to)?;
    let theta = norm(&dir);
    if theta < 1e-15 {
        return Ok(project_tangent(to, v));
    }
    let u: Vec<f64> = dir.iter().map(|x| x / theta).collect();
    let uv = dot(&u, v);
    let (s, c) = theta.sin_cos();
    let out: Vec<f64> = v
        .iter()
        .zip(u.iter().zip(from))
        .map(|(vi, (ui, fi))| vi + uv * ((c - 1.0) * ui - s * fi))
        .collect();
    // Remove rounding drift out of the tangent space at `to`.
    Ok(project_tangent(to, &out))
}

pub fn project_tangent(base: &[f64], v: &[f64]) -> Vec<f64> {
    let c = dot(base, v);
    v.iter().zip(base).map(|(vi, bi)| vi - c * bi).collect()
}

/// Clamp negative coordinates to zero and renormalize. Returns the projected
/// point and the most negative coordinate seen before clamping.
pub fn project_orthant(z: &[f64]) -> (Vec<f64>, f64) {
    let worst = z.iter().copied().fold(0.0_f64, f64::min);
    let mut out: Vec<f64> = z.iter().map(|x| x.max(0.0)).collect();
    let n = norm(&out);
    if n > 0.0 {
        out.iter_mut().for_each(|x| *x /= n);
    }
    (out, worst)
}
