//! Geodesic metric spaces for outcome objects.
//!
//! Every supported space is uniquely geodesic. All but the compositional
//! sphere carry an isometric embedding `Psi` into a weighted Euclidean space,
//! which makes Frechet means, geodesics and transport maps closed-form there.
//! The sphere instead exposes Riemannian log/exp maps.
//!
//! Objects are stored as flat `f64` payloads:
//!
//! | space                 | payload                                       |
//! |-----------------------|-----------------------------------------------|
//! | `Euclidean`           | the vector                                    |
//! | `FunctionalL2`        | values on a uniform grid over the domain      |
//! | `CompositionalSphere` | square-root shares, unit norm, non-negative   |
//! | `NetworkLaplacian`    | row-major `m x m` Laplacian                   |
//! | `Spd`                 | row-major `m x m` matrix                      |
//! | `Wasserstein1D`       | quantile function on a uniform grid of [0, 1] |

pub mod isotonic;
pub mod matrix;
pub mod sphere;
mod wire;

use std::borrow::Cow;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use wire::WireObject;

/// Default exponent for the SPD power metric.
pub const DEFAULT_POWER: f64 = 0.5;
/// Default lower bound on SPD eigenvalues.
pub const DEFAULT_EPS_PD: f64 = 1e-10;
/// Default grid length for functional outcomes.
pub const DEFAULT_FUNCTION_GRID: usize = 24;
/// Default probability-grid length for quantile functions.
pub const DEFAULT_QUANTILE_GRID: usize = 100;

/// Absolute tolerance used for structural invariants, scaled by the payload
/// magnitude where that matters.
const INVARIANT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpdMetric {
    Frobenius,
    Power(f64),
    LogEuclidean,
    LogCholesky,
}

impl fmt::Display for SpdMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpdMetric::Frobenius => write!(f, "frobenius"),
            SpdMetric::Power(p) => write!(f, "power:{p}"),
            SpdMetric::LogEuclidean => write!(f, "log_euclidean"),
            SpdMetric::LogCholesky => write!(f, "log_cholesky"),
        }
    }
}

impl std::str::FromStr for SpdMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "frobenius" | "frob" => Ok(SpdMetric::Frobenius),
            "power" => Ok(SpdMetric::Power(DEFAULT_POWER)),
            "log_euclidean" | "logeuclidean" | "le" => Ok(SpdMetric::LogEuclidean),
            "log_cholesky" | "logcholesky" | "lc" => Ok(SpdMetric::LogCholesky),
            _ => {
                if let Some(p) = s
                    .strip_prefix("power:")
                    .or_else(|| s.strip_prefix("power("))
                {
                    let p = p.trim_end_matches(')');
                    let p: f64 = p
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("bad power exponent `{p}`")))?;
                    if !(p > 0.0 && p.is_finite()) {
                        return Err(Error::InvalidConfig(format!(
                            "power exponent must be positive, got {p}"
                        )));
                    }
                    Ok(SpdMetric::Power(p))
                } else {
                    Err(Error::InvalidConfig(format!("unknown SPD metric `{s}`")))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceTag {
    Euclidean,
    FunctionalL2,
    CompositionalSphere,
    NetworkLaplacian,
    SpdMatrix,
    Wasserstein1D,
}

/// A concrete geodesic space, including its shape and geometry parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Space {
    Euclidean {
        dim: usize,
    },
    FunctionalL2 {
        grid_len: usize,
        domain: (f64, f64),
    },
    CompositionalSphere {
        dim: usize,
    },
    /// `w_max = None` leaves edge weights unbounded.
    NetworkLaplacian {
        nodes: usize,
        w_max: Option<f64>,
    },
    Spd {
        dim: usize,
        metric: SpdMetric,
        eps_pd: f64,
    },
    /// `support = None` leaves the quantile range unbounded.
    Wasserstein1D {
        grid_len: usize,
        support: Option<(f64, f64)>,
    },
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Euclidean { dim } => write!(f, "euclid[{dim}]"),
            Space::FunctionalL2 { grid_len, .. } => write!(f, "l2[{grid_len}]"),
            Space::CompositionalSphere { dim } => write!(f, "simplex[{dim}]"),
            Space::NetworkLaplacian { nodes, .. } => write!(f, "laplacian[{nodes}x{nodes}]"),
            Space::Spd { dim, metric, .. } => write!(f, "spd:{metric}[{dim}x{dim}]"),
            Space::Wasserstein1D { grid_len, .. } => write!(f, "wass[{grid_len}]"),
        }
    }
}

impl Space {
    pub fn spd(dim: usize, metric: SpdMetric) -> Self {
        Space::Spd {
            dim,
            metric,
            eps_pd: DEFAULT_EPS_PD,
        }
    }

    pub fn tag(&self) -> SpaceTag {
        match self {
            Space::Euclidean { .. } => SpaceTag::Euclidean,
            Space::FunctionalL2 { .. } => SpaceTag::FunctionalL2,
            Space::CompositionalSphere { .. } => SpaceTag::CompositionalSphere,
            Space::NetworkLaplacian { .. } => SpaceTag::NetworkLaplacian,
            Space::Spd { .. } => SpaceTag::SpdMatrix,
            Space::Wasserstein1D { .. } => SpaceTag::Wasserstein1D,
        }
    }

    pub fn metric_variant(&self) -> Option<SpdMetric> {
        match self {
            Space::Spd { metric, .. } => Some(*metric),
            _ => None,
        }
    }

    pub fn shape(&self) -> Vec<usize> {
        match *self {
            Space::Euclidean { dim } | Space::CompositionalSphere { dim } => vec![dim],
            Space::FunctionalL2 { grid_len, .. } | Space::Wasserstein1D { grid_len, .. } => {
                vec![grid_len]
            }
            Space::NetworkLaplacian { nodes: m, .. } | Space::Spd { dim: m, .. } => vec![m, m],
        }
    }

    pub fn payload_len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn embedding_available(&self) -> bool {
        !matches!(self, Space::CompositionalSphere { .. })
    }

    pub fn logexp_available(&self) -> bool {
        matches!(
            self,
            Space::CompositionalSphere { .. } | Space::Euclidean { .. }
        )
    }

    pub fn descriptor(&self) -> SpaceDescriptor {
        SpaceDescriptor::new(*self)
    }

    /// Quadrature weights of the Hilbert inner product on embedded points;
    /// `None` means the plain dot product.
    pub fn hilbert_weights(&self) -> Option<Vec<f64>> {
        match *self {
            Space::FunctionalL2 { grid_len, domain } => {
                Some(trapezoid_weights(grid_len, domain.1 - domain.0))
            }
            Space::Wasserstein1D { grid_len, .. } => Some(trapezoid_weights(grid_len, 1.0)),
            _ => None,
        }
    }

    /// Squared Hilbert norm of an embedded vector.
    pub fn hilbert_norm_sq(&self, v: &[f64]) -> f64 {
        match self.hilbert_weights() {
            Some(w) => v.iter().zip(&w).map(|(x, wi)| wi * x * x).sum(),
            None => v.iter().map(|x| x * x).sum(),
        }
    }

    /// Hilbert distance between two embedded vectors.
    pub fn hilbert_distance(&self, u: &[f64], v: &[f64]) -> f64 {
        let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
        self.hilbert_norm_sq(&diff).sqrt()
    }

    /// Checks that this space agrees with `other` in kind, shape and geometry.
    pub fn ensure_same(&self, other: &Space) -> Result<()> {
        if self.tag() != other.tag() || self.metric_variant() != other.metric_variant() {
            return Err(Error::SpaceMismatch {
                left: self.to_string(),
                right: other.to_string(),
            });
        }
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: format!("{:?}", self.shape()),
                right: format!("{:?}", other.shape()),
            });
        }
        if self != other {
            return Err(Error::SpaceMismatch {
                left: format!("{self:?}"),
                right: format!("{other:?}"),
            });
        }
        Ok(())
    }

    fn check_params(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidObject(m));
        match *self {
            Space::Euclidean { dim } if dim == 0 => bad("euclidean dimension must be >= 1".into()),
            Space::FunctionalL2 { grid_len, domain } => {
                if grid_len < 2 {
                    bad("functional grid needs at least 2 points".into())
                } else if !(domain.0 < domain.1) || !domain.0.is_finite() || !domain.1.is_finite() {
                    bad(format!("invalid domain {domain:?}"))
                } else {
                    Ok(())
                }
            }
            Space::CompositionalSphere { dim } if dim < 2 => {
                bad("compositions need at least 2 parts".into())
            }
            Space::NetworkLaplacian { nodes, w_max } => {
                if nodes < 2 {
                    bad("laplacians need at least 2 nodes".into())
                } else if w_max.is_some_and(|w| !(w > 0.0)) {
                    bad("w_max must be positive".into())
                } else {
                    Ok(())
                }
            }
            Space::Spd {
                dim,
                metric,
                eps_pd,
            } => {
                if dim == 0 {
                    bad("SPD dimension must be >= 1".into())
                } else if !(eps_pd > 0.0) {
                    bad("eps_pd must be positive".into())
                } else if matches!(metric, SpdMetric::Power(p) if !(p > 0.0 && p.is_finite())) {
                    bad("power exponent must be positive".into())
                } else {
                    Ok(())
                }
            }
            Space::Wasserstein1D { grid_len, support } => {
                if grid_len < 2 {
                    bad("quantile grid needs at least 2 points".into())
                } else if support.is_some_and(|(a, b)| !(a < b)) {
                    bad(format!("invalid support {support:?}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Validates a payload against this space's invariants.
    pub fn validate(&self, data: &[f64]) -> Result<()> {
        self.check_params()?;
        if data.len() != self.payload_len() {
            return Err(Error::ShapeMismatch {
                left: format!("{:?}", self.shape()),
                right: format!("payload of length {}", data.len()),
            });
        }
        if let Some(index) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let scale = data.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        let tol = INVARIANT_TOL * scale;
        match *self {
            Space::Euclidean { .. } | Space::FunctionalL2 { .. } => Ok(()),
            Space::CompositionalSphere { .. } => {
                if let Some(i) = data.iter().position(|&x| x < 0.0) {
                    return Err(Error::InvalidObject(format!(
                        "sphere coordinate {i} is negative ({})",
                        data[i]
                    )));
                }
                let n = sphere::norm(data);
                if (n - 1.0).abs() > INVARIANT_TOL {
                    return Err(Error::InvalidObject(format!(
                        "sphere point has norm {n}, expected 1"
                    )));
                }
                Ok(())
            }
            Space::NetworkLaplacian { nodes: m, w_max } => {
                for i in 0..m {
                    let mut row = 0.0;
                    for j in 0..m {
                        let x = data[i * m + j];
                        row += x;
                        if (x - data[j * m + i]).abs() > tol {
                            return Err(Error::InvalidObject(format!(
                                "laplacian not symmetric at ({i},{j})"
                            )));
                        }
                        if i != j {
                            if x > tol {
                                return Err(Error::InvalidObject(format!(
                                    "laplacian off-diagonal ({i},{j}) is positive ({x})"
                                )));
                            }
                            if let Some(w) = w_max {
                                if -x > w + tol {
                                    return Err(Error::InvalidObject(format!(
                                        "edge weight {} at ({i},{j}) exceeds w_max {w}",
                                        -x
                                    )));
                                }
                            }
                        } else if x < -tol {
                            return Err(Error::InvalidObject(format!(
                                "laplacian diagonal ({i},{i}) is negative"
                            )));
                        }
                    }
                    if row.abs() > tol {
                        return Err(Error::InvalidObject(format!(
                            "laplacian row {i} sums to {row}"
                        )));
                    }
                }
                Ok(())
            }
            Space::Spd { dim: m, eps_pd, .. } => {
                for i in 0..m {
                    for j in 0..i {
                        if (data[i * m + j] - data[j * m + i]).abs() > tol {
                            return Err(Error::InvalidObject(format!(
                                "matrix not symmetric at ({i},{j})"
                            )));
                        }
                    }
                }
                let lmin = matrix::min_eigenvalue(&matrix::symmetrize(m, data));
                if !(lmin > eps_pd) {
                    return Err(Error::InvalidObject(format!(
                        "smallest eigenvalue {lmin:e} is not above eps_pd {eps_pd:e}"
                    )));
                }
                Ok(())
            }
            Space::Wasserstein1D { support, .. } => {
                if !isotonic::is_non_decreasing(data, tol) {
                    return Err(Error::InvalidObject(
                        "quantile function is not non-decreasing".into(),
                    ));
                }
                if let Some((lo, hi)) = support {
                    if data[0] < lo - tol || data[data.len() - 1] > hi + tol {
                        return Err(Error::InvalidObject(format!(
                            "quantiles leave the support [{lo}, {hi}]"
                        )));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Trapezoid-rule weights for `n` equally spaced nodes spanning `length`.
pub fn trapezoid_weights(n: usize, length: f64) -> Vec<f64> {
    let h = length / (n - 1) as f64;
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// Static facts about a space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceDescriptor {
    pub space: Space,
    /// Curvature exponents of the Frechet objective near its minimizer;
    /// both equal 2 for every shipped space.
    pub beta1: f64,
    pub beta2: f64,
}

impl SpaceDescriptor {
    pub fn new(space: Space) -> Self {
        Self {
            space,
            beta1: 2.0,
            beta2: 2.0,
        }
    }

    pub fn tag(&self) -> SpaceTag {
        self.space.tag()
    }

    pub fn embedding_available(&self) -> bool {
        self.space.embedding_available()
    }

    pub fn logexp_available(&self) -> bool {
        self.space.logexp_available()
    }

    /// Bandwidth exponent `h^(2 / (beta1 - 1))` of the smoothing bias.
    pub fn bias_exponent(&self) -> f64 {
        2.0 / (self.beta1 - 1.0)
    }
}

/// A point in one of the supported spaces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireObject", into = "WireObject")]
pub struct MetricObject {
    space: Space,
    data: Vec<f64>,
}

impl MetricObject {
    /// Builds a validated object.
    pub fn new(space: Space, data: Vec<f64>) -> Result<Self> {
        space.validate(&data)?;
        Ok(Self { space, data })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_parts(space: Space, data: Vec<f64>) -> Self {
        Self { space, data }
    }

    pub fn euclidean(v: Vec<f64>) -> Result<Self> {
        Self::new(Space::Euclidean { dim: v.len() }, v)
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::euclidean(vec![x])
    }

    pub fn function(values: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        Self::new(
            Space::FunctionalL2 {
                grid_len: values.len(),
                domain,
            },
            values,
        )
    }

    /// Maps simplex shares to the sphere by the square-root transform. Zero
    /// shares are floored at `1e-12` and the result renormalized.
    pub fn composition_from_shares(shares: &[f64]) -> Result<Self> {
        if let Some(index) = shares.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(i) = shares.iter().position(|&x| x < 0.0) {
            return Err(Error::InvalidObject(format!("share {i} is negative")));
        }
        let floored: Vec<f64> = shares.iter().map(|&x| x.max(1e-12)).collect();
        let total: f64 = floored.iter().sum();
        let mut z: Vec<f64> = floored.iter().map(|x| (x / total).sqrt()).collect();
        let n = sphere::norm(&z);
        z.iter_mut().for_each(|x| *x /= n);
        Self::new(Space::CompositionalSphere { dim: z.len() }, z)
    }

    pub fn sphere_point(z: Vec<f64>) -> Result<Self> {
        Self::new(Space::CompositionalSphere { dim: z.len() }, z)
    }

    /// Laplacian `D - W` of a symmetric, hollow, non-negative weight matrix.
    pub fn laplacian_from_weights(m: usize, weights: &[f64], w_max: Option<f64>) -> Result<Self> {
        if weights.len() != m * m {
            return Err(Error::ShapeMismatch {
                left: format!("[{m}, {m}]"),
                right: format!("payload of length {}", weights.len()),
            });
        }
        let mut l = vec![0.0; m * m];
        for i in 0..m {
            let mut deg = 0.0;
            for j in 0..m {
                if i != j {
                    l[i * m + j] = -weights[i * m + j];
                    deg += weights[i * m + j];
                }
            }
            l[i * m + i] = deg;
        }
        Self::new(Space::NetworkLaplacian { nodes: m, w_max }, l)
    }

    pub fn spd(m: usize, data: Vec<f64>, metric: SpdMetric) -> Result<Self> {
        Self::new(Space::spd(m, metric), data)
    }

    pub fn quantiles(q: Vec<f64>, support: Option<(f64, f64)>) -> Result<Self> {
        Self::new(
            Space::Wasserstein1D {
                grid_len: q.len(),
                support,
            },
            q,
        )
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Simplex shares for a sphere point (`z^2`); the raw payload otherwise.
    pub fn display_payload(&self) -> Cow<'_, [f64]> {
        match self.space {
            Space::CompositionalSphere { .. } => {
                Cow::Owned(self.data.iter().map(|z| z * z).collect())
            }
            _ => Cow::Borrowed(&self.data),
        }
    }

    pub fn distance(&self, other: &MetricObject) -> Result<f64> {
        distance(self, other)
    }
}

/// An estimated effect: the geodesic from `start` to `end`, with the reference
/// point used to compare effects through transport.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicEffect {
    pub start: MetricObject,
    pub end: MetricObject,
    pub length: f64,
    pub reference: MetricObject,
}

impl GeodesicEffect {
    pub fn new(start: MetricObject, end: MetricObject, reference: MetricObject) -> Result<Self> {
        start.space.ensure_same(&reference.space)?;
        let length = distance(&start, &end)?;
        Ok(Self {
            start,
            end,
            length,
            reference,
        })
    }

    /// Point at fraction `t` along the effect geodesic.
    pub fn at(&self, t: f64) -> Result<MetricObject> {
        geodesic_eval(&self.start, &self.end, t)
    }
}

fn same_space(a: &MetricObject, b: &MetricObject) -> Result<()> {
    a.space.ensure_same(&b.space)
}

/// Geodesic distance.
pub fn distance(a: &MetricObject, b: &MetricObject) -> Result<f64> {
    same_space(a, b)?;
    match a.space {
        Space::CompositionalSphere { .. } => Ok(sphere::distance(&a.data, &b.data)),
        Space::Euclidean { .. } | Space::NetworkLaplacian { .. } => Ok(a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()),
        _ => {
            let (ea, eb) = (embed(a)?, embed(b)?);
            Ok(a.space.hilbert_distance(&ea, &eb))
        }
    }
}

/// Point `gamma(t)` on the unique geodesic from `a` (t = 0) to `b` (t = 1).
pub fn geodesic_eval(a: &MetricObject, b: &MetricObject, t: f64) -> Result<MetricObject> {
    same_space(a, b)?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidConfig(format!(
            "geodesic parameter {t} outside [0, 1]"
        )));
    }
    if t == 0.0 {
        return Ok(a.clone());
    }
    if t == 1.0 {
        return Ok(b.clone());
    }
    match a.space {
        Space::CompositionalSphere { .. } => {
            let z = sphere::slerp(&a.data, &b.data, t)?;
            Ok(MetricObject::from_parts(a.space, clean_sphere(z)))
        }
        _ => {
            let (ea, eb) = (embed(a)?, embed(b)?);
            let mix: Vec<f64> = ea
                .iter()
                .zip(&eb)
                .map(|(x, y)| (1.0 - t) * x + t * y)
                .collect();
            // Convex image: projection only absorbs rounding.
            Ok(inverse_embed_projected(&mix, &a.space)?.0)
        }
    }
}

/// Geodesic transport map `Gamma_{a,b}(w)`.
///
/// Embeddable spaces translate by `Psi(b) - Psi(a)` in the embedding and
/// project back onto the feasible set. The sphere parallel-transports
/// `Log_a(b)` to `w` and applies `Exp_w`.
pub fn transport_apply(
    a: &MetricObject,
    b: &MetricObject,
    w: &MetricObject,
) -> Result<MetricObject> {
    same_space(a, b)?;
    same_space(a, w)?;
    match a.space {
        Space::CompositionalSphere { .. } => {
            let v = sphere::log(&a.data, &b.data)?;
            let moved = sphere::parallel_transport(&a.data, &w.data, &v)?;
            let z = sphere::exp(&w.data, &moved);
            let (proj, worst) = sphere::project_orthant(&z);
            if worst < -1e-12 {
                return Err(Error::TransportOutOfSpace(format!(
                    "sphere image has coordinate {worst:.3e} < 0"
                )));
            }
            Ok(MetricObject::from_parts(a.space, proj))
        }
        _ => {
            let (ea, eb, ew) = (embed(a)?, embed(b)?, embed(w)?);
            let shifted: Vec<f64> = ew
                .iter()
                .zip(ea.iter().zip(&eb))
                .map(|(x, (p, q))| x + q - p)
                .collect();
            Ok(inverse_embed_projected(&shifted, &a.space)?.0)
        }
    }
}

/// Distance between the geodesic classes of two effects, measured by where
/// their transport maps send the reference point `omega`.
pub fn quotient_distance_dg(
    e1: &GeodesicEffect,
    e2: &GeodesicEffect,
    omega: &MetricObject,
) -> Result<f64> {
    let p1 = transport_apply(&e1.start, &e1.end, omega)?;
    let p2 = transport_apply(&e2.start, &e2.end, omega)?;
    distance(&p1, &p2)
}

/// Isometric Hilbert embedding `Psi`.
pub fn embed(a: &MetricObject) -> Result<Vec<f64>> {
    match a.space {
        Space::CompositionalSphere { .. } => Err(Error::EmbeddingUnavailable(a.space.to_string())),
        Space::Spd { dim: m, metric, .. } => {
            let s = matrix::symmetrize(m, &a.data);
            let e = match metric {
                SpdMetric::Frobenius => return Ok(a.data.clone()),
                SpdMetric::Power(p) => matrix::spectral_map(&s, |l| l.powf(p)),
                SpdMetric::LogEuclidean => matrix::spectral_map(&s, f64::ln),
                SpdMetric::LogCholesky => matrix::log_cholesky(&s).ok_or_else(|| {
                    Error::InvalidObject("matrix is not positive definite".into())
                })?,
            };
            Ok(matrix::to_row_major(&e))
        }
        _ => Ok(a.data.clone()),
    }
}

/// Metric projection of a Hilbert point onto the embedded image `Psi(M)`.
/// Returns the projected vector and whether it moved beyond rounding.
pub fn project_embedded(space: &Space, v: &[f64]) -> Result<(Vec<f64>, bool)> {
    if v.len() != space.payload_len() {
        return Err(Error::ShapeMismatch {
            left: format!("{:?}", space.shape()),
            right: format!("vector of length {}", v.len()),
        });
    }
    if let Some(index) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let out = match *space {
        Space::CompositionalSphere { .. } => {
            return Err(Error::EmbeddingUnavailable(space.to_string()))
        }
        Space::Euclidean { .. } | Space::FunctionalL2 { .. } => v.to_vec(),
        Space::NetworkLaplacian { nodes: m, w_max } => {
            let mut l = vec![0.0; m * m];
            for i in 0..m {
                let mut deg = 0.0;
                for j in 0..m {
                    if i == j {
                        continue;
                    }
                    let mut x = 0.5 * (v[i * m + j] + v[j * m + i]);
                    x = x.min(0.0);
                    if let Some(w) = w_max {
                        x = x.max(-w);
                    }
                    l[i * m + j] = x;
                    deg -= x;
                }
                l[i * m + i] = deg;
            }
            l
        }
        Space::Spd {
            dim: m,
            metric,
            eps_pd,
        } => {
            let s = matrix::symmetrize(m, v);
            let floored = match metric {
                SpdMetric::Frobenius => matrix::floor_spectrum(&s, 2.0 * eps_pd).0,
                SpdMetric::Power(p) => matrix::floor_spectrum(&s, (2.0 * eps_pd).powf(p)).0,
                SpdMetric::LogEuclidean => matrix::floor_spectrum(&s, (2.0 * eps_pd).ln()).0,
                SpdMetric::LogCholesky => {
                    let mut lc = s.clone();
                    for i in 0..m {
                        for j in 0..m {
                            lc[(i, j)] = if j > i { 0.0 } else { v[i * m + j] };
                        }
                    }
                    lc
                }
            };
            matrix::to_row_major(&floored)
        }
        Space::Wasserstein1D { grid_len, support } => {
            let w = trapezoid_weights(grid_len, 1.0);
            let mut q = isotonic::pava(v, &w);
            if let Some((lo, hi)) = support {
                q.iter_mut().for_each(|x| *x = x.clamp(lo, hi));
            }
            q
        }
    };
    let residual = space.hilbert_distance(&out, v);
    let scale = 1.0 + space.hilbert_norm_sq(v).sqrt();
    Ok((out, residual > 1e-10 * scale))
}

/// Inverse embedding, with projection onto the feasible set when needed.
/// The flag reports whether the projection moved the point.
pub fn inverse_embed_projected(v: &[f64], space: &Space) -> Result<(MetricObject, bool)> {
    let (proj, moved) = project_embedded(space, v)?;
    let data = match *space {
        Space::Spd { dim: m, metric, .. } => {
            let e = matrix::from_row_major(m, &proj);
            let s = match metric {
                SpdMetric::Frobenius => return Ok((MetricObject::from_parts(*space, proj), moved)),
                SpdMetric::Power(p) => matrix::spectral_map(&e, |l| l.max(0.0).powf(1.0 / p)),
                SpdMetric::LogEuclidean => matrix::spectral_map(&e, f64::exp),
                SpdMetric::LogCholesky => matrix::from_log_cholesky(&e),
            };
            matrix::to_row_major(&s)
        }
        _ => proj,
    };
    Ok((MetricObject::from_parts(*space, data), moved))
}

/// Strict inverse embedding: fails with `InverseInfeasible` when `v` is not
/// in the embedded image.
pub fn inverse_embed(v: &[f64], space: &Space) -> Result<MetricObject> {
    let (obj, moved) = inverse_embed_projected(v, space)?;
    if moved {
        let (proj, _) = project_embedded(space, v)?;
        return Err(Error::InverseInfeasible {
            residual: space.hilbert_distance(&proj, v),
        });
    }
    Ok(obj)
}

/// Riemannian log map at `omega`, in ambient coordinates.
pub fn log_map(omega: &MetricObject, a: &MetricObject) -> Result<Vec<f64>> {
    same_space(omega, a)?;
    match omega.space {
        Space::CompositionalSphere { .. } => sphere::log(&omega.data, &a.data),
        Space::Euclidean { .. } => Ok(a.data.iter().zip(&omega.data).map(|(x, o)| x - o).collect()),
        _ => Err(Error::LogExpUnavailable(omega.space.to_string())),
    }
}

/// Riemannian exp map at `omega`. Fails with `ExpOutOfDomain` if the tangent
/// vector is too long or its image leaves the positive orthant.
pub fn exp_map(omega: &MetricObject, v: &[f64]) -> Result<MetricObject> {
    let (obj, projected) = exp_map_projected(omega, v)?;
    if projected {
        return Err(Error::ExpOutOfDomain(
            "image leaves the positive orthant".into(),
        ));
    }
    Ok(obj)
}

/// Exp map that projects orthant violations back onto the sphere's positive
/// orthant instead of failing; the flag reports whether that happened.
/// Tangent vectors of norm `>= pi` are always rejected.
pub fn exp_map_projected(omega: &MetricObject, v: &[f64]) -> Result<(MetricObject, bool)> {
    if v.len() != omega.data.len() {
        return Err(Error::ShapeMismatch {
            left: format!("{:?}", omega.space.shape()),
            right: format!("tangent of length {}", v.len()),
        });
    }
    match omega.space {
        Space::CompositionalSphere { .. } => {
            let n = sphere::norm(v);
            if n >= std::f64::consts::PI {
                return Err(Error::ExpOutOfDomain(format!(
                    "tangent norm {n:.4} is at least pi"
                )));
            }
            let tangent = sphere::project_tangent(&omega.data, v);
            let z = sphere::exp(&omega.data, &tangent);
            let (proj, worst) = sphere::project_orthant(&z);
            Ok((MetricObject::from_parts(omega.space, proj), worst < -1e-12))
        }
        Space::Euclidean { .. } => Ok((
            MetricObject::from_parts(
                omega.space,
                omega.data.iter().zip(v).map(|(o, x)| o + x).collect(),
            ),
            false,
        )),
        _ => Err(Error::LogExpUnavailable(omega.space.to_string())),
    }
}

fn clean_sphere(z: Vec<f64>) -> Vec<f64> {
    sphere::project_orthant(&z).0
}
