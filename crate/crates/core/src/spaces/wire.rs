//! JSON wire form of [`MetricObject`]:
//! `{"space": "...", "variant": ..., "shape": [...], "data": [...]}` plus
//! optional geometry parameters.

use serde::{Deserialize, Serialize};

use super::{MetricObject, Space, SpaceTag, SpdMetric, DEFAULT_EPS_PD};
use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireObject {
    pub space: SpaceTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<SpdMetric>,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_pd: Option<f64>,
}

impl WireObject {
    pub fn to_space(&self) -> Result<Space, Error> {
        let square = |what: &str| -> Result<usize, Error> {
            match self.shape.as_slice() {
                [a, b] if a == b => Ok(*a),
                _ => Err(Error::InvalidObject(format!(
                    "{what} needs a square shape, got {:?}",
                    self.shape
                ))),
            }
        };
        let flat = || -> Result<usize, Error> {
            match self.shape.as_slice() {
                [n] => Ok(*n),
                _ => Err(Error::InvalidObject(format!(
                    "expected a one-dimensional shape, got {:?}",
                    self.shape
                ))),
            }
        };
        Ok(match self.space {
            SpaceTag::Euclidean => Space::Euclidean { dim: flat()? },
            SpaceTag::FunctionalL2 => Space::FunctionalL2 {
                grid_len: flat()?,
                domain: self.domain.unwrap_or((0.0, 1.0)),
            },
            SpaceTag::CompositionalSphere => Space::CompositionalSphere { dim: flat()? },
            SpaceTag::NetworkLaplacian => Space::NetworkLaplacian {
                nodes: square("laplacian")?,
                w_max: self.w_max,
            },
            SpaceTag::SpdMatrix => Space::Spd {
                dim: square("SPD matrix")?,
                metric: self.variant.unwrap_or(SpdMetric::Frobenius),
                eps_pd: self.eps_pd.unwrap_or(DEFAULT_EPS_PD),
            },
            SpaceTag::Wasserstein1D => Space::Wasserstein1D {
                grid_len: flat()?,
                support: self.support,
            },
        })
    }
}

impl TryFrom<WireObject> for MetricObject {
    type Error = Error;

    fn try_from(w: WireObject) -> Result<Self, Error> {
        let space = w.to_space()?;
        MetricObject::new(space, w.data)
    }
}

impl From<MetricObject> for WireObject {
    fn from(o: MetricObject) -> Self {
        let space = *o.space();
        let mut w = WireObject {
            space: space.tag(),
            variant: space.metric_variant(),
            shape: space.shape(),
            data: o.into_data(),
            domain: None,
            support: None,
            w_max: None,
            eps_pd: None,
        };
        match space {
            Space::FunctionalL2 { domain, .. } => w.domain = Some(domain),
            Space::Wasserstein1D { support, .. } => w.support = support,
            Space::NetworkLaplacian { w_max, .. } => w.w_max = w_max,
            Space::Spd { eps_pd, .. } => w.eps_pd = Some(eps_pd),
            _ => {}
        }
        w
    }
}
