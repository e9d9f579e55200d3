//! `--space` descriptors and the CSV flattening convention for each space.

use std::fmt;
use std::str::FromStr;

use geordd::spaces::DEFAULT_EPS_PD;
use geordd::{Error, MetricObject, Result, Space, SpdMetric};

/// How a CSV row's payload columns become an object.
///
/// `simplex` rows hold raw shares that are square-root mapped onto the
/// sphere; `sphere` rows hold the sphere coordinates themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceArg {
    Euclid,
    L2 { domain: (f64, f64) },
    Simplex,
    Sphere,
    Laplacian { w_max: Option<f64> },
    Spd { metric: SpdMetric },
    Wass { support: Option<(f64, f64)> },
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let bad = || Error::InvalidConfig(format!("{what} must look like `a,b` with a < b, got `{s}`"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

impl FromStr for SpaceArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        Ok(match (head.trim().to_ascii_lowercase().as_str(), tail) {
            ("euclid" | "euclidean", None) => SpaceArg::Euclid,
            ("l2", None) => SpaceArg::L2 { domain: (0.0, 1.0) },
            ("l2", Some(t)) => SpaceArg::L2 {
                domain: parse_pair(t, "l2 domain")?,
            },
            ("simplex", None) => SpaceArg::Simplex,
            ("sphere", None) => SpaceArg::Sphere,
            ("laplacian", None) => SpaceArg::Laplacian { w_max: None },
            ("laplacian", Some(t)) => SpaceArg::Laplacian {
                w_max: Some(t.trim().parse().map_err(|_| {
                    Error::InvalidConfig(format!("laplacian weight bound `{t}` is not a number"))
                })?),
            },
            ("spd", None) => SpaceArg::Spd {
                metric: SpdMetric::Frobenius,
            },
            ("spd", Some(t)) => SpaceArg::Spd { metric: t.parse()? },
            ("wass", None) => SpaceArg::Wass { support: None },
            ("wass", Some(t)) => SpaceArg::Wass {
                support: Some(parse_pair(t, "wasserstein support")?),
            },
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown space `{s}`; expected euclid, l2, simplex, sphere, laplacian, spd:<variant> or wass"
                )))
            }
        })
    }
}

impl fmt::Display for SpaceArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceArg::Euclid => write!(f, "euclid"),
            SpaceArg::L2 { domain: (a, b) } => write!(f, "l2:{a},{b}"),
            SpaceArg::Simplex => write!(f, "simplex"),
            SpaceArg::Sphere => write!(f, "sphere"),
            SpaceArg::Laplacian { w_max: None } => write!(f, "laplacian"),
            SpaceArg::Laplacian { w_max: Some(w) } => write!(f, "laplacian:{w}"),
            SpaceArg::Spd { metric } => write!(f, "spd:{metric}"),
            SpaceArg::Wass { support: None } => write!(f, "wass"),
            SpaceArg::Wass {
                support: Some((a, b)),
            } => write!(f, "wass:{a},{b}"),
        }
    }
}

fn square_side(cols: usize, what: &str) -> Result<usize> {
    let m = (cols as f64).sqrt().round() as usize;
    if m == 0 || m * m != cols {
        return Err(Error::InvalidConfig(format!(
            "{what} needs a square number of payload columns, got {cols}"
        )));
    }
    Ok(m)
}

impl SpaceArg {
    /// Space of objects with `cols` payload columns.
    pub fn space(&self, cols: usize) -> Result<Space> {
        if cols == 0 {
            return Err(Error::InvalidConfig("no payload columns".into()));
        }
        Ok(match *self {
            SpaceArg::Euclid => Space::Euclidean { dim: cols },
            SpaceArg::L2 { domain } => Space::FunctionalL2 {
                grid_len: cols,
                domain,
            },
            SpaceArg::Simplex | SpaceArg::Sphere => Space::CompositionalSphere { dim: cols },
            SpaceArg::Laplacian { w_max } => Space::NetworkLaplacian {
                nodes: square_side(cols, "laplacian")?,
                w_max,
            },
            SpaceArg::Spd { metric } => Space::Spd {
                dim: square_side(cols, "spd")?,
                metric,
                eps_pd: DEFAULT_EPS_PD,
            },
            SpaceArg::Wass { support } => Space::Wasserstein1D {
                grid_len: cols,
                support,
            },
        })
    }

    /// Object from one row's payload.
    pub fn object(&self, space: Space, values: Vec<f64>) -> Result<MetricObject> {
        match self {
            SpaceArg::Simplex => MetricObject::composition_from_shares(&values),
            _ => MetricObject::new(space, values),
        }
    }

    /// Descriptor under which `space` round-trips exactly through CSV.
    pub fn for_space(space: &Space) -> Self {
        match *space {
            Space::Euclidean { .. } => SpaceArg::Euclid,
            Space::FunctionalL2 { domain, .. } => SpaceArg::L2 { domain },
            Space::CompositionalSphere { .. } => SpaceArg::Sphere,
            Space::NetworkLaplacian { w_max, .. } => SpaceArg::Laplacian { w_max },
            Space::Spd { metric, .. } => SpaceArg::Spd { metric },
            Space::Wasserstein1D { support, .. } => SpaceArg::Wass { support },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_flavour() {
        for s in [
            "euclid",
            "l2",
            "l2:0,24",
            "simplex",
            "sphere",
            "laplacian",
            "laplacian:3",
            "spd:frobenius",
            "spd:log_cholesky",
            "spd:power:0.5",
            "wass",
            "wass:0,1",
        ] {
            let a: SpaceArg = s.parse().unwrap();
            let back: SpaceArg = a.to_string().parse().unwrap();
            assert_eq!(a, back, "{s}");
        }
        assert!("hyperbolic".parse::<SpaceArg>().is_err());
        assert!("l2:1,0".parse::<SpaceArg>().is_err());
    }

    #[test]
    fn shapes_from_column_counts() {
        let lap = SpaceArg::Laplacian { w_max: None };
        assert_eq!(lap.space(9).unwrap().shape(), vec![3, 3]);
        assert!(lap.space(8).is_err());
    }

    #[test]
    fn shares_land_on_the_sphere() {
        let a = SpaceArg::Simplex;
        let sp = a.space(3).unwrap();
        let o = a.object(sp, vec![0.44, 0.364, 0.196]).unwrap();
        let norm: f64 = o.data().iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-10);
        assert!((o.data()[0] - 0.44f64.sqrt()).abs() < 1e-10);
    }
}
