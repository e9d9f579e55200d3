//! Compactly supported smoothing kernels with one-sided masks.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    #[default]
    Triangular,
    Uniform,
}

impl KernelKind {
    /// Unmasked kernel `k(u)`, supported on `[-1, 1]`.
    #[inline]
    pub fn profile(self, u: f64) -> f64 {
        let a = u.abs();
        if !(a <= 1.0) {
            return 0.0;
        }
        match self {
            KernelKind::Triangular => 1.0 - a,
            KernelKind::Uniform => 1.0,
        }
    }
}

impl std::str::FromStr for KernelKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "triangular" | "tri" => Ok(KernelKind::Triangular),
            "uniform" | "rect" => Ok(KernelKind::Uniform),
            other => Err(crate::error::Error::InvalidConfig(format!(
                "unknown kernel `{other}`"
            ))),
        }
    }
}

/// Which side of the centre a kernel sees. `Left` keeps `x < 0`, `Right`
/// keeps `x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSide {
    Left,
    Right,
    TwoSided,
}

impl fmt::Display for KernelSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelSide::Left => "left",
            KernelSide::Right => "right",
            KernelSide::TwoSided => "two-sided",
        })
    }
}

impl KernelSide {
    #[inline]
    pub fn admits(self, x: f64) -> bool {
        match self {
            KernelSide::Left => x < 0.0,
            KernelSide::Right => x >= 0.0,
            KernelSide::TwoSided => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub side: KernelSide,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, side: KernelSide) -> Self {
        Self { kind, side }
    }
}

/// Masked kernel value at `x`.
pub fn kernel_eval(spec: KernelSpec, x: f64) -> f64 {
    if !spec.side.admits(x) {
        return 0.0;
    }
    spec.kind.profile(x)
}
