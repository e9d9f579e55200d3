//! Local-linear smoothing weights.

use serde::Serialize;

use super::kernel::{KernelKind, KernelSide, KernelSpec};
use crate::error::{Error, Result};

/// Windows whose standardized spread falls to this level are degenerate.
pub const DEGENERATE_SIGMA2: f64 = 1e-14;

/// Signed local-linear weights with the moment terms that produced them.
///
/// `moments[k]` is `n_t^-1 sum_i K_h(R_i - c) (R_i - c)^k` with
/// `K_h(x) = k(x / h) / h`, and `weights[i]` is the signed weight of the
/// `i`-th input, zero outside the kernel window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightProfile {
    pub side: KernelSide,
    pub center: f64,
    pub bandwidth: f64,
    pub side_count: usize,
    pub moments: [f64; 3],
    pub sigma2: f64,
    pub weights: Vec<f64>,
}

impl WeightProfile {
    /// Weights divided by the side count; they sum to one.
    pub fn normalized(&self) -> Vec<f64> {
        let n = self.side_count as f64;
        self.weights.iter().map(|w| w / n).collect()
    }

    /// Number of observations with a nonzero weight.
    pub fn support(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }
}

/// Local-linear fit over a set of offsets `x_i = R_i - centre`.
#[derive(Debug, Clone)]
pub(crate) struct LocalLinear {
    pub kernel: Vec<f64>,
    pub offsets: Vec<f64>,
    /// `S_k = sum_i K_i x_i^k`.
    pub sums: [f64; 3],
    pub det: f64,
    pub support: usize,
    pub std_sigma2: f64,
}

impl LocalLinear {
    pub fn fit(offsets: Vec<f64>, h: f64, kind: KernelKind, side: KernelSide) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {h}"
            )));
        }
        let spec = KernelSpec::new(kind, side);
        let mut kernel = Vec::with_capacity(offsets.len());
        let mut sums = [0.0; 3];
        let mut support = 0usize;
        let mut first = None;
        let mut distinct = false;
        for &x in &offsets {
            let k = super::kernel::kernel_eval(spec, x / h) / h;
            if k > 0.0 {
                support += 1;
                match first {
                    None => first = Some(x),
                    Some(f) if f != x => distinct = true,
                    _ => {}
                }
                sums[0] += k;
                sums[1] += k * x;
                sums[2] += k * x * x;
            }
            kernel.push(k);
        }
        let det = sums[0] * sums[2] - sums[1] * sums[1];
        let std_sigma2 = if support == 0 {
            0.0
        } else {
            det / (support as f64 * support as f64)
        };
        if !distinct || !(std_sigma2 > DEGENERATE_SIGMA2) {
            return Err(Error::DegenerateWindow {
                side,
                sigma2: std_sigma2,
                support,
            });
        }
        Ok(Self {
            kernel,
            offsets,
            sums,
            det,
            support,
            std_sigma2,
        })
    }

    /// Weights reproducing the intercept; they sum to one.
    pub fn intercept_weights(&self) -> Vec<f64> {
        let [_, s1, s2] = self.sums;
        self.kernel
            .iter()
            .zip(&self.offsets)
            .map(|(k, x)| {
                if *k > 0.0 {
                    k * (s2 - s1 * x) / self.det
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Weights reproducing the slope; they sum to zero.
    pub fn slope_weights(&self) -> Vec<f64> {
        let [s0, s1, _] = self.sums;
        self.kernel
            .iter()
            .zip(&self.offsets)
            .map(|(k, x)| {
                if *k > 0.0 {
                    k * (s0 * x - s1) / self.det
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Local-linear weights at `c` for the observations `r_values`, with moments
/// normalized by the number of observations on the kernel's side of `c`.
pub fn compute_weights(
    r_values: &[f64],
    c: f64,
    h: f64,
    spec: KernelSpec,
) -> Result<WeightProfile> {
    if let Some(index) = r_values.iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let side_count = r_values
        .iter()
        .filter(|&&r| spec.side.admits(r - c))
        .count();
    let offsets: Vec<f64> = r_values.iter().map(|r| r - c).collect();
    let fit = LocalLinear::fit(offsets, h, spec.kind, spec.side)?;
    let n = side_count as f64;
    let moments = fit.sums.map(|s| s / n);
    let weights = fit.intercept_weights().into_iter().map(|w| w * n).collect();
    Ok(WeightProfile {
        side: spec.side,
        center: c,
        bandwidth: h,
        side_count,
        moments,
        sigma2: moments[0] * moments[2] - moments[1] * moments[1],
        weights,
    })
}
