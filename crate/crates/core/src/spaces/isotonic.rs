//! Weighted pool-adjacent-violators for non-decreasing least squares.

/// Returns the non-decreasing sequence minimizing `sum_i w_i (x_i - y_i)^2`.
///
/// Weights must be positive. Blocks are merged left to right with a stack,
/// so the whole fit is linear in the input length.
pub fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    debug_assert_eq!(y.len(), w.len());
    // (weighted mean, total weight, run length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        let mut cur = (yi, wi, 1usize);
        while let Some(&(m, tw, len)) = blocks.last() {
            if m <= cur.0 {
                break;
            }
            blocks.pop();
            let total = tw + cur.1;
            cur = ((m * tw + cur.0 * cur.1) / total, total, len + cur.2);
        }
        blocks.push(cur);
    }
    let mut out = Vec::with_capacity(y.len());
    for (m, _, len) in blocks {
        out.extend(std::iter::repeat(m).take(len));
    }
    out
}

pub fn is_non_decreasing(y: &[f64], tol: f64) -> bool {
    y.windows(2).all(|p| p[1] >= p[0] - tol)
}
