//! Plot-data tables: per-side fitted curves and bin-averaged outcomes.

use std::io::Write;

use geordd::spaces;
use geordd::{Error, KernelSide, LfrEngine, MetricObject, Result, Side};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub side: Side,
    pub r: f64,
    /// Fitted object in display coordinates (shares for compositions).
    pub values: Vec<f64>,
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { (b - a) / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |k| if k + 1 == n { b } else { a + step * k as f64 })
}

/// Local fits on `points` equally spaced values per side, each using only
/// that side's observations. The fit at the cutoff is the boundary limit.
/// Points with a degenerate window are left out.
pub fn fitted_curves(
    engine: &LfrEngine,
    c: f64,
    h0: f64,
    h1: f64,
    points: usize,
) -> Result<Vec<CurvePoint>> {
    let r = engine.sorted_r();
    let (lo, hi) = (r[0], r[r.len() - 1]);
    let mut out = Vec::new();
    for (side, range, h, a, b) in [
        (Side::Left, engine.below(c), h0, lo.min(c), c),
        (Side::Right, engine.at_or_above(c), h1, c, hi.max(c)),
    ] {
        for x in linspace(a, b, points) {
            match engine.fit_range(range.clone(), x, h, KernelSide::TwoSided) {
                Ok(fit) => out.push(CurvePoint {
                    side,
                    r: x,
                    values: fit.estimate.display_payload().into_owned(),
                }),
                Err(Error::DegenerateWindow { .. } | Error::NonPositiveWeightSum { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// Mean embedded outcome; ambient coordinates for the sphere.
    pub mean: Vec<f64>,
}

fn coordinates(y: &MetricObject) -> Result<Vec<f64>> {
    if y.space().embedding_available() {
        spaces::embed(y)
    } else {
        Ok(y.data().to_vec())
    }
}

/// `bins` equal-width bins per side; empty bins are omitted.
pub fn binned_means(engine: &LfrEngine, c: f64, bins: usize) -> Result<Vec<Bin>> {
    let r = engine.sorted_r();
    let (lo, hi) = (r[0], r[r.len() - 1]);
    let mut out = Vec::new();
    for (side, range, a, b) in [
        (Side::Left, engine.below(c), lo, c),
        (Side::Right, engine.at_or_above(c), c, hi),
    ] {
        if range.is_empty() {
            continue;
        }
        let width = (b - a) / bins as f64;
        let mut sums: Vec<Option<(usize, Vec<f64>)>> = vec![None; bins];
        for pos in range {
            let k = if width > 0.0 {
                (((r[pos] - a) / width) as usize).min(bins - 1)
            } else {
                0
            };
            let v = coordinates(engine.object(pos))?;
            match &mut sums[k] {
                Some((n, acc)) => {
                    *n += 1;
                    acc.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
                }
                slot => *slot = Some((1, v)),
            }
        }
        for (k, s) in sums.into_iter().enumerate() {
            if let Some((n, acc)) = s {
                out.push(Bin {
                    side,
                    lo: a + width * k as f64,
                    hi: if k + 1 == bins {
                        b
                    } else {
                        a + width * (k + 1) as f64
                    },
                    count: n,
                    mean: acc.into_iter().map(|x| x / n as f64).collect(),
                });
            }
        }
    }
    Ok(out)
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn write_curves<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let width = points.first().map_or(0, |p| p.values.len());
    let mut header = vec!["side".to_string(), "r".to_string()];
    header.extend((0..width).map(|k| format!("v{k}")));
    w.write_record(&header).map_err(csv_io)?;
    for p in points {
        let mut row = vec![p.side.to_string(), format!("{}", p.r)];
        row.extend(p.values.iter().map(|v| format!("{v}")));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_bins<W: Write>(bins: &[Bin], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let width = bins.first().map_or(0, |b| b.mean.len());
    let mut header = ["side", "lo", "hi", "count"].map(String::from).to_vec();
    header.extend((0..width).map(|k| format!("e{k}")));
    w.write_record(&header).map_err(csv_io)?;
    for b in bins {
        let mut row = vec![
            b.side.to_string(),
            format!("{}", b.lo),
            format!("{}", b.hi),
            b.count.to_string(),
        ];
        row.extend(b.mean.iter().map(|v| format!("{v}")));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}
