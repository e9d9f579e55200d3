//! Validated regression-discontinuity samples.

use crate::error::{Error, Result};
use crate::frechet::Side;
use crate::spaces::{MetricObject, Space};

/// Minimum number of observations per side for automatic bandwidths.
pub const MIN_PER_SIDE: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub r: f64,
    pub y: MetricObject,
    /// Treatment received.
    pub t: Option<bool>,
    /// Assignment `1{R >= c}` for fuzzy designs.
    pub z: Option<bool>,
}

impl Record {
    pub fn new(r: f64, y: MetricObject) -> Self {
        Self {
            r,
            y,
            t: None,
            z: None,
        }
    }

    pub fn with_treatment(mut self, t: bool) -> Self {
        self.t = Some(t);
        self
    }

    pub fn with_assignment(mut self, z: bool) -> Self {
        self.z = Some(z);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RddSample {
    records: Vec<Record>,
    cutoff: f64,
    space: Space,
}

impl RddSample {
    /// Checks that running values are finite, outcomes share one space, and
    /// the `t` and `z` columns are either present on every row or on none.
    pub fn new(records: Vec<Record>, cutoff: f64) -> Result<Self> {
        if !cutoff.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "cutoff must be finite, got {cutoff}"
            )));
        }
        let first = records.first().ok_or(Error::EmptyInput)?;
        let space = *first.y.space();
        let has_t = first.t.is_some();
        let has_z = first.z.is_some();
        for (row, rec) in records.iter().enumerate() {
            if !rec.r.is_finite() {
                return Err(Error::InvariantViolation {
                    row,
                    detail: format!("running variable is not finite ({})", rec.r),
                });
            }
            if space.ensure_same(rec.y.space()).is_err() {
                return Err(Error::MixedSpaces { row });
            }
            if rec.t.is_some() != has_t || rec.z.is_some() != has_z {
                return Err(Error::InvariantViolation {
                    row,
                    detail: "treatment/assignment columns must be present on every row or none"
                        .into(),
                });
            }
        }
        Ok(Self {
            records,
            cutoff,
            space,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn running(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r).collect()
    }

    pub fn outcomes(&self) -> Vec<MetricObject> {
        self.records.iter().map(|r| r.y.clone()).collect()
    }

    /// Counts `(R < c, R >= c)`.
    pub fn side_counts(&self) -> (usize, usize) {
        let below = self.records.iter().filter(|r| r.r < self.cutoff).count();
        (below, self.records.len() - below)
    }

    pub fn side_of(&self, r: f64) -> Side {
        Side::of(r, self.cutoff)
    }

    pub fn has_treatment(&self) -> bool {
        self.records.first().is_some_and(|r| r.t.is_some())
    }

    pub fn has_assignment(&self) -> bool {
        self.records.first().is_some_and(|r| r.z.is_some())
    }

    /// Fails unless every present `t` equals `1{R >= c}`.
    pub fn check_sharp(&self) -> Result<()> {
        for (row, rec) in self.records.iter().enumerate() {
            if let Some(t) = rec.t {
                if t != (rec.r >= self.cutoff) {
                    return Err(Error::InvariantViolation {
                        row,
                        detail: format!(
                            "sharp design requires t = 1{{r >= {}}}, got t = {} at r = {}",
                            self.cutoff, t as u8, rec.r
                        ),
                    });
                }
            }
        }
        Ok(())
    }

    /// Fails with `InsufficientData` unless both sides hold `min` records.
    pub fn require_per_side(&self, min: usize) -> Result<()> {
        let (below, above) = self.side_counts();
        if below < min || above < min {
            return Err(Error::InsufficientData { below, above });
        }
        Ok(())
    }

    /// Applies `r -> scale * r + shift` to the running variable and cutoff.
    pub fn reparameterize(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidConfig("scale must be positive".into()));
        }
        let records = self
            .records
            .iter()
            .map(|rec| Record {
                r: scale * rec.r + shift,
                ..rec.clone()
            })
            .collect();
        Self::new(records, scale * self.cutoff + shift)
    }
}
