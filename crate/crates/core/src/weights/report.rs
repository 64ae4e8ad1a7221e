use std::fmt;

use crate::grid::{CellBox, Grid};

/// Growth factor per added scale that marks a trace as diverging.
pub const DIVERGENCE_RATIO: f64 = 2.0;
/// Largest final growth factor still read as a stable trace.
pub const STABLE_RATIO: f64 = 1.25;
/// Largest share of skipped cubes a valid weight may produce.
pub const MAX_SKIPPED_SHARE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceVerdict {
    /// Fewer than three depths.
    Insufficient,
    Stable,
    Diverging,
    /// Neither stable nor clearly diverging.
    Undecided,
}

impl fmt::Display for TraceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TraceVerdict::Insufficient => "insufficient",
            TraceVerdict::Stable => "stable",
            TraceVerdict::Diverging => "diverging",
            TraceVerdict::Undecided => "undecided",
        };
        f.write_str(s)
    }
}

/// Values of one quantity on successively refined grids.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTrace {
    /// `(depth, value)`, depth = log2 of cells per axis.
    pub points: Vec<(u32, f64)>,
    /// Power the traced constants were raised to before recording.
    pub power: f64,
}

impl Default for RefinementTrace {
    fn default() -> Self {
        RefinementTrace {
            points: Vec::new(),
            power: 1.0,
        }
    }
}

impl RefinementTrace {
    pub fn push(&mut self, depth: u32, value: f64) {
        self.points.push((depth, value));
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }

    /// Ratios of consecutive values.
    pub fn ratios(&self) -> Vec<f64> {
        self.points.windows(2).map(|w| w[1].1 / w[0].1).collect()
    }

    /// Diverging when the last two steps both grow by `≥ ×2`; stable when the last
    /// step grows by at most `×1.25`.
    pub fn verdict(&self) -> TraceVerdict {
        if self.points.len() < 3 {
            return TraceVerdict::Insufficient;
        }
        if self.points.iter().any(|p| p.1.is_infinite()) {
            return TraceVerdict::Diverging;
        }
        let r = self.ratios();
        let k = r.len();
        if r[k - 1] >= DIVERGENCE_RATIO && r[k - 2] >= DIVERGENCE_RATIO {
            TraceVerdict::Diverging
        } else if r[k - 1].is_nan() || r[k - 1] <= STABLE_RATIO {
            // NaN: 0/0 from an identically vanishing trace
            TraceVerdict::Stable
        } else {
            TraceVerdict::Undecided
        }
    }
}

/// Result of a supremum over a finite cube family.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightConstantReport {
    pub check: String,
    pub value: f64,
    pub argsup: Option<CellBox>,
    pub family: String,
    pub depth: u32,
    pub evaluated: usize,
    pub skipped: usize,
    pub trace: RefinementTrace,
}

impl WeightConstantReport {
    pub(crate) fn new(check: &str, family: String, grid: Grid) -> Self {
        WeightConstantReport {
            check: check.to_string(),
            value: 0.0,
            argsup: None,
            family,
            depth: grid.cells_per_axis().trailing_zeros(),
            evaluated: 0,
            skipped: 0,
            trace: RefinementTrace::default(),
        }
    }

    pub(crate) fn offer(&mut self, b: CellBox, v: Option<f64>) {
        match v {
            Some(v) if !v.is_nan() => {
                self.evaluated += 1;
                if self.argsup.is_none() || v > self.value {
                    self.value = v;
                    self.argsup = Some(b);
                }
            }
            _ => self.skipped += 1,
        }
    }

    /// At most 1% of the tested cubes were degenerate.
    pub fn is_valid(&self) -> bool {
        let total = self.evaluated + self.skipped;
        total > 0 && (self.skipped as f64) <= MAX_SKIPPED_SHARE * total as f64
    }

    /// Invalid weights count as infinite constants.
    pub fn effective_value(&self) -> f64 {
        if self.is_valid() {
            self.value
        } else {
            f64::INFINITY
        }
    }

    pub fn verdict(&self) -> TraceVerdict {
        if !self.is_valid() || self.value.is_infinite() {
            return TraceVerdict::Diverging;
        }
        self.trace.verdict()
    }

    pub fn diverging(&self) -> bool {
        self.verdict() == TraceVerdict::Diverging
    }

    /// Builds a trace by recomputing the report on each grid; the returned report is
    /// the one for the finest grid.
    pub fn traced(
        grids: &[Grid],
        compute: impl FnMut(Grid) -> crate::Result<WeightConstantReport>,
    ) -> crate::Result<WeightConstantReport> {
        Self::traced_powered(grids, 1.0, compute)
    }

    /// As [`traced`](Self::traced), recording `value^power`. With `power = q` a
    /// two-exponent constant of `w` is traced as the one-exponent constant of `w^q`.
    pub fn traced_powered(
        grids: &[Grid],
        power: f64,
        mut compute: impl FnMut(Grid) -> crate::Result<WeightConstantReport>,
    ) -> crate::Result<WeightConstantReport> {
        let mut last: Option<WeightConstantReport> = None;
        let mut trace = RefinementTrace {
            points: Vec::new(),
            power,
        };
        for g in grids {
            let r = compute(*g)?;
            trace.push(r.depth, r.effective_value().powf(power));
            last = Some(r);
        }
        let mut r = last.ok_or_else(|| crate::Error::InvalidArgument("no grids to trace".into()))?;
        r.trace = trace;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(vals: &[f64]) -> RefinementTrace {
        RefinementTrace {
            points: vals.iter().enumerate().map(|(i, &v)| (i as u32, v)).collect(),
            power: 1.0,
        }
    }

    #[test]
    fn verdicts() {
        assert_eq!(trace(&[1.0, 2.0]).verdict(), TraceVerdict::Insufficient);
        assert_eq!(trace(&[1.0, 2.0, 4.0]).verdict(), TraceVerdict::Diverging);
        assert_eq!(trace(&[1.0, 1.1, 1.2]).verdict(), TraceVerdict::Stable);
        assert_eq!(trace(&[1.0, 1.5, 3.0]).verdict(), TraceVerdict::Undecided);
        assert_eq!(trace(&[0.0, 0.0, 0.0]).verdict(), TraceVerdict::Stable);
    }

    #[test]
    fn offer_tracks_argsup_and_skips() {
        let g = Grid::new(1, 1, 1).unwrap();
        let mut r = WeightConstantReport::new("x", "f".into(), g);
        r.offer(CellBox::new(1, [0, 0], 1), Some(2.0));
        r.offer(CellBox::new(1, [1, 0], 1), Some(1.0));
        r.offer(CellBox::new(1, [2, 0], 1), None);
        assert_eq!(r.value, 2.0);
        assert_eq!(r.argsup.unwrap().lo[0], 0);
        assert_eq!(r.skipped, 1);
        assert!(!r.is_valid());
    }
}
