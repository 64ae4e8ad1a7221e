use std::fmt;
use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Fail,
    /// Recorded, never asserted.
    Measured,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Measured => "measured",
        })
    }
}

/// One line of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub quantity: String,
    /// Refinement depth (log2 of cells per axis), if the row belongs to a trace.
    pub depth: Option<u32>,
    pub value: f64,
    pub target: Option<f64>,
    pub status: Status,
    /// Asserted rows name the invariant they instantiate here.
    pub note: String,
}

impl ReportRow {
    pub fn measured(scenario: &str, quantity: impl Into<String>, value: f64) -> Self {
        ReportRow {
            scenario: scenario.to_string(),
            quantity: quantity.into(),
            depth: None,
            value,
            target: None,
            status: Status::Measured,
            note: String::new(),
        }
    }

    /// Passes iff `value <= target`.
    pub fn at_most(scenario: &str, quantity: impl Into<String>, value: f64, target: f64, invariant: &str) -> Self {
        Self::asserted(scenario, quantity, value, Some(target), value <= target, invariant)
    }

    /// Passes iff `value >= target`.
    pub fn at_least(scenario: &str, quantity: impl Into<String>, value: f64, target: f64, invariant: &str) -> Self {
        Self::asserted(scenario, quantity, value, Some(target), value >= target, invariant)
    }

    pub fn asserted(
        scenario: &str,
        quantity: impl Into<String>,
        value: f64,
        target: Option<f64>,
        ok: bool,
        invariant: &str,
    ) -> Self {
        ReportRow {
            scenario: scenario.to_string(),
            quantity: quantity.into(),
            depth: None,
            value,
            target,
            status: if ok { Status::Pass } else { Status::Fail },
            note: invariant.to_string(),
        }
    }

    pub fn at_depth(mut self, depth: u32) -> Self {
        self.depth = Some(depth);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        if self.note.is_empty() {
            self.note = note;
        } else {
            self.note = format!("{}; {note}", self.note);
        }
        self
    }

    pub fn failed(&self) -> bool {
        self.status == Status::Fail
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.12e}")
    }
}

/// Rows sorted by `(scenario, quantity)`; the sort is stable so traces keep
/// their depth order.
pub fn sorted_rows(rows: &[ReportRow]) -> Vec<ReportRow> {
    let mut v = rows.to_vec();
    v.sort_by(|a, b| (&a.scenario, &a.quantity, a.depth).cmp(&(&b.scenario, &b.quantity, b.depth)));
    v
}

/// The CSV text of a report.
pub fn render_report(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "quantity", "depth", "value", "target", "status", "note"])?;
    for r in sorted_rows(rows) {
        w.write_record([
            r.scenario.clone(),
            r.quantity.clone(),
            r.depth.map(|d| d.to_string()).unwrap_or_default(),
            fmt_value(r.value),
            r.target.map(fmt_value).unwrap_or_default(),
            r.status.to_string(),
            r.note.clone(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_report(rows: &[ReportRow], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, render_report(rows)?)?;
    Ok(())
}

/// True iff no row failed.
pub fn all_passed(rows: &[ReportRow]) -> bool {
    rows.iter().all(|r| !r.failed())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(render_report(&[]).unwrap(), "scenario,quantity,depth,value,target,status,note\n");
    }

    #[test]
    fn rows_are_sorted_and_output_is_deterministic() {
        let rows = vec![
            ReportRow::measured("b", "x", 1.0),
            ReportRow::at_most("a", "z", 1.0, 2.0, "bound"),
            ReportRow::at_least("a", "y", 1.0, 2.0, "bound").at_depth(3),
        ];
        let text = render_report(&rows).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("a,y,3,"));
        assert!(lines[1].contains(",fail,"));
        assert!(lines[2].starts_with("a,z,,"));
        assert!(lines[3].starts_with("b,x,"));
        assert_eq!(text, render_report(&rows).unwrap());
        assert!(!all_passed(&rows));
    }

    #[test]
    fn emit_writes_the_rendered_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let rows = vec![ReportRow::measured("s", "q", f64::INFINITY)];
        emit_report(&rows, &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), render_report(&rows).unwrap());
    }
}
