//! Machine-readable verification reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::opcalc::{MomentumPoint, ResidualReport};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    /// Counts towards the overall verdict.
    Check,
    /// Report-only; never changes the exit code.
    Finding,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub suite: String,
    pub id: String,
    pub kind: EntryKind,
    pub inputs: Value,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Entry {
    /// Passes iff `residual <= tolerance`.
    pub fn check(suite: &str, id: impl Into<String>, inputs: Value, residual: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.into(),
            id: id.into(),
            kind: EntryKind::Check,
            inputs,
            residual,
            tolerance,
            pass: residual <= tolerance,
            note: None,
        }
    }

    /// Passes iff `residual < tolerance`, for strict bounds.
    pub fn strict(suite: &str, id: impl Into<String>, inputs: Value, residual: f64, tolerance: f64) -> Self {
        let mut e = Self::check(suite, id, inputs, residual, tolerance);
        e.pass = residual < tolerance;
        e
    }

    pub fn finding(suite: &str, id: impl Into<String>, inputs: Value, residual: f64, tolerance: f64, note: impl Into<String>) -> Self {
        let mut e = Self::check(suite, id, inputs, residual, tolerance);
        e.kind = EntryKind::Finding;
        e.note = Some(note.into());
        e
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub findings: usize,
    pub pass: bool,
}

/// Settings echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: String,
    pub points: usize,
    /// Global tolerance override, when one was given.
    pub tol: Option<f64>,
    pub m: f64,
    pub m1: f64,
    pub m2: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub suite: String,
    pub version: String,
    pub timestamp: String,
    pub config: ConfigEcho,
    pub entries: Vec<Entry>,
    pub summary: Summary,
}

impl Report {
    pub fn new(suite: &str, config: ConfigEcho, mut entries: Vec<Entry>) -> Self {
        entries.sort_by(|a, b| (&a.suite, &a.id).cmp(&(&b.suite, &b.id)));
        let checks: Vec<&Entry> = entries.iter().filter(|e| e.kind == EntryKind::Check).collect();
        let passed = checks.iter().filter(|e| e.pass).count();
        let summary = Summary {
            checks: checks.len(),
            passed,
            failed: checks.len() - passed,
            findings: entries.len() - checks.len(),
            pass: passed == checks.len(),
        };
        Self {
            schema: SCHEMA,
            suite: suite.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            config,
            entries,
            summary,
        }
    }

    pub fn pass(&self) -> bool {
        self.summary.pass
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// JSON with the timestamp blanked, for determinism comparisons.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut r = self.clone();
        r.timestamp.clear();
        r.to_json()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| e.kind == EntryKind::Check && !e.pass)
    }

    /// Fixed-width text table, one line per entry.
    pub fn table(&self) -> String {
        let width = self.entries.iter().map(|e| e.suite.len() + e.id.len() + 1).max().unwrap_or(10).max(10);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:<7}  {:>10}  {:>10}  result", "check", "kind", "residual", "tolerance");
        for e in &self.entries {
            let verdict = match (e.kind, e.pass) {
                (EntryKind::Check, true) => "PASS",
                (EntryKind::Check, false) => "FAIL",
                (EntryKind::Finding, true) => "agrees",
                (EntryKind::Finding, false) => "differs",
            };
            let kind = match e.kind {
                EntryKind::Check => "check",
                EntryKind::Finding => "finding",
            };
            let _ = writeln!(
                out,
                "{:<width$}  {kind:<7}  {:>10.3e}  {:>10.3e}  {verdict}",
                format!("{}/{}", e.suite, e.id),
                e.residual,
                e.tolerance
            );
            if let Some(n) = &e.note {
                let _ = writeln!(out, "{:<width$}    {n}", "");
            }
        }
        let s = &self.summary;
        let _ = writeln!(
            out,
            "{}: {} of {} checks passed, {} failed, {} findings",
            if s.pass { "PASS" } else { "FAIL" },
            s.passed,
            s.checks,
            s.failed,
            s.findings
        );
        out
    }
}

/// Collapses a pointwise residual report into one entry per relation and
/// derivative order, keeping the worst point.
pub fn aggregate(suite: &str, prefix: &str, report: &ResidualReport) -> Vec<Entry> {
    struct Worst {
        residual: f64,
        tol: f64,
        pass: bool,
        points: usize,
        point: MomentumPoint,
    }
    let mut groups: BTreeMap<(String, usize), Worst> = BTreeMap::new();
    for e in &report.entries {
        let w = groups.entry((e.relation.clone(), e.order)).or_insert(Worst {
            residual: f64::NEG_INFINITY,
            tol: e.tol,
            pass: true,
            points: 0,
            point: e.point,
        });
        w.points += 1;
        w.pass &= e.pass;
        w.tol = w.tol.min(e.tol);
        if e.residual > w.residual || e.residual.is_nan() {
            w.residual = e.residual;
            w.point = e.point;
        }
    }
    let multi_order: BTreeMap<&str, usize> = groups.keys().fold(BTreeMap::new(), |mut m, (r, _)| {
        *m.entry(r.as_str()).or_insert(0) += 1;
        m
    });
    groups
        .iter()
        .map(|((rel, order), w)| {
            let id = if multi_order[rel.as_str()] > 1 {
                format!("{prefix}{rel}:order{order}")
            } else {
                format!("{prefix}{rel}")
            };
            let mut e = Entry::check(
                suite,
                id,
                serde_json::json!({ "points": w.points, "worst_point": w.point }),
                w.residual,
                w.tol,
            );
            e.pass = w.pass;
            e
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcalc::ResidualEntry;

    fn echo() -> ConfigEcho {
        ConfigEcho {
            seed: "0x5eed".into(),
            points: 3,
            tol: None,
            m: 1.0,
            m1: 1.0,
            m2: 2.0,
        }
    }

    #[test]
    fn findings_do_not_fail_the_report() {
        let r = Report::new(
            "x",
            echo(),
            vec![
                Entry::check("x", "b", Value::Null, 1e-14, 1e-12),
                Entry::finding("x", "a", Value::Null, 1.0, 1e-12, "differs"),
            ],
        );
        assert!(r.pass());
        assert_eq!(r.exit_code(), 0);
        assert_eq!(r.summary.findings, 1);
        assert_eq!(r.entries[0].id, "a");
        let failing = Report::new("x", echo(), vec![Entry::check("x", "c", Value::Null, f64::NAN, 1.0)]);
        assert!(!failing.pass());
        assert_eq!(failing.exit_code(), 1);
        assert!(failing.table().contains("FAIL"));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let r = Report::new("x", echo(), vec![Entry::strict("x", "v", Value::Null, 0.5, 1.0)]);
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"schema\": 1"));
        assert!(r.to_json_without_timestamp().contains("\"timestamp\": \"\""));
    }

    #[test]
    fn aggregation_keeps_worst_point() {
        let q = |x| MomentumPoint::new([x, 0.0, 0.0, 0.0, 0.0, 0.0], 0.0);
        let row = |rel: &str, x, order, residual| ResidualEntry {
            relation: rel.into(),
            point: q(x),
            order,
            residual,
            tol: 1e-9,
            pass: residual <= 1e-9,
        };
        let rep = ResidualReport {
            entries: vec![row("r", 1.0, 0, 1e-12), row("r", 2.0, 0, 1e-10), row("r", 2.0, 1, 2e-9), row("s", 1.0, 0, 0.0)],
        };
        let out = aggregate("x", "p:", &rep);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].id, "p:r:order0");
        assert_eq!(out[0].residual, 1e-10);
        assert!(out[0].pass && !out[1].pass && out[2].pass);
        assert_eq!(out[2].id, "p:s");
    }
}
