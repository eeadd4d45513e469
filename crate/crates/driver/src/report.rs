//! Run and suite reports.

use std::fmt;
use std::time::Duration;

use serde_json::{json, Value as Json};

/// Enough to replay a failing run: the generator seed, the shrunk program
/// text and the packet it was fed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reproducer {
    pub seed: u64,
    pub program: String,
    pub packet_hex: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Value(String),
    /// An expected rejection, with its diagnostic.
    Diagnostic(String),
    Violation { property: String, detail: String, reproducer: Box<Reproducer> },
    Skipped(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub id: String,
    pub seed: u64,
    pub outcome: Outcome,
    pub steps: u64,
    pub preservation_checks: u64,
    pub wf_checks: u64,
    pub elapsed: Duration,
}

impl RunReport {
    pub fn new(id: impl Into<String>, seed: u64, outcome: Outcome) -> RunReport {
        RunReport {
            id: id.into(),
            seed,
            outcome,
            steps: 0,
            preservation_checks: 0,
            wf_checks: 0,
            elapsed: Duration::ZERO,
        }
    }

    pub fn is_violation(&self) -> bool {
        matches!(self.outcome, Outcome::Violation { .. })
    }

    pub fn to_json(&self) -> Json {
        let outcome = match &self.outcome {
            Outcome::Value(v) => json!({ "kind": "value", "value": v }),
            Outcome::Diagnostic(d) => json!({ "kind": "diagnostic", "diagnostic": d }),
            Outcome::Skipped(r) => json!({ "kind": "skipped", "reason": r }),
            Outcome::Violation { property, detail, reproducer } => json!({
                "kind": "violation",
                "property": property,
                "detail": detail,
                "reproducer": {
                    "seed": reproducer.seed,
                    "program": reproducer.program,
                    "packet": reproducer.packet_hex,
                },
            }),
        };
        json!({
            "id": self.id,
            "seed": self.seed,
            "outcome": outcome,
            "steps": self.steps,
            "preservation_checks": self.preservation_checks,
            "wf_checks": self.wf_checks,
            "elapsed_ms": self.elapsed.as_millis() as u64,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub runs: Vec<RunReport>,
    /// Set when the whole suite could not run.
    pub skipped: Option<String>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn new(suite: &str, seed: u64) -> SuiteReport {
        SuiteReport { suite: suite.into(), seed, runs: Vec::new(), skipped: None, elapsed: Duration::ZERO }
    }

    pub fn skipped(suite: &str, seed: u64, reason: impl Into<String>) -> SuiteReport {
        SuiteReport { skipped: Some(reason.into()), ..SuiteReport::new(suite, seed) }
    }

    pub fn violations(&self) -> impl Iterator<Item = &RunReport> {
        self.runs.iter().filter(|r| r.is_violation())
    }

    /// Runs that executed, excluding skipped ones.
    pub fn executed(&self) -> usize {
        self.runs.iter().filter(|r| !matches!(r.outcome, Outcome::Skipped(_))).count()
    }

    pub fn is_ok(&self) -> bool {
        self.violations().next().is_none()
    }

    pub fn total_steps(&self) -> u64 {
        self.runs.iter().map(|r| r.steps).sum()
    }

    pub fn to_json(&self) -> Json {
        json!({
            "suite": self.suite,
            "seed": self.seed,
            "skipped": self.skipped,
            "elapsed_ms": self.elapsed.as_millis() as u64,
            "runs": self.runs.iter().map(RunReport::to_json).collect::<Vec<_>>(),
        })
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(reason) = &self.skipped {
            return write!(f, "{}: skipped ({reason})", self.suite);
        }
        let bad = self.violations().count();
        write!(
            f,
            "{}: {} runs, {} executed, {} violations, {} steps, {:.2}s",
            self.suite,
            self.runs.len(),
            self.executed(),
            bad,
            self.total_steps(),
            self.elapsed.as_secs_f64()
        )?;
        for r in self.violations() {
            if let Outcome::Violation { property, detail, reproducer } = &r.outcome {
                write!(f, "\n  {} [{property}] {detail}\n  seed {}", r.id, reproducer.seed)?;
                if !reproducer.packet_hex.is_empty() {
                    write!(f, ", packet {}", reproducer.packet_hex)?;
                }
                for line in reproducer.program.lines() {
                    write!(f, "\n    {line}")?;
                }
            }
        }
        Ok(())
    }
}
