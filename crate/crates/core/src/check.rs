//! Named verification checks and their aggregation into reports.

use crate::error::Error;
use crate::expr::{Witness, ZeroVerdict};

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub enum Outcome {
    Proved,
    Numeric { max_residual: f64 },
    Refuted(Witness),
    Failed(String),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Proved | Outcome::Numeric { .. })
    }

    pub fn from_verdict(v: ZeroVerdict) -> Outcome {
        match v {
            ZeroVerdict::ProvedZero => Outcome::Proved,
            ZeroVerdict::NumericallyZero { max_residual } => Outcome::Numeric { max_residual },
            ZeroVerdict::NonZero(w) => Outcome::Refuted(w),
        }
    }

    pub fn from_result(r: Result<ZeroVerdict, Error>) -> Outcome {
        match r {
            Ok(v) => Outcome::from_verdict(v),
            Err(e) => Outcome::Failed(e.to_string()),
        }
    }
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Proved => write!(f, "proved"),
            Outcome::Numeric { max_residual } => write!(f, "numeric ({max_residual:.3e})"),
            Outcome::Refuted(w) => write!(f, "REFUTED ({})", ZeroVerdict::NonZero(w.clone())),
            Outcome::Failed(msg) => write!(f, "ERROR ({msg})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub outcome: Outcome,
}

impl Check {
    pub fn new(name: impl Into<String>, outcome: Outcome) -> Check {
        Check {
            name: name.into(),
            outcome,
        }
    }

    pub fn from_verdict(name: impl Into<String>, v: ZeroVerdict) -> Check {
        Check::new(name, Outcome::from_verdict(v))
    }

    pub fn from_result(name: impl Into<String>, r: Result<ZeroVerdict, Error>) -> Check {
        Check::new(name, Outcome::from_result(r))
    }

    pub fn passed(&self) -> bool {
        self.outcome.passed()
    }
}

/// An ordered list of checks with convenience aggregation.
#[derive(Clone, Debug, Default)]
pub struct CheckSet {
    pub checks: Vec<Check>,
}

impl CheckSet {
    pub fn new() -> CheckSet {
        CheckSet::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn add(&mut self, name: impl Into<String>, r: Result<ZeroVerdict, Error>) {
        self.push(Check::from_result(name, r));
    }

    pub fn extend(&mut self, other: CheckSet) {
        self.checks.extend(other.checks);
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// First failing check as an error, if any.
    pub fn require_all(&self) -> Result<(), Error> {
        match self.failures().next() {
            None => Ok(()),
            Some(c) => Err(Error::CheckFailed {
                check: c.name.clone(),
                detail: c.outcome.to_string(),
            }),
        }
    }
}

impl std::fmt::Display for CheckSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<48} {}", c.name, c.outcome)?;
        }
        Ok(())
    }
}
