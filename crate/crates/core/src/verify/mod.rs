//! The acceptance suite: thirteen numbered criteria, each a set of metrics
//! compared against pinned limits.
//!
//! ```no_run
//! use ou_semigroup::verify::{run_criterion, VerifyOptions};
//!
//! let report = run_criterion(1, &VerifyOptions { seed: 42, quick: true }).unwrap();
//! println!("{}", report.summary_line());
//! assert!(report.passed());
//! ```

mod checks;

use std::time::{Duration, Instant};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Budgets reduced by roughly a factor ten, for smoke runs.
    pub quick: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { seed: 42, quick: false }
    }
}

impl VerifyOptions {
    /// `full` normally, `full / 10` in quick mode.
    pub(crate) fn budget(&self, full: usize) -> usize {
        if self.quick {
            (full / 10).max(1)
        } else {
            full
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    AtMost,
    AtLeast,
    /// Strictly greater than the limit.
    Above,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub check: Check,
}

impl Metric {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, check: Check::AtMost }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, check: Check::AtLeast }
    }

    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, check: Check::Above }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        Self { name: name.into(), value, limit: f64::NAN, check: Check::Info }
    }

    /// NaN values fail every gated check.
    pub fn holds(&self) -> bool {
        match self.check {
            Check::AtMost => self.value <= self.limit,
            Check::AtLeast => self.value >= self.limit,
            Check::Above => self.value > self.limit,
            Check::Info => true,
        }
    }

    pub fn is_gated(&self) -> bool {
        self.check != Check::Info
    }

    fn describe(&self) -> String {
        let op = match self.check {
            Check::AtMost => "<=",
            Check::AtLeast => ">=",
            Check::Above => ">",
            Check::Info => return format!("{} = {:.4e}", self.name, self.value),
        };
        format!("{} = {:.4e} (need {op} {:.1e})", self.name, self.value, self.limit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionReport {
    pub id: u8,
    pub title: &'static str,
    pub metrics: Vec<Metric>,
    pub runtime_limit: Duration,
    pub elapsed: Duration,
}

impl CriterionReport {
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(Metric::holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Metric> {
        self.metrics.iter().filter(|m| !m.holds())
    }

    pub fn within_runtime(&self) -> bool {
        self.elapsed <= self.runtime_limit
    }

    /// One line: verdict, title, the first failing metric (or the first
    /// gated one) and the runtime against its budget.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let headline = self
            .failures()
            .next()
            .or_else(|| self.metrics.iter().find(|m| m.is_gated()))
            .map(Metric::describe)
            .unwrap_or_default();
        let failing = self.failures().count();
        let extra = if failing > 1 { format!(" (+{} more failing)", failing - 1) } else { String::new() };
        format!(
            "criterion {:>2} {verdict} {}: {headline}{extra} [{:.1}s of {}s]",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.runtime_limit.as_secs()
        )
    }
}

pub const CRITERIA: [(u8, &str, u64); 13] = [
    (1, "kernel tensorization", 1),
    (2, "two-route semigroup agreement", 30),
    (3, "Markov property and Chapman-Kolmogorov", 30),
    (4, "frequency-free block bound", 30),
    (5, "local bound chain", 30),
    (6, "Lyapunov residual and convergence to Q_inf", 5),
    (7, "normal-form roundtrip", 10),
    (8, "exact SDE sampling", 10),
    (9, "geometry suite", 120),
    (10, "empirical-constant lemmas", 60),
    (11, "weak-type scans", 2400),
    (12, "forbidden-zone recursion", 300),
    (13, "large-time analyzer", 120),
];

pub fn run_criterion(id: u8, options: &VerifyOptions) -> Result<CriterionReport> {
    let &(_, title, limit) = CRITERIA
        .iter()
        .find(|(i, _, _)| *i == id)
        .ok_or_else(|| Error::InvalidParameter(format!("no criterion {id}")))?;
    let start = Instant::now();
    let metrics = match id {
        1 => checks::tensorization(options)?,
        2 => checks::two_routes(options)?,
        3 => checks::markov_and_chapman_kolmogorov(options)?,
        4 => checks::block_bound(options)?,
        5 => checks::local_bound_chain(options)?,
        6 => checks::lyapunov(options)?,
        7 => checks::normal_form_roundtrip(options)?,
        8 => checks::sde_sampling(options)?,
        9 => checks::geometry(options)?,
        10 => checks::empirical_lemmas(options)?,
        11 => checks::weak_type(options)?,
        12 => checks::forbidden_zones(options)?,
        _ => checks::large_time(options)?,
    };
    Ok(CriterionReport { id, title, metrics, runtime_limit: Duration::from_secs(limit), elapsed: start.elapsed() })
}

/// Runs every criterion in order; errors are kept per criterion.
pub fn run_all(options: &VerifyOptions) -> Vec<(u8, Result<CriterionReport>)> {
    CRITERIA.iter().map(|&(id, _, _)| (id, run_criterion(id, options))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_checks() {
        assert!(Metric::at_most("a", 1.0, 1.0).holds());
        assert!(!Metric::above("a", 0.0, 0.0).holds());
        assert!(!Metric::at_least("a", f64::NAN, 0.0).holds());
        assert!(Metric::info("a", f64::NAN).holds());
    }

    #[test]
    fn summary_names_the_failure() {
        let report = CriterionReport {
            id: 3,
            title: "x",
            metrics: vec![Metric::at_most("ok", 0.0, 1.0), Metric::at_most("bad", 2.0, 1.0)],
            runtime_limit: Duration::from_secs(1),
            elapsed: Duration::from_millis(10),
        };
        assert!(!report.passed());
        assert!(report.summary_line().contains("FAIL") && report.summary_line().contains("bad"));
    }
}
