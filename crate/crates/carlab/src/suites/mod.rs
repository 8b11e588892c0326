//! Named verification suites. Each suite draws its random data from
//! per-case streams, evaluates checks (in parallel where it pays) and
//! assembles records in a fixed order.

use std::fmt::Display;
use std::time::Instant;

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::report::{CheckRecord, Comparison, ConvergenceTable, Report, SuiteReport};

mod car;
mod generator;
mod integral;
mod measure;
mod no_event;
mod picard;
mod smooth;
pub(crate) mod sparse;

pub use generator::{generator_sweep, same_side_sweep};
pub use integral::integral_sweep;
pub use measure::{kraus_sweep, small_time_sweep};
pub use picard::picard_sweep;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SuiteName {
    CarAlgebra,
    Generator,
    Measure,
    Picard,
    IntegralEquation,
    NoEvent,
    All,
}

impl SuiteName {
    pub const EACH: [SuiteName; 6] = [
        SuiteName::CarAlgebra,
        SuiteName::Generator,
        SuiteName::Measure,
        SuiteName::Picard,
        SuiteName::IntegralEquation,
        SuiteName::NoEvent,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::CarAlgebra => "car_algebra",
            Self::Generator => "generator",
            Self::Measure => "measure",
            Self::Picard => "picard",
            Self::IntegralEquation => "integral_equation",
            Self::NoEvent => "no_event",
            Self::All => "all",
        }
    }

    pub fn expand(self) -> Vec<SuiteName> {
        match self {
            Self::All => Self::EACH.to_vec(),
            one => vec![one],
        }
    }
}

impl std::str::FromStr for SuiteName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::EACH
            .into_iter()
            .chain([Self::All])
            .find(|n| n.as_str() == s)
            .ok_or_else(|| format!("unknown suite '{s}'"))
    }
}

/// Run a suite (or every suite for `all`). Wall-clock time is only recorded on request so
/// default reports stay byte-identical across runs.
pub fn run_suite(name: SuiteName, config: &ExperimentConfig, timings: bool) -> Vec<SuiteReport> {
    name.expand()
        .into_par_iter()
        .map(|one| {
            let start = Instant::now();
            let mut report = match one {
                SuiteName::CarAlgebra => car::run(config),
                SuiteName::Generator => generator::run(config),
                SuiteName::Measure => measure::run(config),
                SuiteName::Picard => picard::run(config),
                SuiteName::IntegralEquation => integral::run(config),
                SuiteName::NoEvent => no_event::run(config),
                SuiteName::All => unreachable!("expanded above"),
            };
            if timings {
                report.elapsed_seconds = Some(start.elapsed().as_secs_f64());
            }
            report
        })
        .collect()
}

pub fn run_report(name: SuiteName, config: &ExperimentConfig, timings: bool) -> Report {
    Report::new("run", name.as_str(), config.seed, &config.preset, run_suite(name, config, timings))
}

/// Ordered check accumulator.
#[derive(Default)]
pub(crate) struct Checks {
    items: Vec<CheckRecord>,
    tables: Vec<ConvergenceTable>,
}

impl Checks {
    fn record<E: Display>(
        &mut self,
        name: &str,
        anchor: &str,
        value: Result<f64, E>,
        cmp: Comparison,
        tol: f64,
    ) -> &mut CheckRecord {
        let rec = match value {
            Ok(v) => CheckRecord::new(name, anchor, v, cmp, tol),
            Err(e) => CheckRecord::errored(name, anchor, cmp, tol, e),
        };
        self.items.push(rec);
        self.items.last_mut().expect("just pushed")
    }

    pub fn at_most<E: Display>(
        &mut self,
        name: &str,
        anchor: &str,
        value: Result<f64, E>,
        tol: f64,
    ) -> &mut CheckRecord {
        self.record(name, anchor, value, Comparison::AtMost, tol)
    }

    pub fn at_least<E: Display>(
        &mut self,
        name: &str,
        anchor: &str,
        value: Result<f64, E>,
        tol: f64,
    ) -> &mut CheckRecord {
        self.record(name, anchor, value, Comparison::AtLeast, tol)
    }

    /// Negative test: the identity must visibly fail.
    pub fn exceeds<E: Display>(
        &mut self,
        name: &str,
        anchor: &str,
        value: Result<f64, E>,
        tol: f64,
    ) -> &mut CheckRecord {
        let rec = self.record(name, anchor, value, Comparison::Exceeds, tol);
        rec.negative = true;
        rec
    }

    /// Negative test: the operation must refuse its input.
    pub fn rejects<T, E: Display>(&mut self, name: &str, anchor: &str, result: Result<T, E>) -> &mut CheckRecord {
        let (value, detail) = match result {
            Ok(_) => (0.0, "accepted".to_string()),
            Err(e) => (1.0, format!("rejected: {e}")),
        };
        let rec = self.record::<String>(name, anchor, Ok(value), Comparison::AtLeast, 1.0);
        rec.negative = true;
        rec.detail = detail;
        rec
    }

    pub fn table(&mut self, table: ConvergenceTable) {
        self.tables.push(table);
    }

    pub fn finish(self, suite: &str) -> SuiteReport {
        SuiteReport::new(suite, self.items, self.tables)
    }
}

/// Evaluate `f` on `0..n` in parallel; results come back in index order.
pub(crate) fn par_cases<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

/// Largest value; any NaN wins and the first error is returned.
pub(crate) fn max_of<E>(values: impl IntoIterator<Item = Result<f64, E>>) -> Result<f64, E> {
    let mut best: f64 = 0.0;
    for v in values {
        let v = v?;
        if v.is_nan() || v > best {
            best = v;
        }
        if best.is_nan() {
            break;
        }
    }
    Ok(best)
}

/// Smallest value with the same NaN and error rules as [`max_of`].
pub(crate) fn min_of<E>(values: impl IntoIterator<Item = Result<f64, E>>) -> Result<f64, E> {
    let mut best = f64::INFINITY;
    for v in values {
        let v = v?;
        if v.is_nan() || v < best {
            best = v;
        }
        if best.is_nan() {
            break;
        }
    }
    Ok(best)
}

/// `residual / scale`, or the bare residual when everything vanishes.
pub(crate) fn relative(residual: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        residual / scale
    } else {
        residual
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for n in SuiteName::EACH.into_iter().chain([SuiteName::All]) {
            assert_eq!(n.as_str().parse::<SuiteName>().unwrap(), n);
        }
        assert!("bogus".parse::<SuiteName>().is_err());
        assert_eq!(SuiteName::All.expand().len(), 6);
    }

    #[test]
    fn reductions() {
        assert_eq!(max_of::<()>([Ok(1.0), Ok(3.0), Ok(2.0)]), Ok(3.0));
        assert!(max_of::<()>([Ok(1.0), Ok(f64::NAN), Ok(2.0)]).unwrap().is_nan());
        assert_eq!(max_of([Ok(1.0), Err("x")]), Err("x"));
        assert_eq!(min_of::<()>([Ok(1.0), Ok(-3.0)]), Ok(-3.0));
        assert_eq!(relative(2.0, 4.0), 0.5);
        assert_eq!(relative(2.0, 0.0), 2.0);
    }

    #[test]
    fn rejection_records() {
        let mut c = Checks::default();
        c.rejects::<(), _>("bad input", "a", Err("nope"));
        c.rejects::<(), &str>("accepted input", "a", Ok(()));
        let r = c.finish("s");
        assert!(r.checks[0].status.is_pass() && r.checks[0].negative);
        assert!(!r.checks[1].status.is_pass());
    }
}
