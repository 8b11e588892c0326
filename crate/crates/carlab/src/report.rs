//! Check records, convergence tables and the JSON / CSV / text emitters.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Self::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Pass => "PASS",
            Self::Fail => "FAIL",
        }
    }

    fn all<'a>(it: impl IntoIterator<Item = &'a Status>) -> Self {
        Self::from_bool(it.into_iter().all(|s| s.is_pass()))
    }
}

/// How a measured value is compared with its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    /// Strictly above; used by negative tests.
    Exceeds,
}

impl Comparison {
    pub fn holds(self, value: f64, tol: f64) -> bool {
        // NaN never passes
        match self {
            Self::AtMost => value <= tol,
            Self::AtLeast => value >= tol,
            Self::Exceeds => value > tol,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Self::AtMost => "<=",
            Self::AtLeast => ">=",
            Self::Exceeds => ">",
        }
    }
}

/// JSON has no NaN or infinity; those travel as `null` and come back as NaN.
mod finite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

mod finite_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_finite() => s.serialize_f64(*x),
            _ => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    #[serde(with = "finite")]
    pub value: f64,
    #[serde(with = "finite")]
    pub tol: f64,
    pub comparison: Comparison,
    pub status: Status,
    /// Hypothesis-violating case whose expected outcome is a failure of the
    /// underlying identity.
    pub negative: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckRecord {
    pub fn new(name: &str, anchor: &str, value: f64, comparison: Comparison, tol: f64) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            value,
            tol,
            comparison,
            status: Status::from_bool(comparison.holds(value, tol)),
            negative: false,
            detail: String::new(),
        }
    }

    pub fn negative(mut self) -> Self {
        self.negative = true;
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    /// A check whose computation itself errored.
    pub fn errored(name: &str, anchor: &str, comparison: Comparison, tol: f64, err: impl std::fmt::Display) -> Self {
        Self::new(name, anchor, f64::NAN, comparison, tol).with_detail(format!("error: {err}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// Every successive ratio above the floor is at least `threshold`.
    Ratio { threshold: f64 },
    /// Errors never increase and the last one is at the floor.
    MonotoneToFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Every level at the floor.
    Exact,
    /// Ratios meet the threshold; finest levels may be at the floor.
    Converging,
    /// Monotone decrease down to the floor.
    Settled,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(with = "finite")]
    pub parameter: f64,
    #[serde(with = "finite")]
    pub error: f64,
    /// `error[k-1] / error[k]`, when both lie above the floor.
    #[serde(with = "finite_opt")]
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub name: String,
    pub anchor: String,
    pub parameter: String,
    pub rows: Vec<ConvergenceRow>,
    #[serde(with = "finite")]
    pub floor: f64,
    pub criterion: Criterion,
    #[serde(with = "finite_opt")]
    pub min_ratio: Option<f64>,
    pub verdict: Verdict,
    pub status: Status,
}

impl ConvergenceTable {
    pub fn evaluate(
        name: &str,
        anchor: &str,
        parameter: &str,
        data: &[(f64, f64)],
        floor: f64,
        criterion: Criterion,
    ) -> Self {
        let mut rows = Vec::with_capacity(data.len());
        for (k, &(p, e)) in data.iter().enumerate() {
            let ratio = match k {
                0 => None,
                _ => {
                    let prev = data[k - 1].1;
                    (prev > floor && e > floor).then(|| prev / e)
                }
            };
            rows.push(ConvergenceRow { parameter: p, error: e, ratio });
        }
        let min_ratio = rows.iter().filter_map(|r| r.ratio).reduce(f64::min);
        let finite = data.iter().all(|&(_, e)| e.is_finite());
        let at_floor = |e: f64| e <= floor;
        let last_at_floor = data.last().is_some_and(|&(_, e)| at_floor(e));
        let verdict = if !finite || data.len() < 3 {
            Verdict::Failed
        } else if data.iter().all(|&(_, e)| at_floor(e)) {
            Verdict::Exact
        } else {
            match criterion {
                Criterion::Ratio { threshold } => {
                    let ratios_ok = rows.iter().filter_map(|r| r.ratio).all(|q| q >= threshold);
                    // a level at the floor must not be followed by one above it
                    let settled = data.windows(2).all(|w| !at_floor(w[0].1) || at_floor(w[1].1));
                    if ratios_ok && settled && (min_ratio.is_some() || last_at_floor) {
                        Verdict::Converging
                    } else {
                        Verdict::Failed
                    }
                }
                Criterion::MonotoneToFloor => {
                    let monotone = data.windows(2).all(|w| w[1].1 <= w[0].1 || at_floor(w[1].1));
                    if monotone && last_at_floor {
                        Verdict::Settled
                    } else {
                        Verdict::Failed
                    }
                }
            }
        };
        Self {
            name: name.into(),
            anchor: anchor.into(),
            parameter: parameter.into(),
            rows,
            floor,
            criterion,
            min_ratio,
            status: Status::from_bool(verdict != Verdict::Failed),
            verdict,
        }
    }

    /// The table's verdict as a flat check record.
    pub fn check(&self) -> CheckRecord {
        let max_error = self.rows.iter().map(|r| r.error).fold(0.0, f64::max);
        let mut rec = match (self.verdict, self.criterion) {
            (Verdict::Exact, _) => {
                CheckRecord::new(&self.name, &self.anchor, max_error, Comparison::AtMost, self.floor)
                    .with_detail("exact: every level at the floor")
            }
            (_, Criterion::Ratio { threshold }) => CheckRecord::new(
                &self.name,
                &self.anchor,
                self.min_ratio.unwrap_or(f64::NAN),
                Comparison::AtLeast,
                threshold,
            )
            .with_detail("minimum successive error ratio"),
            (_, Criterion::MonotoneToFloor) => {
                let last = self.rows.last().map_or(f64::NAN, |r| r.error);
                CheckRecord::new(&self.name, &self.anchor, last, Comparison::AtMost, self.floor)
                    .with_detail("final error of a monotone sequence")
            }
        };
        // the table verdict also covers monotonicity and level count
        rec.status = self.status;
        if self.verdict == Verdict::Converging && self.min_ratio.is_none() {
            rec.detail = "converged to the floor after the first level".into();
        }
        rec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub status: Status,
    pub checks: Vec<CheckRecord>,
    pub tables: Vec<ConvergenceTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

impl SuiteReport {
    /// Table verdicts are appended as checks so the flat views see them.
    pub fn new(suite: &str, mut checks: Vec<CheckRecord>, tables: Vec<ConvergenceTable>) -> Self {
        checks.extend(tables.iter().map(ConvergenceTable::check));
        let status = Status::all(checks.iter().map(|c| &c.status));
        Self { suite: suite.into(), status, checks, tables, elapsed_seconds: None }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&ConvergenceTable> {
        self.tables.iter().find(|t| t.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub command: String,
    pub target: String,
    pub seed: u64,
    pub preset: String,
    pub status: Status,
    pub suites: Vec<SuiteReport>,
}

impl Report {
    pub fn new(command: &str, target: &str, seed: u64, preset: &str, suites: Vec<SuiteReport>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            command: command.into(),
            target: target.into(),
            seed,
            preset: preset.into(),
            status: Status::all(suites.iter().map(|s| &s.status)),
            suites,
        }
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.suite == name)
    }

    pub fn exit_code(&self) -> i32 {
        if self.status.is_pass() {
            0
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Json => "json",
            Self::Csv => "csv",
            Self::Text => "txt",
        }
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn to_json(report: &Report) -> Result<String, HarnessError> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<Report, HarnessError> {
    serde_json::from_str(text).map_err(|e| HarnessError::Serialize(e.to_string()))
}

/// One row per check: `suite, check, value, tol, status, anchor`.
pub fn to_csv(report: &Report) -> Result<String, HarnessError> {
    let ser = |e: csv::Error| HarnessError::Serialize(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["suite", "check", "value", "tol", "status", "anchor"]).map_err(ser)?;
    for s in &report.suites {
        for c in &s.checks {
            w.write_record([&s.suite, &c.name, &num(c.value), &num(c.tol), c.status.as_str(), &c.anchor])
                .map_err(ser)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Serialize(e.to_string()))
}

/// Plot-ready `parameter, error, ratio` columns for one table.
pub fn table_csv(table: &ConvergenceTable) -> Result<String, HarnessError> {
    let ser = |e: csv::Error| HarnessError::Serialize(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["parameter", "error", "ratio"]).map_err(ser)?;
    for r in &table.rows {
        let ratio = r.ratio.map(num).unwrap_or_default();
        w.write_record([num(r.parameter), num(r.error), ratio]).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Serialize(e.to_string()))
}

pub fn to_text(report: &Report) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} {} {} (seed {}, preset {}): {}",
        report.tool,
        report.command,
        report.target,
        report.seed,
        report.preset,
        report.status.as_str()
    );
    for s in &report.suites {
        let passed = s.checks.iter().filter(|c| c.status.is_pass()).count();
        let _ = write!(out, "\n[{}] {} ({}/{} checks)", s.suite, s.status.as_str(), passed, s.checks.len());
        if let Some(t) = s.elapsed_seconds {
            let _ = write!(out, " in {t:.2}s");
        }
        out.push('\n');
        for c in &s.checks {
            let neg = if c.negative { " (negative)" } else { "" };
            let _ = writeln!(
                out,
                "  {} {}{}: {} {} {}  [{}]",
                c.status.as_str(),
                c.name,
                neg,
                num(c.value),
                c.comparison.symbol(),
                num(c.tol),
                c.anchor
            );
            if !c.detail.is_empty() {
                let _ = writeln!(out, "       {}", c.detail);
            }
        }
        for t in &s.tables {
            let _ = writeln!(out, "  table {} ({:?}, floor {}):", t.name, t.verdict, num(t.floor));
            let _ = writeln!(out, "    {:>12} {:>14} {:>10}", t.parameter, "error", "ratio");
            for r in &t.rows {
                let ratio = r.ratio.map_or_else(|| "-".to_string(), |q| format!("{q:.3}"));
                let _ = writeln!(out, "    {:>12} {:>14.6e} {:>10}", r.parameter, r.error, ratio);
            }
        }
    }
    out
}

/// Sweeps render their CSV as the `parameter, error, ratio` table.
pub fn render(report: &Report, format: Format) -> Result<String, HarnessError> {
    match format {
        Format::Json => to_json(report),
        Format::Csv if report.command == "sweep" => {
            report.suites.iter().flat_map(|s| &s.tables).map(table_csv).collect()
        }
        Format::Csv => to_csv(report),
        Format::Text => Ok(to_text(report)),
    }
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, HarnessError> {
    std::fs::write(&path, contents).map_err(|source| HarnessError::Output { path: path.clone(), source })?;
    Ok(path)
}

/// Write `report.<ext>` into `dir`, plus one plot CSV per convergence table.
pub fn write_report(report: &Report, dir: &Path, format: Format) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Output { path: dir.to_path_buf(), source })?;
    let mut written = vec![write_file(dir.join(format!("report.{}", format.extension())), &render(report, format)?)?];
    for s in &report.suites {
        for t in &s.tables {
            written.push(write_file(dir.join(format!("{}_{}.csv", s.suite, t.name)), &table_csv(t)?)?);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let checks = vec![
            CheckRecord::new("small", "anchor a", 1e-15, Comparison::AtMost, 1e-12),
            CheckRecord::new("violation", "anchor b", 0.3, Comparison::Exceeds, 1e-8).negative(),
        ];
        let table = ConvergenceTable::evaluate(
            "order",
            "anchor c",
            "h",
            &[(0.1, 4e-3), (0.05, 2e-3), (0.025, 1e-3)],
            1e-12,
            Criterion::Ratio { threshold: 1.7 },
        );
        Report::new("run", "demo", 3, "default", vec![SuiteReport::new("demo", checks, vec![table])])
    }

    #[test]
    fn comparisons_reject_nan() {
        for c in [Comparison::AtMost, Comparison::AtLeast, Comparison::Exceeds] {
            assert!(!c.holds(f64::NAN, 1.0));
        }
        assert!(Comparison::AtMost.holds(1.0, 1.0));
        assert!(!Comparison::Exceeds.holds(1.0, 1.0));
    }

    #[test]
    fn table_verdicts() {
        let ratio = Criterion::Ratio { threshold: 1.7 };
        let t = ConvergenceTable::evaluate("t", "", "h", &[(1.0, 1e-16), (0.5, 0.0), (0.25, 2e-16)], 1e-12, ratio);
        assert_eq!(t.verdict, Verdict::Exact);
        let t = ConvergenceTable::evaluate("t", "", "h", &[(1.0, 1e-2), (0.5, 8e-3), (0.25, 4e-3)], 1e-12, ratio);
        assert_eq!(t.verdict, Verdict::Failed);
        assert!((t.min_ratio.unwrap() - 1.25).abs() < 1e-12);
        let t = ConvergenceTable::evaluate("t", "", "h", &[(1.0, 1e-2), (0.5, 4e-3), (0.25, 0.0)], 1e-12, ratio);
        assert_eq!(t.verdict, Verdict::Converging);
        let t = ConvergenceTable::evaluate("t", "", "h", &[(1.0, 1e-2), (0.5, 0.0), (0.25, 1e-3)], 1e-12, ratio);
        assert_eq!(t.verdict, Verdict::Failed);
        let t = ConvergenceTable::evaluate("t", "", "h", &[(1.0, 1e-2), (0.5, 5e-3)], 1e-12, ratio);
        assert_eq!(t.verdict, Verdict::Failed);
        let t = ConvergenceTable::evaluate(
            "t",
            "",
            "n",
            &[(1.0, 1.0), (2.0, 0.9), (3.0, 0.0)],
            1e-12,
            Criterion::MonotoneToFloor,
        );
        assert_eq!(t.verdict, Verdict::Settled);
        let t = ConvergenceTable::evaluate(
            "t",
            "",
            "n",
            &[(1.0, 1.0), (2.0, 1.1), (3.0, 0.0)],
            1e-12,
            Criterion::MonotoneToFloor,
        );
        assert_eq!(t.verdict, Verdict::Failed);
        let t = ConvergenceTable::evaluate("t", "", "h", &[(1.0, 1.0), (0.5, f64::NAN), (0.25, 0.0)], 1e-12, ratio);
        assert_eq!(t.verdict, Verdict::Failed);
    }

    #[test]
    fn status_aggregates() {
        let r = sample();
        assert!(r.status.is_pass());
        assert_eq!(r.suites[0].checks.len(), 3);
        let mut bad = r.suites[0].checks.clone();
        bad.push(CheckRecord::new("x", "", 1.0, Comparison::AtMost, 0.5));
        let s = SuiteReport::new("demo", bad, vec![]);
        assert_eq!(s.status, Status::Fail);
        assert_eq!(Report::new("run", "demo", 0, "p", vec![s]).exit_code(), 1);
    }

    #[test]
    fn json_round_trips() {
        let r = sample();
        let text = to_json(&r).unwrap();
        let generic: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(generic["schema_version"], 1);
        assert_eq!(from_json(&text).unwrap(), r);
        assert_eq!(from_json(&serde_json::to_string(&generic).unwrap()).unwrap(), r);
    }

    #[test]
    fn empty_report_is_valid_json() {
        let r = Report::new("run", "none", 0, "default", vec![]);
        let v: serde_json::Value = serde_json::from_str(&to_json(&r).unwrap()).unwrap();
        assert_eq!(v["suites"], serde_json::json!([]));
        assert_eq!(r.status, Status::Pass);
        assert_eq!(to_csv(&r).unwrap().lines().count(), 1);
    }

    #[test]
    fn non_finite_values_become_null() {
        let rec = CheckRecord::new("n", "", f64::INFINITY, Comparison::AtMost, 1.0);
        let v = serde_json::to_value(&rec).unwrap();
        assert!(v["value"].is_null());
        let back: CheckRecord = serde_json::from_value(v).unwrap();
        assert!(back.value.is_nan());
    }

    #[test]
    fn csv_has_one_row_per_check() {
        let r = sample();
        let text = to_csv(&r).unwrap();
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(&rows[0][0], "demo");
        assert_eq!(rows[0][2].parse::<f64>().unwrap(), 1e-15);
        let sweep = table_csv(&r.suites[0].tables[0]).unwrap();
        assert_eq!(sweep.lines().next(), Some("parameter,error,ratio"));
        assert_eq!(sweep.lines().count(), 4);
    }

    #[test]
    fn text_mentions_every_check() {
        let text = to_text(&sample());
        for name in ["small", "violation", "order"] {
            assert!(text.contains(name));
        }
    }
}
