//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use carlab::report::{to_json, Verdict};
use carlab::{run_report, run_sweep, ExperimentConfig, Report, SuiteName, SweepTarget};

struct Line {
    ok: bool,
    summary: String,
}

impl Line {
    fn new(ok: bool, summary: impl Into<String>) -> Self {
        Self { ok, summary: summary.into() }
    }

    fn and(self, other: Line) -> Self {
        Self::new(self.ok && other.ok, format!("{}; {}", self.summary, other.summary))
    }
}

/// All named checks of one suite must be present and passing.
fn checks(report: &Report, suite: &str, names: &[&str]) -> Line {
    let Some(s) = report.suite(suite) else {
        return Line::new(false, format!("suite {suite} missing"));
    };
    let mut bad = Vec::new();
    let mut worst = Vec::new();
    for name in names {
        match s.check(name) {
            Some(c) if c.status.is_pass() => worst.push(format!("{name}={:.3e}", c.value)),
            Some(c) => bad.push(format!("{name}={:e} vs {} {:e}", c.value, c.comparison.symbol(), c.tol)),
            None => bad.push(format!("{name} missing")),
        }
    }
    if bad.is_empty() {
        Line::new(true, worst.join(", "))
    } else {
        Line::new(false, format!("failing: {}", bad.join(", ")))
    }
}

fn table(report: &Report, suite: &str, name: &str, min_rows: usize, accept: &[Verdict]) -> Line {
    let Some(t) = report.suite(suite).and_then(|s| s.table(name)) else {
        return Line::new(false, format!("table {name} missing"));
    };
    let ratios: Vec<String> = t.rows.iter().filter_map(|r| r.ratio).map(|q| format!("{q:.2}")).collect();
    let ok = t.status.is_pass() && t.rows.len() >= min_rows && accept.contains(&t.verdict);
    Line::new(ok, format!("{name} {:?} over {} levels, ratios [{}]", t.verdict, t.rows.len(), ratios.join(" ")))
}

fn elapsed(report: &Report, suite: &str, limit: f64) -> Line {
    match report.suite(suite).and_then(|s| s.elapsed_seconds) {
        Some(t) => Line::new(t < limit, format!("{suite} ran in {t:.1}s (limit {limit}s)")),
        None => Line::new(false, format!("no timing for {suite}")),
    }
}

fn strip_timings(mut report: Report) -> Report {
    for s in &mut report.suites {
        s.elapsed_seconds = None;
    }
    report
}

fn main() {
    let config = ExperimentConfig::default();
    config.validate().expect("default configuration is valid");
    let timed = run_report(SuiteName::All, &config, true);
    let r = &timed;
    const RATIO: &[Verdict] = &[Verdict::Converging];
    const EXACT_OR_RATIO: &[Verdict] = &[Verdict::Exact, Verdict::Converging];

    let mut lines = Vec::new();

    lines.push(
        checks(
            r,
            "car_algebra",
            &[
                "ladder_matches_jordan_wigner",
                "anticommutator_annihilation_creation",
                "anticommutator_same_type",
                "adjointness",
                "nilpotency",
                "smeared_anticommutator",
                "ladder_norm_equals_function_norm",
            ],
        )
        .and(Line::new(config.grid_points == 8 && config.car_samples == 50, format!("M = {}", config.grid_points)))
        .and(elapsed(r, "car_algebra", 30.0)),
    );

    lines.push(
        checks(r, "car_algebra", &["wedge_inner_product_is_gram_determinant", "wedge_matches_antisymmetrizer"])
            .and(Line::new(config.determinant_cases >= 100, format!("{} cases", config.determinant_cases))),
    );

    lines.push(checks(
        r,
        "car_algebra",
        &[
            "xi_trace_is_number_expectation",
            "xi_trace_on_n_particle_states",
            "xi_matches_kraus_form",
            "xi_choi_positive",
        ],
    ));

    lines.push(checks(r, "generator", &["identity_random_cases", "boundary_value_breaks_identity"]).and(Line::new(
        config.random_cases >= 200 && config.negative_factor >= 100.0,
        "200 cases, negative above 100x floor",
    )));

    lines.push(
        table(r, "generator", "same_side_order", config.halvings + 1, RATIO)
            .and(Line::new(config.halvings >= 3, format!("{} halvings", config.halvings))),
    );

    lines.push(checks(r, "measure", &["qn_bound", "riemann_sum_trace_non_increase"]).and(table(
        r,
        "measure",
        "kraus_riemann_order",
        3,
        RATIO,
    )));

    lines.push(checks(r, "measure", &["covariance", "additivity_on_partitions"]));

    lines.push(table(r, "measure", "small_time_link_order", config.halvings + 1, RATIO));

    lines.push(
        table(r, "integral_equation", "single_particle_order", config.halvings + 1, EXACT_OR_RATIO).and(checks(
            r,
            "integral_equation",
            &["pairing_random_cases", "picard_limit_matches_flow"],
        )),
    );

    lines.push(
        checks(
            r,
            "picard",
            &["convolution_monotone", "convolution_unit_bound", "literal_monotone", "literal_unit_bound"],
        )
        .and(Line::new(
            config.choi_modes == 4 && config.picard_steps >= 20,
            format!("M = 4, {} steps", config.picard_steps),
        ))
        .and(elapsed(r, "picard", 300.0)),
    );

    lines.push(
        checks(
            r,
            "no_event",
            &[
                "theta_lyapunov_matches_quadrature",
                "theta_is_excessive",
                "measure_from_theta_matches_quadrature",
                "qubit_theta_closed_form",
            ],
        )
        .and(Line::new(config.no_event_dim <= 4, format!("d = {}", config.no_event_dim))),
    );

    let determinism = {
        let first = to_json(&strip_timings(timed.clone())).expect("serializable");
        let second = to_json(&run_report(SuiteName::All, &config, false)).expect("serializable");
        let sweep = |()| run_sweep(SweepTarget::SmallTimeT, 4, &config).and_then(|r| to_json(&r)).expect("sweep runs");
        let same_run = first == second;
        let same_sweep = sweep(()) == sweep(());
        Line::new(same_run && same_sweep, format!("run bytes equal: {same_run}, sweep bytes equal: {same_sweep}"))
    };
    lines.push(determinism);

    let mut failed = 0;
    for (i, line) in lines.iter().enumerate() {
        println!("criterion {}: {} {}", i + 1, if line.ok { "PASS" } else { "FAIL" }, line.summary);
        failed += usize::from(!line.ok);
    }
    let negatives = timed.suites.iter().flat_map(|s| &s.checks).filter(|c| c.negative).count();
    println!("overall report status: {} ({negatives} negative checks)", timed.status.as_str());
    if failed > 0 || !timed.status.is_pass() {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
