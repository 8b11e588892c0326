//! The integral equation `Φ̌_t = Φ_t + ∫ M(ds)∘Φ̌_{t-s}` in its pairing form,
//! and the Picard limit compared with the flow of shifts.

use carlab_core::grid::{GridFunction, GridSpec};
use carlab_core::solver::{integral_equation_residual, minimality_report, picard_iterate, PicardVariant};
use carlab_core::{MonomialObservable, RankOneState};

use super::generator::compliant_shapes;
use super::picard::{cell_one_tests, unit_bins};
use super::smooth::SmoothCase;
use super::{max_of, par_cases, relative, Checks};
use crate::config::ExperimentConfig;
use crate::report::{ConvergenceTable, Criterion, SuiteReport};
use crate::rng::case_rng;

type CoreResult<T> = carlab_core::Result<T>;

const ANCHOR: &str = "perturbed flow solves the integral equation";

/// Single-particle pairing residual at `t = x_max/4` on grids
/// `grid_points · 2^k`.
pub fn integral_sweep(config: &ExperimentConfig, levels: usize) -> ConvergenceTable {
    let support = 0.875 * config.x_max;
    let cases: Vec<SmoothCase> = (0..3)
        .map(|i| {
            SmoothCase::random(
                (1, 1, 1, 1),
                support,
                0.5 * config.x_max,
                &mut case_rng(config.seed, "integral/smooth", i),
            )
        })
        .collect();
    let grids: Vec<usize> = (0..levels).map(|k| config.grid_points << k).collect();
    let data = par_cases(grids.len(), |k| {
        let err = (|| -> CoreResult<f64> {
            let spec = GridSpec::covering(grids[k], config.x_max)?;
            let t = grids[k] / 4;
            let bins = unit_bins(spec, t)?;
            max_of(cases.iter().map(|c| {
                let r = integral_equation_residual(t, &c.state(spec)?, &c.monomial(spec)?, &bins)?;
                Ok(relative(r.residual, r.scale))
            }))
        })();
        (config.x_max / grids[k] as f64, err.unwrap_or(f64::NAN))
    });
    let criterion = Criterion::Ratio { threshold: config.tol_ratio };
    ConvergenceTable::evaluate("single_particle_order", ANCHOR, "h", &data, config.exact_floor, criterion)
}

pub(super) fn run(config: &ExperimentConfig) -> SuiteReport {
    let mut checks = Checks::default();
    let spec = match GridSpec::covering(config.grid_points, config.x_max) {
        Ok(s) => s,
        Err(e) => {
            checks.at_most("grid", "grid construction", Err::<f64, _>(e), 0.0);
            return checks.finish("integral_equation");
        }
    };
    let seed = config.seed;
    let m = spec.num_points();
    let shapes = compliant_shapes();
    let max_t = (m / 2).max(1);

    let random = max_of(par_cases(config.random_cases, |i| {
        let mut rng = case_rng(seed, "integral/random", i as u64);
        let (n, k, p, q) = shapes[i % shapes.len()];
        let t = 1 + (i / shapes.len()) % max_t;
        let end = (m - t).min(spec.support_end());
        let state = RankOneState::random(spec, n, k, &mut rng);
        let a = (0..p).map(|_| GridFunction::random_on(spec, 1..end, &mut rng)).collect();
        let c = (0..q).map(|_| GridFunction::random_on(spec, 1..end, &mut rng)).collect();
        let x = MonomialObservable::new(spec, a, c)?;
        let r = integral_equation_residual(t, &state, &x, &unit_bins(spec, t)?)?;
        Ok::<_, carlab_core::Error>(relative(r.residual, r.scale))
    }));
    checks.at_most("pairing_random_cases", ANCHOR, random, config.tol_identity).detail =
        format!("{} cases on {m} points, t up to {max_t} cells", config.random_cases);

    let mut rng = case_rng(seed, "integral/negative", 0);
    let state = RankOneState::random(spec, 1, 1, &mut rng);
    let wide = MonomialObservable::new(
        spec,
        vec![GridFunction::random_on(spec, 1..m, &mut rng)],
        vec![GridFunction::random_on(spec, 1..m, &mut rng)],
    );
    let outcome = wide.and_then(|x| integral_equation_residual(2, &state, &x, &unit_bins(spec, 2)?));
    checks.rejects("rejects_monomial_leaving_grid", "shifted monomial must stay inside the grid", outcome);
    let x = MonomialObservable::new(
        spec,
        vec![GridFunction::random_on(spec, 1..2, &mut rng)],
        vec![GridFunction::random_on(spec, 1..2, &mut rng)],
    );
    let partial = x.and_then(|x| integral_equation_residual(3, &state, &x, &unit_bins(spec, 2)?));
    checks.rejects("rejects_bins_not_covering_interval", "bins partition [0, t)", partial);

    let levels = config.halvings + 1;
    checks.table(integral_sweep(config, levels));

    let limit = (|| -> CoreResult<(f64, f64)> {
        let small = GridSpec::covering(config.choi_modes, config.x_max)?;
        let max_time = small.num_points() - 2;
        let picard =
            picard_iterate(&unit_bins(small, config.time_horizon)?, PicardVariant::Convolution, config.picard_steps)?;
        let tests = cell_one_tests(small, seed, 24);
        let r = minimality_report(&picard, &tests, max_time.min(config.time_horizon))?;
        Ok((relative(r.reference_gap, r.reference_scale), r.prefix_min_eigenvalue))
    })();
    let (gap, prefix) = match limit {
        Ok((g, p)) => (Ok(g), Ok(p)),
        Err(e) => (Err(e.to_string()), Err(e.to_string())),
    };
    checks
        .at_most(
            "picard_limit_matches_flow",
            "minimal solution agrees with the flow of shifts",
            gap,
            config.tol_identity,
        )
        .detail = format!("{} modes, convolution variant, monomials on cell 1", config.choi_modes);
    checks.at_least(
        "picard_limit_dominates_iterates",
        "minimal solution dominates every iterate",
        prefix,
        -config.tol_cp,
    );
    checks.finish("integral_equation")
}
