//! Monotone Picard iteration on dense superoperators: order certificates,
//! sub-unitality, and convergence of the convolution variant to the flow of
//! shifts.

use carlab_core::grid::{GridFunction, GridSpec};
use carlab_core::shift::flow_of_shifts;
use carlab_core::solver::{picard_iterate, PicardState, PicardVariant};
use carlab_core::superop::SuperoperatorMatrix;
use carlab_core::{CPMeasureBin, MonomialObservable, RankOneState, TimeBin};

use super::generator::compliant_shapes;
use super::{max_of, par_cases, Checks};
use crate::config::ExperimentConfig;
use crate::report::{ConvergenceTable, Criterion, SuiteReport};
use crate::rng::case_rng;

type CoreResult<T> = carlab_core::Result<T>;

pub(crate) fn unit_bins(spec: GridSpec, horizon: usize) -> CoreResult<Vec<CPMeasureBin>> {
    (0..horizon).map(|r| CPMeasureBin::quadrature(spec, TimeBin::new(&spec, r, r + 1)?)).collect()
}

/// State and monomial pairs whose arguments live on cell 1, so shifts up to
/// `M - 2` cells stay inside the grid.
pub(crate) fn cell_one_tests(spec: GridSpec, seed: u64, count: usize) -> Vec<(RankOneState, MonomialObservable)> {
    let shapes = compliant_shapes();
    (0..count)
        .map(|i| {
            let mut rng = case_rng(seed, "picard/tests", i as u64);
            let (n, m, p, q) = shapes[i % shapes.len()];
            let state = RankOneState::random(spec, n, m, &mut rng);
            let a = (0..p).map(|_| GridFunction::random_on(spec, 1..2, &mut rng)).collect();
            let c = (0..q).map(|_| GridFunction::random_on(spec, 1..2, &mut rng)).collect();
            (state, MonomialObservable::new(spec, a, c).expect("same grid"))
        })
        .collect()
}

/// `max |Tr(ρ Φ^n_t(X)) - Tr(ρ Φ̌_t(X))| / max |Tr(ρ Φ̌_t(X))|` over the tests
/// and `t ≤ max_time`.
pub(crate) fn reference_gap(
    iterate: &[SuperoperatorMatrix],
    tests: &[(RankOneState, MonomialObservable)],
    max_time: usize,
) -> CoreResult<f64> {
    let mut gap: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (state, x) in tests {
        let rho = state.to_low_rank()?;
        let xd = x.to_dense()?;
        for (t, phi) in iterate.iter().enumerate().take(max_time + 1) {
            let reference = rho.pair(&flow_of_shifts(t, x))?;
            gap = gap.max((rho.pair(&phi.apply(&xd)?)? - reference).norm());
            scale = scale.max(reference.norm());
        }
    }
    Ok(if scale > 0.0 { gap / scale } else { gap })
}

/// Relative gap to the flow of shifts after `n = 0, 1, …, levels - 1` steps
/// of the convolution iteration.
pub fn picard_sweep(config: &ExperimentConfig, levels: usize) -> ConvergenceTable {
    let data = (|| -> CoreResult<Vec<(f64, f64)>> {
        let spec = GridSpec::covering(config.choi_modes, config.x_max)?;
        let horizon = config.time_horizon.min(spec.num_points() - 2);
        let picard = picard_iterate(&unit_bins(spec, horizon)?, PicardVariant::Convolution, levels - 1)?;
        let tests = cell_one_tests(spec, config.seed, 12);
        (0..levels).map(|n| Ok((n as f64, reference_gap(picard.iterate(n), &tests, horizon)?))).collect()
    })()
    .unwrap_or_else(|_| (0..levels).map(|n| (n as f64, f64::NAN)).collect());
    ConvergenceTable::evaluate(
        "picard_gap_to_flow",
        "Picard iterates increase to the minimal solution",
        "n",
        &data,
        config.exact_floor,
        Criterion::MonotoneToFloor,
    )
}

fn certificates(checks: &mut Checks, name: &str, run: CoreResult<PicardState>, tol: f64) {
    let anchor = "Picard iterates increase in the CP order";
    let unit_anchor = "Picard iterates satisfy Phi^n_t(I) <= I";
    let (inc, unit, start) = match &run {
        Ok(p) => {
            let certs = p.certificates();
            let inc = certs.iter().map(|c| c.increment_min_eigenvalue).fold(f64::INFINITY, f64::min);
            let unit = certs.iter().map(|c| c.unit_gap_min_eigenvalue).fold(f64::INFINITY, f64::min);
            let id = SuperoperatorMatrix::identity(p.iterate(0)[0].dim());
            let start = id.and_then(|id| max_of((0..=p.steps()).map(|n| p.iterate(n)[0].max_entry_diff(&id))));
            (Ok(inc), Ok(unit), start.map_err(|e| e.to_string()))
        }
        Err(e) => (Err(e.to_string()), Err(e.to_string()), Err(e.to_string())),
    };
    let steps = run.as_ref().map_or(0, PicardState::steps);
    checks.at_least(&format!("{name}_monotone"), anchor, inc, -tol).detail =
        format!("smallest Choi eigenvalue of Phi^(n+1)_t - Phi^n_t over {steps} steps");
    checks.at_least(&format!("{name}_unit_bound"), unit_anchor, unit, -tol).detail =
        "smallest eigenvalue of I - Phi^n_t(I) at every step".into();
    checks.at_most(&format!("{name}_starts_at_identity"), "Phi^n_0 is the identity map", start, 0.0);
}

pub(super) fn run(config: &ExperimentConfig) -> SuiteReport {
    let mut checks = Checks::default();
    let tol = config.tol_cp;
    let setup = GridSpec::covering(config.choi_modes, config.x_max)
        .and_then(|spec| Ok((spec, unit_bins(spec, config.time_horizon)?)));
    let (spec, bins) = match setup {
        Ok(s) => s,
        Err(e) => {
            checks.at_most("grid", "grid construction", Err::<f64, _>(e), 0.0);
            return checks.finish("picard");
        }
    };
    let variants = [PicardVariant::Convolution, PicardVariant::Literal];
    let runs = par_cases(variants.len(), |i| picard_iterate(&bins, variants[i], config.picard_steps));
    let stationary = match &runs[0] {
        Ok(p) => Ok(p.stationary_after(0.0).map_or(f64::INFINITY, |n| n as f64)),
        Err(e) => Err(e.to_string()),
    };
    for (variant, run) in variants.into_iter().zip(runs) {
        certificates(&mut checks, variant.name(), run, tol);
    }
    // each insertion removes a particle, so at most `modes` of them survive
    let bound = (spec.num_points() + 1) as f64;
    checks
        .at_most("convolution_terminates", "time-ordered expansion ends after finitely many steps", stationary, bound)
        .detail = "first step after which the iterates stop changing".into();

    let zero = (|| -> CoreResult<f64> {
        let bins: Vec<CPMeasureBin> = (0..config.time_horizon)
            .map(|r| Ok(CPMeasureBin::zero(spec, TimeBin::new(&spec, r, r + 1)?)))
            .collect::<CoreResult<_>>()?;
        let p = picard_iterate(&bins, PicardVariant::Convolution, 3)?;
        max_of((0..=p.steps()).flat_map(|n| {
            let base = p.iterate(0);
            p.iterate(n).iter().zip(base).map(|(a, b)| a.max_entry_diff(b)).collect::<Vec<_>>()
        }))
    })();
    checks.at_most("zero_measure_is_fixed_point", "zero measure leaves the semigroup unperturbed", zero, 0.0);

    let negative = {
        let mut shuffled = bins.clone();
        shuffled.swap(0, 1);
        picard_iterate(&shuffled, PicardVariant::Convolution, 1).map(|_| 0.0)
    };
    checks.rejects("rejects_non_partition_bins", "iteration runs over a partition of [0, T)", negative);

    checks.table(picard_sweep(config, 6));
    checks.finish("picard")
}
