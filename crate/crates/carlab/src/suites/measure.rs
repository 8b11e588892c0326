//! The covariant CP measure: Kraus and direct constructions, the `Q_n`
//! bound, Riemann-sum convergence, covariance, additivity and the
//! small-time link to `Δ`.

use carlab_core::fock::wedge_vector;
use carlab_core::grid::{inner_product, GridFunction, GridSpec};
use carlab_core::measure::{
    kraus_riemann_sum, kraus_riemann_sum_unnormalized, measure_star_quadrature, small_time_link,
};
use carlab_core::operator::max_eigenvalue;
use carlab_core::shift::{delta_perturbation, psi_low_rank};
use carlab_core::superop::is_completely_positive;
use carlab_core::{CPMeasureBin, LowRankOperator, RankOneState, TimeBin, C64};
use rand::Rng;

use super::smooth::SmoothCase;
use super::sparse::{Dense, Sparse};
use super::{max_of, min_of, par_cases, relative, Checks};
use crate::config::ExperimentConfig;
use crate::report::{ConvergenceTable, Criterion, SuiteReport};
use crate::rng::case_rng;

type CoreResult<T> = carlab_core::Result<T>;

/// Grid and bin of the Riemann-sum sweep: 64 cells starting at `M/8`.
const KRAUS_GRID: usize = 128;
const KRAUS_BIN: (usize, usize) = (16, 80);

fn all_bins(spec: &GridSpec) -> Vec<TimeBin> {
    let m = spec.num_points();
    (0..m)
        .flat_map(|lo| (lo + 1..=m).map(move |hi| (lo, hi)))
        .map(|(lo, hi)| TimeBin::new(spec, lo, hi).expect("in range"))
        .collect()
}

fn divisors(w: usize) -> Vec<usize> {
    (1..=w).filter(|n| w.is_multiple_of(*n)).collect()
}

/// `λ_max(Σ_j V_j^† V_j)` assembled from sparse Kraus matrices.
fn effect_norm(m: &CPMeasureBin) -> CoreResult<f64> {
    let dim = 1usize << m.spec().num_points();
    let mut q = Dense::zeros(dim, dim);
    for v in m.dense_kraus()? {
        q += Sparse::from_dense(&v).adjoint().left(&v);
    }
    Ok(max_eigenvalue(&q))
}

/// Random functions vanishing from cell `end` on.
fn state_below<R: Rng>(spec: GridSpec, n: usize, m: usize, end: usize, rng: &mut R) -> CoreResult<RankOneState> {
    let kets = (0..n).map(|_| GridFunction::random_on(spec, 0..end, rng)).collect();
    let bras = (0..m).map(|_| GridFunction::random_on(spec, 0..end, rng)).collect();
    RankOneState::new(spec, kets, bras)
}

/// Mixture of normalized wedge states with random particle numbers.
fn random_positive<R: Rng>(spec: GridSpec, rng: &mut R) -> CoreResult<LowRankOperator> {
    let mut rho = LowRankOperator::zero(spec.num_points());
    for _ in 0..3 {
        let n = rng.gen_range(0..=3usize);
        let fs: Vec<GridFunction> = (0..n).map(|_| GridFunction::random_on(spec, 0..spec.num_points(), rng)).collect();
        let v = wedge_vector(&spec, &fs)?;
        let norm = v.norm();
        let w = rng.gen_range(0.1..1.0) / (norm * norm);
        rho.push(C64::new(w, 0.0), v.clone(), v);
    }
    Ok(rho)
}

fn smooth_state(config: &ExperimentConfig, label: &str, shape: (usize, usize), case: u64) -> SmoothCase {
    let support = 0.875 * config.x_max;
    SmoothCase::random((shape.0, shape.1, 0, 0), support, support, &mut case_rng(config.seed, label, case))
}

/// Riemann-sum error `‖Σ_n(ρ) - M_*(ρ)‖_1 / ‖M_*(ρ)‖_1` for each `n`.
pub fn kraus_sweep(config: &ExperimentConfig, ns: &[usize]) -> ConvergenceTable {
    let cases: Vec<SmoothCase> = [(1, 1), (2, 2), (2, 1)]
        .iter()
        .enumerate()
        .map(|(i, &s)| smooth_state(config, "measure/kraus", s, i as u64))
        .collect();
    let data = par_cases(ns.len(), |k| {
        let err = (|| -> CoreResult<f64> {
            let spec = GridSpec::covering(KRAUS_GRID, config.x_max)?;
            let bin = TimeBin::new(&spec, KRAUS_BIN.0, KRAUS_BIN.1)?;
            let quad = CPMeasureBin::quadrature(spec, bin)?;
            let sum = kraus_riemann_sum(spec, bin, ns[k])?;
            max_of(cases.iter().map(|c| {
                let rho = c.state(spec)?.to_low_rank()?;
                let reference = quad.action(&rho)?;
                Ok(relative(sum.action(&rho)?.sub(&reference).trace_norm(), reference.trace_norm()))
            }))
        })();
        (ns[k] as f64, err.unwrap_or(f64::NAN))
    });
    let criterion = Criterion::Ratio { threshold: config.tol_ratio };
    ConvergenceTable::evaluate(
        "kraus_riemann_order",
        "measure as a limit of Kraus Riemann sums",
        "n",
        &data,
        config.exact_floor,
        criterion,
    )
}

/// `‖(1/t) M_*([0,t))(ρ) - Δ(ρ)‖_1 / ‖Δ(ρ)‖_1` at `t = 2h` on refined grids.
pub fn small_time_sweep(config: &ExperimentConfig, levels: usize) -> ConvergenceTable {
    let cases: Vec<SmoothCase> = [(1, 1), (2, 2), (2, 1)]
        .iter()
        .enumerate()
        .map(|(i, &s)| smooth_state(config, "measure/small_time", s, i as u64))
        .collect();
    let grids: Vec<usize> = (0..levels).map(|k| config.sweep_base_points << k).collect();
    let data = par_cases(grids.len(), |k| {
        let err = (|| -> CoreResult<f64> {
            let spec = GridSpec::covering(grids[k], config.x_max)?;
            max_of(cases.iter().map(|c| {
                let state = c.state(spec)?;
                let scale = delta_perturbation(&state)?.trace_norm();
                Ok(relative(small_time_link(spec, &state, 2)?, scale))
            }))
        })();
        (2.0 * config.x_max / grids[k] as f64, err.unwrap_or(f64::NAN))
    });
    let criterion = Criterion::Ratio { threshold: config.tol_ratio };
    ConvergenceTable::evaluate(
        "small_time_link_order",
        "(1/t) M_*([0,t)) -> Delta as t -> 0",
        "t",
        &data,
        config.exact_floor,
        criterion,
    )
}

pub(super) fn run(config: &ExperimentConfig) -> SuiteReport {
    let mut checks = Checks::default();
    let grids = (
        GridSpec::covering(config.grid_points, config.x_max),
        GridSpec::covering(2 * config.grid_points, config.x_max),
        GridSpec::covering(config.choi_modes, config.x_max),
    );
    let (spec, wide, small) = match grids {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        (a, b, c) => {
            let err = a.err().or(b.err()).or(c.err()).expect("one failed");
            checks.at_most("grid", "grid construction", Err::<f64, _>(err), 0.0);
            return checks.finish("measure");
        }
    };
    let seed = config.seed;
    let tol = config.tol_covariance;
    let m = spec.num_points();
    let bins = all_bins(&spec);

    let direct = max_of(par_cases(20, |i| {
        let mut rng = case_rng(seed, "measure/direct", i as u64);
        let state = RankOneState::random(spec, i % 3, (i / 3) % 3, &mut rng);
        let bin = bins[rng.gen_range(0..bins.len())];
        let a = CPMeasureBin::quadrature(spec, bin)?.action_on_state(&state)?;
        let b = measure_star_quadrature(spec, bin, &state)?;
        Ok::<_, carlab_core::Error>(relative(a.sub(&b).trace_norm(), b.trace_norm()))
    }));
    checks.at_most("kraus_form_matches_direct_formula", "M_* as a sum over shifted boundary contractions", direct, tol);

    let one_particle = max_of(par_cases(10, |i| {
        let mut rng = case_rng(seed, "measure/one_particle", i as u64);
        let f = GridFunction::random(spec, carlab_core::Domain::D, &mut rng);
        let state = RankOneState::new(spec, vec![f.clone()], vec![f.clone()])?;
        let bin = TimeBin::new(&spec, 0, m)?;
        let tr = CPMeasureBin::quadrature(spec, bin)?.action_on_state(&state)?.trace();
        let expected = inner_product(&f, &f)?;
        Ok::<_, carlab_core::Error>(relative((tr - expected).norm(), expected.norm()))
    }));
    checks.at_most("single_particle_trace", "Tr M_*([0,T))(|f><f|) = ||f||^2", one_particle, tol);

    let vacuum = (|| -> CoreResult<f64> {
        let state = RankOneState::new(spec, vec![], vec![])?;
        Ok(CPMeasureBin::quadrature(spec, TimeBin::new(&spec, 0, m)?)?.action_on_state(&state)?.trace_norm())
    })();
    checks.at_most("vacuum_carries_no_mass", "M_*(|0><0|) = 0", vacuum, tol);

    let qn_cases: Vec<(TimeBin, usize)> =
        bins.iter().flat_map(|&b| divisors(b.width()).into_iter().map(move |n| (b, n))).collect();
    let qn = par_cases(qn_cases.len(), |i| {
        let (bin, n) = qn_cases[i];
        let len = spec.x(bin.width());
        effect_norm(&kraus_riemann_sum_unnormalized(spec, bin, n)?).map(|lam| (lam / len, n == 1))
    });
    let qn_ratio = max_of(qn.iter().map(|r| r.as_ref().map(|p| p.0).map_err(ToString::to_string)));
    checks.at_most("qn_bound", "Q_n <= (s - t) I", qn_ratio, 1.0 + 1e-12).detail =
        format!("largest lambda_max(Q_n) / (s - t) over {} bin and n pairs", qn_cases.len());
    let qn_single = max_of(
        qn.iter()
            .filter(|r| r.as_ref().map_or(true, |p| p.1))
            .map(|r| r.as_ref().map(|p| (p.0 - 1.0).abs()).map_err(ToString::to_string)),
    );
    checks.at_most("qn_single_window_is_length", "||a^*(chi) a(chi)|| = ||chi||^2", qn_single, 1e-12);

    let traces = max_of(par_cases(20, |i| {
        let mut rng = case_rng(seed, "measure/trace", i as u64);
        let rho = random_positive(spec, &mut rng)?;
        let tr = rho.trace().re;
        let bin = bins[rng.gen_range(0..bins.len())];
        let ns = divisors(bin.width());
        let n = ns[rng.gen_range(0..ns.len())];
        let sum = kraus_riemann_sum_unnormalized(spec, bin, n)?.action(&rho)?.trace().re;
        let quad = CPMeasureBin::quadrature(spec, bin)?.action(&rho)?.trace().re;
        Ok::<_, carlab_core::Error>(sum.max(quad) / tr)
    }));
    checks.at_most("riemann_sum_trace_non_increase", "Sigma_n does not increase trace", traces, 1.0 + 1e-12).detail =
        "largest Tr(out) / Tr(rho) for unnormalized sums and the quadrature measure on random mixtures".into();

    let cp = min_of(all_bins(&small).into_iter().map(|b| {
        let s = CPMeasureBin::quadrature(small, b)?.heisenberg_superoperator()?;
        Ok::<_, carlab_core::Error>(is_completely_positive(&s, config.tol_cp).min_eigenvalue)
    }));
    checks.at_least("measure_is_completely_positive", "M([t,s)) is completely positive", cp, -config.tol_cp);

    let wm = wide.num_points();
    let cov = max_of(par_cases(24, |i| {
        let mut rng = case_rng(seed, "measure/covariance", i as u64);
        let r = 1 + i % 3;
        let state = state_below(wide, 1 + i % 2, 1 + (i / 2) % 2, wide.support_end() - r, &mut rng)?;
        let lo = rng.gen_range(0..wm - r - 1);
        let hi = rng.gen_range(lo + 1..=wm - r);
        let d = carlab_core::measure::covariance_residual(wide, r, TimeBin::new(&wide, lo, hi)?, &state)?;
        Ok::<_, carlab_core::Error>(relative(d.residual, d.scale))
    }));
    checks.at_most("covariance", "M_*([t,s)) o Psi_r = M_*([t+r,s+r))", cov, tol).detail =
        format!("24 random states and grid-aligned shifts on {wm} points");

    let misaligned = min_of(par_cases(config.negative_cases, |i| {
        let mut rng = case_rng(seed, "measure/misaligned", i as u64);
        let state = state_below(wide, 1, 1, wide.support_end() - 2, &mut rng)?;
        let rho = state.to_low_rank()?;
        let bin = TimeBin::new(&wide, 0, 4)?;
        let lhs = CPMeasureBin::quadrature(wide, bin)?.action(&psi_low_rank(1, &rho))?;
        let rhs = CPMeasureBin::quadrature(wide, bin.shifted(&wide, 2)?)?.action(&rho)?;
        Ok::<_, carlab_core::Error>(relative(lhs.sub(&rhs).trace_norm(), lhs.trace_norm() + rhs.trace_norm()))
    }));
    checks.exceeds(
        "covariance_needs_matching_shift",
        "M_*([t,s)) o Psi_r = M_*([t+r,s+r))",
        misaligned,
        config.negative_factor * tol,
    );

    let additive = max_of(par_cases(20, |i| {
        let mut rng = case_rng(seed, "measure/additivity", i as u64);
        let state = RankOneState::random(wide, 1 + i % 2, 1 + (i / 2) % 2, &mut rng);
        let mut edges = vec![0, wm];
        for _ in 0..3 {
            edges.push(rng.gen_range(1..wm));
        }
        edges.sort_unstable();
        edges.dedup();
        let parts: Vec<TimeBin> =
            edges.windows(2).map(|w| TimeBin::new(&wide, w[0], w[1])).collect::<CoreResult<_>>()?;
        let d = carlab_core::measure::additivity_residual(wide, &parts, &state)?;
        Ok::<_, carlab_core::Error>(relative(d.residual, d.scale))
    }));
    checks.at_most("additivity_on_partitions", "M is additive over disjoint bins", additive, tol);

    checks.table(kraus_sweep(config, &config.kraus_n));
    checks.table(small_time_sweep(config, config.halvings + 1));
    checks.finish("measure")
}
